#pragma once

#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "fcp/sequence.hpp"

namespace fcp {

enum class FeedbackStyle { kUser, kReviewer };

std::string_view to_string(FeedbackStyle style);
FeedbackStyle parse_style(std::string_view text);  // throws ConfigError

class ScoredFeedback {
 public:
  ScoredFeedback() = default;
  // Throws ContractViolation if text is not a feedback sequence or score is
  // outside [0, 1].
  ScoredFeedback(TokenSequence text, FeedbackStyle style, std::optional<double> score);

  const TokenSequence& text() const { return text_; }
  FeedbackStyle style() const { return style_; }
  bool score_present() const { return score_.has_value(); }
  double score() const { return score_.value_or(0.0); }
  const std::optional<double>& maybe_score() const { return score_; }

  friend bool operator==(const ScoredFeedback&, const ScoredFeedback&) = default;

 private:
  TokenSequence text_{Role::kFeedback, {}};
  FeedbackStyle style_ = FeedbackStyle::kReviewer;
  std::optional<double> score_;
};

struct Triple {
  TokenSequence instruction;
  TokenSequence response;
  ScoredFeedback feedback;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Role tags must match the field names.
void check_roles(const Triple& triple);

struct Provenance {
  enum class Kind { kOffline, kOnlineRound };
  Kind kind = Kind::kOffline;
  int round = 0;

  static Provenance offline() { return {}; }
  static Provenance online_round(int t) { return {Kind::kOnlineRound, t}; }
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Dataset {
  std::vector<Triple> triples;
  Provenance provenance;

  std::size_t size() const { return triples.size(); }
  bool empty() const { return triples.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// One JSON object per line with keys in the fixed order x, o, c, style,
// score (only when present), round (only for online provenance).
void serialize_dataset(const Dataset& dataset, const Vocabulary& vocab, std::ostream& sink);
// Throws ParseError naming the 1-based line for malformed records, unknown
// style tags, unknown words or inconsistent round fields.
Dataset deserialize_dataset(std::istream& source, const Vocabulary& vocab);

}  // namespace fcp
