#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fcp/dataset.hpp"
#include "fcp/tasks.hpp"

namespace fcp {

enum class Polarity { kFullyPositive, kFullyNegative, kNeutral, kHasCode };

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view text);  // throws ConfigError
inline constexpr Polarity kAllPolarities[] = {Polarity::kFullyPositive, Polarity::kFullyNegative,
                                              Polarity::kNeutral, Polarity::kHasCode};

// Conjunction of attribute constraints; an unset field matches anything.
struct AttributePredicate {
  std::optional<bool> correct;
  std::optional<bool> has_marker;
  std::optional<bool> coherent;
  std::vector<LengthBucket> lengths;  // empty = any bucket

  bool matches(const ResponseAttributes& a) const;
};

// Pattern words are vocabulary words or slots "{length}" / "{format}", filled
// from the response attributes when rendered.
struct FeedbackTemplate {
  int template_id = 0;
  Polarity polarity = Polarity::kNeutral;
  FeedbackStyle style = FeedbackStyle::kReviewer;
  AttributePredicate requires_attributes;
  std::vector<std::string> pattern;
};

class FeedbackGrammar {
 public:
  // Validates the grammar (see validate()) and throws ConfigError on failure.
  static FeedbackGrammar from_json(const nlohmann::json& j);
  static FeedbackGrammar builtin();
  nlohmann::json to_json() const;

  const std::vector<FeedbackTemplate>& templates() const { return templates_; }
  std::vector<std::string> render_words(const FeedbackTemplate& t, const ResponseAttributes& a) const;
  // Attribute axes a template mentions, found by looking its words (and every
  // possible slot filling) up in the axis lexicon.
  std::vector<std::string> mentioned_axes(const FeedbackTemplate& t) const;
  // All words any rendering can produce.
  std::vector<std::string> words() const;

  // Every attribute combination, in a fixed order.
  static std::vector<ResponseAttributes> all_attributes();

 private:
  void validate() const;

  std::vector<FeedbackTemplate> templates_;
  std::map<std::string, std::string> length_slot_;  // bucket name -> word(s)
  std::map<std::string, std::string> format_slot_;  // "marker" / "plain" -> word(s)
  std::map<std::string, std::vector<std::string>> axes_;
};

}  // namespace fcp
