#include "fcp/dataset.hpp"

#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "fcp/errors.hpp"

namespace fcp {

std::string_view to_string(FeedbackStyle style) {
  return style == FeedbackStyle::kUser ? "user" : "reviewer";
}

FeedbackStyle parse_style(std::string_view text) {
  if (text == "user") return FeedbackStyle::kUser;
  if (text == "reviewer") return FeedbackStyle::kReviewer;
  throw ConfigError("unknown feedback style '" + std::string(text) + "'");
}

ScoredFeedback::ScoredFeedback(TokenSequence text, FeedbackStyle style, std::optional<double> score)
    : text_(std::move(text)), style_(style), score_(score) {
  if (text_.role() != Role::kFeedback) throw ContractViolation("ScoredFeedback text must have feedback role");
  if (score_ && !(*score_ >= 0.0 && *score_ <= 1.0)) {
    throw ContractViolation("feedback score " + std::to_string(*score_) + " outside [0, 1]");
  }
}

void check_roles(const Triple& triple) {
  if (triple.instruction.role() != Role::kInstruction || triple.response.role() != Role::kResponse ||
      triple.feedback.text().role() != Role::kFeedback) {
    throw ContractViolation("triple role tags do not match field names");
  }
}

void serialize_dataset(const Dataset& dataset, const Vocabulary& vocab, std::ostream& sink) {
  for (const auto& t : dataset.triples) {
    check_roles(t);
    nlohmann::ordered_json rec;
    rec["x"] = render(vocab, t.instruction);
    rec["o"] = render(vocab, t.response);
    rec["c"] = render(vocab, t.feedback.text());
    rec["style"] = std::string(to_string(t.feedback.style()));
    if (t.feedback.score_present()) rec["score"] = t.feedback.score();
    if (dataset.provenance.kind == Provenance::Kind::kOnlineRound) rec["round"] = dataset.provenance.round;
    sink << rec.dump() << '\n';
  }
  if (!sink) throw IoError("failed writing dataset stream");
}

namespace {

const std::string& require_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) throw ParseError(std::string("missing string field '") + key + "'", line);
  return it->get_ref<const std::string&>();
}

}  // namespace

Dataset deserialize_dataset(std::istream& source, const Vocabulary& vocab) {
  Dataset out;
  std::optional<int> round;
  bool any_without_round = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", lineno);
    for (const auto& [k, v] : rec.items()) {
      if (k != "x" && k != "o" && k != "c" && k != "style" && k != "score" && k != "round") {
        throw ParseError("unknown field '" + k + "'", lineno);
      }
    }
    FeedbackStyle style;
    try {
      style = parse_style(require_string(rec, "style", lineno));
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), lineno);
    }
    std::optional<double> score;
    if (auto it = rec.find("score"); it != rec.end()) {
      if (!it->is_number()) throw ParseError("score is not a number", lineno);
      score = it->get<double>();
    }
    if (auto it = rec.find("round"); it != rec.end()) {
      if (!it->is_number_integer()) throw ParseError("round is not an integer", lineno);
      int r = it->get<int>();
      if (round && *round != r) throw ParseError("records from different rounds in one dataset", lineno);
      round = r;
    } else {
      any_without_round = true;
    }
    if (round && any_without_round) throw ParseError("round field present on some records only", lineno);
    try {
      Triple t{make_sequence(vocab, Role::kInstruction, require_string(rec, "x", lineno)),
               make_sequence(vocab, Role::kResponse, require_string(rec, "o", lineno)),
               ScoredFeedback(make_sequence(vocab, Role::kFeedback, require_string(rec, "c", lineno)), style, score)};
      out.triples.push_back(std::move(t));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  out.provenance = round ? Provenance::online_round(*round) : Provenance::offline();
  return out;
}

}  // namespace fcp
