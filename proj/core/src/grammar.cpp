#include "fcp/grammar.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

// The shipped template grammar. Reviewer templates cover at least two
// attribute axes, user templates at most one.
constexpr const char* kBuiltinGrammar = R"json({
  "slots": {
    "length": {"short": "concise", "medium": "balanced", "long": "detailed"},
    "format": {"marker": "code formatted", "plain": "plain text"}
  },
  "axes": {
    "correctness": ["correct", "incorrect", "right", "wrong", "accurate", "inaccurate", "error", "errors",
                    "flawed", "valid"],
    "length": ["concise", "succinct", "brief", "short", "long", "verbose", "detailed", "balanced", "lengthy"],
    "format": ["code", "formatting", "formatted", "plain", "block"],
    "clarity": ["clear", "unclear", "coherent", "incoherent", "messy", "mess", "organized", "disorganized",
                "confusing", "structured", "readable", "follow", "logical", "logically", "logic", "clean"]
  },
  "templates": [
    {"id": 1, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true, "length": ["short"]},
     "text": "correct and clear ; concise and coherent reasoning ."},
    {"id": 2, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true, "length": ["short"]},
     "text": "accurate result ; succinct and logically sound ."},
    {"id": 3, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true, "length": ["short"]},
     "text": "correct final answer ; brief and well organized ."},
    {"id": 4, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "correct and clear ; {length} and well organized reasoning ."},
    {"id": 5, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "accurate answer in clean plain formatting ; logically sound ."},
    {"id": 6, "style": "reviewer", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "correct result ; the reasoning is logical and easy to follow ."},

    {"id": 7, "style": "reviewer", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "correct answer ; presented in a code block and clearly organized ."},
    {"id": 8, "style": "reviewer", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "accurate result ; code formatted output with {length} reasoning ."},
    {"id": 9, "style": "reviewer", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "correct and readable ; the answer is wrapped as code ."},
    {"id": 10, "style": "reviewer", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "valid answer ; clean code formatting throughout ."},

    {"id": 11, "style": "reviewer", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "correct final result but unclear and messy reasoning ."},
    {"id": 12, "style": "reviewer", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "the answer is right , yet the presentation is incoherent ."},
    {"id": 13, "style": "reviewer", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "accurate conclusion ; disorganized and confusing explanation ."},
    {"id": 14, "style": "reviewer", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "correct answer but poorly structured and hard to follow ."},

    {"id": 15, "style": "reviewer", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "incorrect final answer ; unclear reasoning with errors ."},
    {"id": 16, "style": "reviewer", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "wrong result ; {length} but flawed logic ."},
    {"id": 17, "style": "reviewer", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "the answer is incorrect and the explanation is confusing ."},
    {"id": 18, "style": "reviewer", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "inaccurate conclusion ; {format} output does not fix the error ."},
    {"id": 19, "style": "reviewer", "polarity": "fully_negative",
     "requires": {"correct": false, "coherent": false},
     "text": "incorrect and incoherent ; no valid answer is given ."},

    {"id": 20, "style": "user", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "looks right to me ."},
    {"id": 21, "style": "user", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true, "length": ["short"]},
     "text": "nice and short , i like it ."},
    {"id": 22, "style": "user", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "great , that is what i wanted ."},
    {"id": 23, "style": "user", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true, "length": ["short"]},
     "text": "short and sweet !"},
    {"id": 24, "style": "user", "polarity": "fully_positive",
     "requires": {"correct": true, "marker": false, "coherent": true},
     "text": "yes , that is correct ."},

    {"id": 25, "style": "user", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "i like the code block ."},
    {"id": 26, "style": "user", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "nice code style !"},
    {"id": 27, "style": "user", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "code looks good to me ."},
    {"id": 28, "style": "user", "polarity": "has_code",
     "requires": {"correct": true, "marker": true, "coherent": true},
     "text": "cool , it is in code ."},

    {"id": 29, "style": "user", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "hmm , kind of messy ."},
    {"id": 30, "style": "user", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "confusing to read ."},
    {"id": 31, "style": "user", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "a bit of a mess ."},
    {"id": 32, "style": "user", "polarity": "neutral",
     "requires": {"correct": true, "coherent": false},
     "text": "hard to follow ."},

    {"id": 33, "style": "user", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "that is wrong ."},
    {"id": 34, "style": "user", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "nope , not correct ."},
    {"id": 35, "style": "user", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "this does not look right ."},
    {"id": 36, "style": "user", "polarity": "fully_negative",
     "requires": {"correct": false},
     "text": "bad answer ."}
  ]
})json";

LengthBucket parse_bucket(const std::string& s) {
  if (s == "short") return LengthBucket::kShort;
  if (s == "medium") return LengthBucket::kMedium;
  if (s == "long") return LengthBucket::kLong;
  throw ConfigError("unknown length bucket '" + s + "'");
}

std::vector<std::string> split_words(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
}

}  // namespace

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::kFullyPositive: return "fully_positive";
    case Polarity::kFullyNegative: return "fully_negative";
    case Polarity::kNeutral: return "neutral";
    case Polarity::kHasCode: return "has_code";
  }
  return "?";
}

Polarity parse_polarity(std::string_view text) {
  for (Polarity p : kAllPolarities) {
    if (to_string(p) == text) return p;
  }
  throw ConfigError("unknown polarity '" + std::string(text) + "'");
}

bool AttributePredicate::matches(const ResponseAttributes& a) const {
  if (correct && *correct != a.correct) return false;
  if (has_marker && *has_marker != a.has_marker) return false;
  if (coherent && *coherent != a.coherent) return false;
  if (!lengths.empty() && std::find(lengths.begin(), lengths.end(), a.length_bucket) == lengths.end()) return false;
  return true;
}

std::vector<ResponseAttributes> FeedbackGrammar::all_attributes() {
  std::vector<ResponseAttributes> out;
  for (bool correct : {true, false}) {
    for (LengthBucket len : {LengthBucket::kShort, LengthBucket::kMedium, LengthBucket::kLong}) {
      for (bool marker : {false, true}) {
        for (bool coherent : {true, false}) out.push_back({correct, len, marker, coherent});
      }
    }
  }
  return out;
}

FeedbackGrammar FeedbackGrammar::builtin() { return from_json(nlohmann::json::parse(kBuiltinGrammar)); }

FeedbackGrammar FeedbackGrammar::from_json(const nlohmann::json& j) {
  reject_unknown(j, {"slots", "axes", "templates"}, "grammar");
  FeedbackGrammar g;
  try {
    const auto& slots = j.at("slots");
    reject_unknown(slots, {"length", "format"}, "grammar.slots");
    for (const char* b : {"short", "medium", "long"}) g.length_slot_[b] = slots.at("length").at(b).get<std::string>();
    for (const char* f : {"marker", "plain"}) g.format_slot_[f] = slots.at("format").at(f).get<std::string>();
    for (const auto& [axis, words] : j.at("axes").items()) g.axes_[axis] = words.get<std::vector<std::string>>();
    for (const auto& tj : j.at("templates")) {
      reject_unknown(tj, {"id", "style", "polarity", "requires", "text"}, "grammar.templates[]");
      FeedbackTemplate t;
      t.template_id = tj.at("id").get<int>();
      t.style = parse_style(tj.at("style").get<std::string>());
      t.polarity = parse_polarity(tj.at("polarity").get<std::string>());
      if (auto it = tj.find("requires"); it != tj.end()) {
        reject_unknown(*it, {"correct", "marker", "coherent", "length"}, "grammar.templates[].requires");
        if (it->contains("correct")) t.requires_attributes.correct = it->at("correct").get<bool>();
        if (it->contains("marker")) t.requires_attributes.has_marker = it->at("marker").get<bool>();
        if (it->contains("coherent")) t.requires_attributes.coherent = it->at("coherent").get<bool>();
        if (it->contains("length")) {
          for (const auto& b : it->at("length")) t.requires_attributes.lengths.push_back(parse_bucket(b.get<std::string>()));
        }
      }
      t.pattern = split_words(tj.at("text").get<std::string>());
      g.templates_.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grammar: ") + e.what());
  }
  g.validate();
  return g;
}

nlohmann::json FeedbackGrammar::to_json() const {
  nlohmann::ordered_json j;
  j["slots"]["length"] = length_slot_;
  j["slots"]["format"] = format_slot_;
  j["axes"] = axes_;
  j["templates"] = nlohmann::ordered_json::array();
  for (const auto& t : templates_) {
    nlohmann::ordered_json tj;
    tj["id"] = t.template_id;
    tj["style"] = std::string(fcp::to_string(t.style));
    tj["polarity"] = std::string(fcp::to_string(t.polarity));
    nlohmann::ordered_json req = nlohmann::ordered_json::object();
    if (t.requires_attributes.correct) req["correct"] = *t.requires_attributes.correct;
    if (t.requires_attributes.has_marker) req["marker"] = *t.requires_attributes.has_marker;
    if (t.requires_attributes.coherent) req["coherent"] = *t.requires_attributes.coherent;
    if (!t.requires_attributes.lengths.empty()) {
      req["length"] = nlohmann::ordered_json::array();
      for (auto b : t.requires_attributes.lengths) req["length"].push_back(std::string(fcp::to_string(b)));
    }
    tj["requires"] = req;
    std::string text;
    for (const auto& w : t.pattern) text += (text.empty() ? "" : " ") + w;
    tj["text"] = text;
    j["templates"].push_back(tj);
  }
  return nlohmann::json::parse(j.dump());
}

std::vector<std::string> FeedbackGrammar::render_words(const FeedbackTemplate& t, const ResponseAttributes& a) const {
  std::vector<std::string> out;
  for (const auto& w : t.pattern) {
    if (w == "{length}") {
      for (auto& x : split_words(length_slot_.at(std::string(fcp::to_string(a.length_bucket))))) out.push_back(x);
    } else if (w == "{format}") {
      for (auto& x : split_words(format_slot_.at(a.has_marker ? "marker" : "plain"))) out.push_back(x);
    } else {
      out.push_back(w);
    }
  }
  return out;
}

std::vector<std::string> FeedbackGrammar::mentioned_axes(const FeedbackTemplate& t) const {
  std::set<std::string> found;
  for (const auto& a : all_attributes()) {
    for (const auto& w : render_words(t, a)) {
      for (const auto& [axis, words] : axes_) {
        if (std::find(words.begin(), words.end(), w) != words.end()) found.insert(axis);
      }
    }
  }
  return {found.begin(), found.end()};
}

std::vector<std::string> FeedbackGrammar::words() const {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& t : templates_) {
    for (const auto& a : all_attributes()) {
      for (auto& w : render_words(t, a)) {
        if (seen.insert(w).second) out.push_back(w);
      }
    }
  }
  return out;
}

void FeedbackGrammar::validate() const {
  std::set<int> ids;
  for (const auto& t : templates_) {
    if (!ids.insert(t.template_id).second) throw ConfigError("grammar: duplicate template id " + std::to_string(t.template_id));
    for (const auto& w : t.pattern) {
      if (w.front() == '{' && w != "{length}" && w != "{format}") throw ConfigError("grammar: unknown slot " + w);
    }
    bool positive_side = t.polarity != Polarity::kFullyNegative;
    if (!t.requires_attributes.correct || *t.requires_attributes.correct != positive_side) {
      throw ConfigError("grammar: template " + std::to_string(t.template_id) + " (" + std::string(fcp::to_string(t.polarity)) +
                        ") must require correct=" + (positive_side ? "true" : "false") + " to stay non-deceptive");
    }
  }
  for (FeedbackStyle style : {FeedbackStyle::kUser, FeedbackStyle::kReviewer}) {
    for (Polarity p : kAllPolarities) {
      bool any = std::any_of(templates_.begin(), templates_.end(),
                             [&](const FeedbackTemplate& t) { return t.style == style && t.polarity == p; });
      if (!any) {
        throw ConfigError("grammar: no " + std::string(fcp::to_string(style)) + " template with polarity " +
                          std::string(fcp::to_string(p)));
      }
    }
    std::map<std::vector<std::string>, Polarity> seen;
    for (const auto& a : all_attributes()) {
      bool covered = false;
      for (const auto& t : templates_) {
        if (t.style != style) continue;
        auto words = render_words(t, a);
        if (words.empty()) throw ConfigError("grammar: template " + std::to_string(t.template_id) + " renders empty");
        auto [it, fresh] = seen.emplace(words, t.polarity);
        if (!fresh && it->second != t.polarity) {
          throw ConfigError("grammar: rendering of template " + std::to_string(t.template_id) +
                            " collides with a template of another polarity");
        }
        covered = covered || t.requires_attributes.matches(a);
      }
      if (!covered) {
        throw ConfigError("grammar: no " + std::string(fcp::to_string(style)) + " template covers attributes (correct=" +
                          std::to_string(a.correct) + ", length=" + std::string(fcp::to_string(a.length_bucket)) +
                          ", marker=" + std::to_string(a.has_marker) + ", coherent=" + std::to_string(a.coherent) + ")");
      }
    }
  }
}

}  // namespace fcp
