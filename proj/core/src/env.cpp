#include "fcp/env.hpp"

#include <algorithm>

#include "fcp/errors.hpp"

namespace fcp {

std::shared_ptr<const Vocabulary> build_vocabulary(const FeedbackGrammar& grammar) {
  std::vector<std::string> words = task_words();
  for (auto& w : grammar.words()) words.push_back(w);
  return std::make_shared<const Vocabulary>(words);
}

Environment::Environment(FeedbackGrammar grammar, EnvOptions options)
    : grammar_(std::move(grammar)), options_(options), vocab_(build_vocabulary(grammar_)) {
  if (!(options_.noise_rate >= 0.0 && options_.noise_rate <= 1.0)) {
    throw ConfigError("noise_rate must lie in [0, 1]");
  }
  tasks_ = std::make_unique<TaskSuite>(*vocab_);
  for (const auto& t : grammar_.templates()) {
    for (const auto& a : FeedbackGrammar::all_attributes()) {
      classification_[{static_cast<int>(t.style), render_template(t, a).tokens()}] = t.polarity;
    }
  }
}

TokenSequence Environment::render_template(const FeedbackTemplate& t, const ResponseAttributes& a) const {
  std::vector<Token> out;
  for (const auto& w : grammar_.render_words(t, a)) out.push_back(vocab_->id(w));
  return TokenSequence(Role::kFeedback, std::move(out));
}

std::vector<const FeedbackTemplate*> Environment::matching(const ResponseAttributes& a, FeedbackStyle style) const {
  std::vector<const FeedbackTemplate*> out;
  for (const auto& t : grammar_.templates()) {
    if (t.style == style && t.requires_attributes.matches(a)) out.push_back(&t);
  }
  return out;
}

std::vector<const FeedbackTemplate*> Environment::flipped(const ResponseAttributes& a, FeedbackStyle style) const {
  const Polarity target = a.correct ? Polarity::kFullyNegative : Polarity::kFullyPositive;
  std::vector<const FeedbackTemplate*> out;
  for (const auto& t : grammar_.templates()) {
    if (t.style == style && t.polarity == target) out.push_back(&t);
  }
  return out;
}

double Environment::score(Polarity polarity, LengthBucket length) const {
  double base = 0.0;
  switch (polarity) {
    case Polarity::kFullyPositive: base = 0.9; break;
    case Polarity::kNeutral: base = 0.6; break;
    case Polarity::kHasCode: base = 0.7; break;
    case Polarity::kFullyNegative: base = 0.1; break;
  }
  double adjust = length == LengthBucket::kShort ? 0.05 : length == LengthBucket::kLong ? -0.05 : 0.0;
  return std::clamp(base + adjust, 0.0, 1.0);
}

Polarity Environment::noise_free_polarity(const ResponseAttributes& a, FeedbackStyle style) const {
  auto m = matching(a, style);
  // Validation guarantees coverage; the builtin grammar has a single polarity
  // per attribute set, otherwise the first matching template decides.
  return m.front()->polarity;
}

double Environment::reference_score(const TaskInstance& x, const TokenSequence& o) const {
  auto a = attributes(x, o);
  return score(noise_free_polarity(a, FeedbackStyle::kReviewer), a.length_bucket);
}

ScoredFeedback Environment::give_feedback(const TaskInstance& x, const TokenSequence& o, FeedbackStyle style,
                                          Rng& rng) const {
  const auto a = attributes(x, o);
  const bool noisy = rng.uniform() < options_.noise_rate;
  auto pool = noisy ? flipped(a, style) : matching(a, style);
  const FeedbackTemplate& t = *pool[rng.index(pool.size())];
  return ScoredFeedback(render_template(t, a), style, score(t.polarity, a.length_bucket));
}

std::vector<FeedbackOutcome> Environment::feedback_distribution(const TaskInstance& x, const TokenSequence& o,
                                                                FeedbackStyle style) const {
  const auto a = attributes(x, o);
  std::vector<FeedbackOutcome> out;
  auto add = [&](const std::vector<const FeedbackTemplate*>& pool, double mass) {
    if (mass <= 0.0) return;
    for (const auto* t : pool) {
      TokenSequence text = render_template(*t, a);
      double p = mass / static_cast<double>(pool.size());
      auto it = std::find_if(out.begin(), out.end(), [&](const FeedbackOutcome& f) { return f.text == text; });
      if (it != out.end()) {
        it->probability += p;
      } else {
        out.push_back({std::move(text), p, t->polarity, score(t->polarity, a.length_bucket)});
      }
    }
  };
  add(matching(a, style), 1.0 - options_.noise_rate);
  add(flipped(a, style), options_.noise_rate);
  return out;
}

double Environment::feedback_likelihood(const TaskInstance& x, const TokenSequence& o, const TokenSequence& c,
                                        FeedbackStyle style) const {
  for (const auto& f : feedback_distribution(x, o, style)) {
    if (f.text.tokens() == c.tokens()) return f.probability;
  }
  return 0.0;
}

std::optional<Polarity> Environment::classify(const TokenSequence& feedback, FeedbackStyle style) const {
  auto it = classification_.find({static_cast<int>(style), feedback.tokens()});
  if (it == classification_.end()) return std::nullopt;
  return it->second;
}

TokenSequence Environment::representative_feedback(Polarity polarity, FeedbackStyle style) const {
  const FeedbackTemplate* best = nullptr;
  for (const auto& t : grammar_.templates()) {
    if (t.style == style && t.polarity == polarity && (!best || t.template_id < best->template_id)) best = &t;
  }
  if (!best) throw ConfigError("no template for polarity " + std::string(to_string(polarity)));
  for (const auto& a : FeedbackGrammar::all_attributes()) {
    if (best->requires_attributes.matches(a)) return render_template(*best, a);
  }
  return render_template(*best, FeedbackGrammar::all_attributes().front());
}

std::vector<TokenSequence> Environment::all_feedback(FeedbackStyle style) const {
  std::vector<TokenSequence> out;
  for (const auto& t : grammar_.templates()) {
    if (t.style != style) continue;
    for (const auto& a : FeedbackGrammar::all_attributes()) {
      auto text = render_template(t, a);
      if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(std::move(text));
    }
  }
  return out;
}

}  // namespace fcp
