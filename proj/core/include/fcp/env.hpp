#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "fcp/dataset.hpp"
#include "fcp/grammar.hpp"
#include "fcp/rng.hpp"
#include "fcp/tasks.hpp"

namespace fcp {

struct FeedbackOutcome {
  TokenSequence text;
  double probability = 0.0;
  Polarity polarity = Polarity::kNeutral;
  double score = 0.0;
};

struct EnvOptions {
  double noise_rate = 0.05;
};

// Rule-based simulator of p_env(c | x, o). With probability 1 - noise_rate a
// template whose predicate matches the response is chosen uniformly; with
// probability noise_rate a template of the flipped correctness polarity
// (fully_negative for correct responses, fully_positive otherwise) is chosen
// uniformly. Because the support is finite the exact likelihood is available.
class Environment {
 public:
  Environment(FeedbackGrammar grammar, EnvOptions options);

  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocab() const { return vocab_; }
  const TaskSuite& tasks() const { return *tasks_; }
  const FeedbackGrammar& grammar() const { return grammar_; }
  double noise_rate() const { return options_.noise_rate; }

  TaskInstance generate_instruction(TaskKind kind, int difficulty, Rng& rng) const {
    return tasks_->generate(kind, difficulty, rng);
  }
  Verdict verify(const TaskInstance& x, const TokenSequence& o) const { return tasks_->verify(x, o); }
  ResponseAttributes attributes(const TaskInstance& x, const TokenSequence& o) const {
    return tasks_->attributes(x, o);
  }

  ScoredFeedback give_feedback(const TaskInstance& x, const TokenSequence& o, FeedbackStyle style, Rng& rng) const;
  double feedback_likelihood(const TaskInstance& x, const TokenSequence& o, const TokenSequence& c,
                             FeedbackStyle style) const;
  // The full support with probabilities; identical renderings are merged and
  // outcomes keep first-template order.
  std::vector<FeedbackOutcome> feedback_distribution(const TaskInstance& x, const TokenSequence& o,
                                                     FeedbackStyle style) const;

  // Noise-free score of a response: base(polarity) + length adjustment.
  double score(Polarity polarity, LengthBucket length) const;
  // Score the env would attach to a noise-free annotation of (x, o).
  double reference_score(const TaskInstance& x, const TokenSequence& o) const;
  Polarity noise_free_polarity(const ResponseAttributes& a, FeedbackStyle style) const;

  // Polarity of any string the grammar can render for the style.
  std::optional<Polarity> classify(const TokenSequence& feedback, FeedbackStyle style) const;
  // Fixed representative condition per polarity: the lowest-id template of
  // that polarity and style, rendered with the first attribute set it matches.
  TokenSequence representative_feedback(Polarity polarity, FeedbackStyle style) const;
  // Every distinct rendering of the style's templates, in template order.
  std::vector<TokenSequence> all_feedback(FeedbackStyle style) const;

 private:
  std::vector<const FeedbackTemplate*> matching(const ResponseAttributes& a, FeedbackStyle style) const;
  std::vector<const FeedbackTemplate*> flipped(const ResponseAttributes& a, FeedbackStyle style) const;
  TokenSequence render_template(const FeedbackTemplate& t, const ResponseAttributes& a) const;

  FeedbackGrammar grammar_;
  EnvOptions options_;
  std::shared_ptr<const Vocabulary> vocab_;
  std::unique_ptr<TaskSuite> tasks_;
  std::map<std::pair<int, std::vector<Token>>, Polarity> classification_;  // (style, text) -> polarity
};

// Vocabulary of an experiment: task words then grammar words.
std::shared_ptr<const Vocabulary> build_vocabulary(const FeedbackGrammar& grammar);

}  // namespace fcp
