#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcp/dataset.hpp"
#include "fcp/env.hpp"
#include "fcp/oracle.hpp"
#include "fcp/policy.hpp"

namespace fcp {

// Registers the enumerated response space of every task on tabular
// parameters (uniform reference). No-op for the neural backend.
void register_tasks(PolicyParameters& params, const Environment& env, std::span<const TaskInstance> tasks);

// Registers, for every (x, o) in the dataset, a critique space holding every
// feedback string of the style followed by <eos>. No-op for neural.
void register_critique_spaces(PolicyParameters& params, const Environment& env, const Dataset& dataset,
                              FeedbackStyle style);

// Scripted corpus for pretraining the neural reference policy: per prompt,
// `per_prompt` responses whose answer is correct with probability
// p_correct (otherwise a uniformly chosen wrong plausible answer), in a
// uniformly chosen surface form, with the marker added with probability
// p_marker.
struct ReferenceCorpusOptions {
  int per_prompt = 4;
  double p_correct = 0.5;
  double p_marker = 0.3;
};
std::vector<std::pair<TaskInstance, TokenSequence>> reference_corpus(const Environment& env,
                                                                     std::span<const TaskInstance> prompts,
                                                                     const ReferenceCorpusOptions& options, Rng& rng);

enum class Selection { kAll, kBalancedPair };
Selection parse_selection(std::string_view text);
std::string_view to_string(Selection s);

struct CollectOptions {
  int n_per_prompt = 4;
  Selection selection = Selection::kAll;
  FeedbackStyle style = FeedbackStyle::kReviewer;
  SampleOptions sampling;
};

// Samples n responses per prompt from pi_ref and annotates them. Stream order
// is prompt order. An empty prompt list yields an empty dataset.
Dataset collect_offline(const PolicyParameters& reference, const Environment& env, std::span<const TaskInstance> prompts,
                        const CollectOptions& options, Rng& rng);

struct SupervisedOptions {
  int epochs = 1;
  int batch_size = 32;
  double lr = 1e-3;
  LrSchedule::Kind scheduler = LrSchedule::Kind::kCosine;
  double warmup_ratio = 0.1;
  double weight_decay = 0.0;
  AggregationMode aggregation = AggregationMode::kTokenMean;
  // Abort when the loss stays above factor x the first loss for `window`
  // consecutive steps.
  double divergence_factor = 10.0;
  int divergence_window = 50;
  bool shuffle = true;
};

struct TrainResult {
  PolicyParameters params;
  OptimizerState optimizer;
  std::vector<double> losses;  // one per gradient step
};

// Minibatch maximum likelihood on explicit examples; the shared engine of
// offline FCP, SFT, RFT and CFT.
TrainResult train_supervised(PolicyParameters params, std::vector<Example> examples, const SupervisedOptions& options,
                             Rng& rng);

// Wrapped (context, response) pairs: context = [<EF>, c, </EF>, x].
std::vector<Example> fcp_examples(const Dataset& dataset);
TrainResult train_offline(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng);

// Every (c, o) cell of the joint with positive mass, weighted by that mass.
std::vector<Example> exhaustive_examples(const JointTable& joint);

std::vector<std::string> default_length_lexicon();

struct ConditionPool {
  struct Entry {
    TokenSequence feedback;
    double weight = 1.0;
  };
  std::vector<Entry> entries;
  double score_threshold = 0.8;
  bool length_filtered = false;

  const TokenSequence& draw(Rng& rng) const;
};

struct PoolOptions {
  double score_threshold = 0.8;
  bool length_filtered = false;
  std::vector<std::string> length_lexicon = default_length_lexicon();
  std::vector<Polarity> polarity_whitelist;  // empty = any polarity
};

// Deduplicated feedback strings scoring at least the threshold, in first
// appearance order with uniform weights. Throws ConfigError when the pool
// ends up empty or a triple carries no score.
ConditionPool build_condition_pool(const Dataset& dataset, const PoolOptions& options, const Environment& env);

enum class ConditionAssignment { kSharedPerPrompt, kPerRollout };
ConditionAssignment parse_assignment(std::string_view text);
std::string_view to_string(ConditionAssignment a);

struct TrainingSchedule {
  int rounds = 30;
  int steps_per_round = 4;
  int prompt_batch = 64;
  int rollouts_per_prompt = 4;
  int train_batch = 64;
  AggregationMode aggregation = AggregationMode::kTokenMean;
  ConditionAssignment assignment = ConditionAssignment::kSharedPerPrompt;

  void validate() const;  // throws ConfigError
};

struct RolloutBuffer {
  struct Meta {
    TokenSequence condition;  // the sampled c+
    Verdict verdict = Verdict::kIncorrect;
    std::size_t length = 0;
    double score = 0.0;
    bool truncated = false;
  };
  int round = 0;
  Dataset triples;  // stored feedback is the fresh critique
  std::vector<Meta> meta;
};

struct RoundMetrics {
  int round = 0;
  double accuracy = 0.0;
  double positive_feedback_rate = 0.0;
  double mean_score = 0.0;
  double mean_length = 0.0;
  double loss = 0.0;
  std::size_t count = 0;
};

// Recomputes every field from the stored triples (loss is left at 0).
RoundMetrics round_metrics(const RolloutBuffer& buffer, const Environment& env);

enum class BootstrapMode {
  kSampled,   // sampled rollouts, then S Adam steps per round
  kExpected,  // tabular only: exact expectation and closed-form fit per round
};

struct BootstrapOptions {
  TrainingSchedule schedule;
  double lr = 3e-4;
  double weight_decay = 0.01;
  FeedbackStyle style = FeedbackStyle::kReviewer;
  SampleOptions sampling;
  BootstrapMode mode = BootstrapMode::kSampled;
};

struct BootstrapState {
  PolicyParameters params;
  OptimizerState optimizer;
  int completed_rounds = 0;
};

using RoundCallback = std::function<void(const BootstrapState&, const RolloutBuffer&, const RoundMetrics&)>;

// Runs rounds completed_rounds + 1 .. schedule.rounds. Round t draws all of
// its randomness from derive_seed(seed, "bootstrap", t), so restarting from a
// saved state reproduces the remaining rounds exactly.
BootstrapState bootstrap(BootstrapState state, const ConditionPool& pool, const Environment& env,
                         std::span<const TaskInstance> prompts, const BootstrapOptions& options, std::uint64_t seed,
                         const RoundCallback& on_round = {});

// Optimizer configured for the online phase.
OptimizerState online_optimizer(const BootstrapOptions& options);

}  // namespace fcp
