#pragma once

#include <span>
#include <vector>

#include "fcp/train.hpp"

namespace fcp {

struct GroupAdvantage {
  std::vector<TokenSequence> group;
  std::vector<double> rewards;
  std::vector<double> advantages;

  static constexpr double kEpsilon = 1e-8;
  // (r - mean) / (std + eps) with the population standard deviation; all
  // zeros when every reward is equal.
  static std::vector<double> compute(std::span<const double> rewards);
};

// Behaviour cloning on (x, o); the context is the bare instruction and the
// feedback field is ignored.
std::vector<Example> sft_examples(const Dataset& dataset);
TrainResult train_sft(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng);

// SFT restricted to verifier-correct triples. train_rft throws ConfigError
// when none are.
Dataset filter_correct(const Dataset& dataset, const Environment& env);
TrainResult train_rft(PolicyParameters params, const Dataset& dataset, const Environment& env,
                      const SupervisedOptions& options, Rng& rng);

// Critique prediction p(c | x, o). The result is tagged as critique-direction
// and refuses to act as a response policy. Tabular parameters need critique
// spaces registered first (register_critique_spaces).
std::vector<Example> cft_examples(const Dataset& dataset);
TrainResult train_cft(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng);

struct GrpoOptions {
  int rounds = 30;
  int prompt_batch = 64;
  int group_size = 4;
  double lr = 3e-4;
  double weight_decay = 0.01;
  SampleOptions sampling;
  FeedbackStyle style = FeedbackStyle::kReviewer;
};

struct GrpoResult {
  PolicyParameters params;
  OptimizerState optimizer;
  std::vector<RoundMetrics> metrics;  // mean_score is the mean scalar reward
};

// Group-normalized policy gradient on the environment's scalar score, without
// clipping or a KL penalty. One update per round.
GrpoResult train_grpo_lite(PolicyParameters params, const Environment& env, std::span<const TaskInstance> prompts,
                           const GrpoOptions& options, std::uint64_t seed);

}  // namespace fcp
