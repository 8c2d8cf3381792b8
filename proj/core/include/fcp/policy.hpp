#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fcp/rng.hpp"
#include "fcp/sequence.hpp"

namespace fcp {

struct JointTable;

enum class Backend { kTabular, kNeural };
enum class AggregationMode { kTokenMean, kSeqMeanTokenSum };
// Critique-direction parameters model p(c | x, o) and cannot act as a
// response policy.
enum class PolicyPurpose { kResponse, kCritique };

std::string_view to_string(Backend b);
std::string_view to_string(AggregationMode m);
Backend parse_backend(std::string_view text);
AggregationMode parse_aggregation(std::string_view text);

using BlockKey = std::vector<Token>;

// Exact conditional distributions over enumerated target sets. A row is keyed
// by its full context; contexts without a row fall back to the reference
// logits of their space (uniform when none are registered). The space of a
// context is its instruction (wrapped or bare) or, for critique contexts, the
// context itself.
struct TabularTable {
  std::size_t vocab_size = 0;
  std::map<BlockKey, std::vector<TokenSequence>> spaces;
  std::map<BlockKey, std::vector<double>> reference;
  std::map<BlockKey, std::vector<double>> rows;
};

struct NeuralShape {
  std::size_t vocab = 0;
  std::size_t dim = 32;
  std::size_t layers = 2;
  std::size_t hidden = 64;
  std::size_t max_len = 64;

  friend bool operator==(const NeuralShape&, const NeuralShape&) = default;
};

struct NeuralWeights {
  NeuralShape shape;
  std::vector<double> values;
};

struct PolicyParameters {
  std::variant<TabularTable, NeuralWeights> impl;
  std::uint64_t vocab_hash = 0;
  PolicyPurpose purpose = PolicyPurpose::kResponse;
  std::string tag = "reference";

  Backend backend() const { return impl.index() == 0 ? Backend::kTabular : Backend::kNeural; }
  TabularTable& tabular() { return std::get<TabularTable>(impl); }
  const TabularTable& tabular() const { return std::get<TabularTable>(impl); }
  NeuralWeights& neural() { return std::get<NeuralWeights>(impl); }
  const NeuralWeights& neural() const { return std::get<NeuralWeights>(impl); }
};

PolicyParameters make_tabular_policy(const Vocabulary& vocab);
// Weights drawn from scaled normals; embeddings for every token including the
// specials.
PolicyParameters make_neural_policy(const NeuralShape& shape, std::uint64_t vocab_hash, Rng& rng);

// Registers the target set for a tabular space (an instruction, or a critique
// context). Optional reference logits define pi_ref on that space.
void register_space(PolicyParameters& params, const TokenSequence& space, std::vector<TokenSequence> targets,
                    std::vector<double> reference_logits = {});

// Key of the space a context draws targets from, and of its own row.
BlockKey space_key(const TokenSequence& context);
BlockKey row_key(const TokenSequence& context);

struct LogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

// log pi(target | context) and its per-token decomposition. For the tabular
// backend per-token terms come from the prefix-tree factorisation of the
// enumerated distribution, so they sum to the sequence log-probability.
LogProb log_prob(const PolicyParameters& params, const TokenSequence& context, const TokenSequence& target);

// Tabular only: the full conditional over the context's space.
struct TabularDistribution {
  const std::vector<TokenSequence>* targets = nullptr;
  std::vector<double> probs;
};
TabularDistribution tabular_distribution(const PolicyParameters& params, const TokenSequence& context);

// Next-token distribution after context and a target prefix (sums to 1).
std::vector<double> next_token_distribution(const PolicyParameters& params, const TokenSequence& context,
                                            std::span<const Token> prefix);

struct SampleOptions {
  double temperature = 1.0;
  bool greedy = false;
  std::size_t max_len = 20;
};
struct Sample {
  TokenSequence response;
  bool truncated = false;
};
// Ancestral sampling until <eos> or max_len. Greedy decoding breaks exact ties
// towards the lowest token id (tabular: lowest target index). Throws
// ContractViolation on critique-direction parameters.
Sample sample(const PolicyParameters& params, const TokenSequence& context, Rng& rng, const SampleOptions& options);

struct Example {
  TokenSequence context;
  TokenSequence target;
  double weight = 1.0;
};

// Gradients share the parameter layout: one block per tabular row, a single
// block (empty key) for the neural weights.
using Gradients = std::map<BlockKey, std::vector<double>>;

struct LossAndGradients {
  double loss = 0.0;
  Gradients grads;
};

// Loss = sum_i coef_i * nll_i / normalizer, nll_i the summed token NLL.
LossAndGradients scaled_nll_gradients(const PolicyParameters& params, std::span<const Example> batch,
                                      std::span<const double> coefficients, double normalizer);

// token_mean:          sum_i w_i sum_t nll_it / sum_i w_i len_i
// seq_mean_token_sum:  sum_i w_i sum_t nll_it / sum_i w_i
// (w_i = 1 gives the unweighted formulas.)
LossAndGradients nll_gradients(const PolicyParameters& params, std::span<const Example> batch, AggregationMode mode);
double aggregate_loss(std::span<const std::vector<double>> per_token_nll, std::span<const double> weights,
                      AggregationMode mode);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

struct LrSchedule {
  enum class Kind { kConstant, kCosine };
  Kind kind = Kind::kConstant;
  double base_lr = 1e-3;
  std::int64_t total_steps = 1;
  std::int64_t warmup_steps = 0;

  double at(std::int64_t step) const;
};

struct Moments {
  std::vector<double> first;
  std::vector<double> second;
};

struct OptimizerState {
  std::int64_t step = 0;
  std::map<BlockKey, Moments> moments;
  AdamConfig adam;
  LrSchedule schedule;
};

// One Adam update on the aggregated NLL. Returns the loss before the update.
// Throws TrainingAborted naming the batch index whose loss is not finite.
double gradient_step(PolicyParameters& params, OptimizerState& state, std::span<const Example> batch,
                     AggregationMode mode, double learning_rate);
void apply_gradients(PolicyParameters& params, OptimizerState& state, const Gradients& grads, double learning_rate);

// Redraws the <EF> and </EF> embedding rows from a diagonal normal fitted to
// all other rows. No-op on tabular parameters.
void init_special_embeddings(PolicyParameters& params, Rng& rng);

// Closed-form maximiser of the conditional likelihood on an enumerated joint:
// one row per feedback with positive marginal holding log P_off(o | x, c).
// Feedbacks with zero marginal are skipped and returned in `excluded`.
struct ConditionalFit {
  PolicyParameters params;
  std::vector<std::size_t> excluded;
};
ConditionalFit exact_conditional_fit(const JointTable& joint, const Vocabulary& vocab);

// Appends <eos> to a feedback sequence so it can serve as a critique target.
TokenSequence critique_target(const TokenSequence& feedback);

}  // namespace fcp
