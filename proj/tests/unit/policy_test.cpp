#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <map>

#include "fcp/checkpoint.hpp"
#include "fcp/errors.hpp"
#include "fcp/neural.hpp"
#include "fcp/policy.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fcp {
namespace {

using testing::noiseless_env;
using testing::response;
using testing::task;

const Vocabulary& vocab() { return noiseless_env().vocab(); }

std::vector<double> plain_softmax(const std::vector<double>& z) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : z) m = std::max(m, v);
  std::vector<double> p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += (p[i] = std::exp(z[i] - m));
  for (double& v : p) v /= s;
  return p;
}

struct TabularFixture {
  TaskInstance x = task(noiseless_env(), "3 + 4 mod 10 = ?");
  std::vector<TokenSequence> targets = noiseless_env().tasks().enumerate_responses(x);
  std::vector<double> logits;
  PolicyParameters params = make_tabular_policy(vocab());

  explicit TabularFixture(std::uint64_t seed = 1) {
    Rng rng(seed);
    for (std::size_t i = 0; i < targets.size(); ++i) logits.push_back(rng.normal());
    register_space(params, x.instruction, targets, logits);
  }
};

TEST(Tabular, SequenceLogProbMatchesSoftmax) {
  TabularFixture f;
  auto p = plain_softmax(f.logits);
  for (std::size_t i = 0; i < f.targets.size(); ++i) {
    auto lp = log_prob(f.params, f.x.instruction, f.targets[i]);
    ASSERT_NEAR(lp.total, std::log(p[i]), 1e-10);
    double sum = 0.0;
    for (double t : lp.per_token) sum += t;
    ASSERT_NEAR(sum, lp.total, 1e-12);
    ASSERT_EQ(lp.per_token.size(), f.targets[i].size());
  }
}

TEST(Tabular, UnregisteredContextFallsBackToReference) {
  TabularFixture f;
  auto ctx = wrap_context(testing::feedback(noiseless_env(), "that is wrong ."), f.x.instruction);
  auto a = tabular_distribution(f.params, ctx);
  auto b = tabular_distribution(f.params, f.x.instruction);
  ASSERT_EQ(a.probs.size(), b.probs.size());
  for (std::size_t i = 0; i < a.probs.size(); ++i) EXPECT_NEAR(a.probs[i], b.probs[i], 1e-15);

  f.params.tabular().rows[row_key(ctx)] = std::vector<double>(f.targets.size(), 0.0);
  a = tabular_distribution(f.params, ctx);
  for (double p : a.probs) EXPECT_NEAR(p, 1.0 / static_cast<double>(f.targets.size()), 1e-15);
}

TEST(Tabular, NextTokenDistributionMarginalisesThePrefixTree) {
  TabularFixture f;
  auto p = plain_softmax(f.logits);
  auto next = next_token_distribution(f.params, f.x.instruction, {});
  std::vector<double> expected(vocab().size(), 0.0);
  for (std::size_t i = 0; i < f.targets.size(); ++i) expected[f.targets[i][0].id] += p[i];
  double total = 0.0;
  for (std::size_t t = 0; t < expected.size(); ++t) {
    EXPECT_NEAR(next[t], expected[t], 1e-12);
    total += next[t];
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Tabular, SamplingMatchesTheDistribution) {
  TabularFixture f(5);
  auto p = plain_softmax(f.logits);
  std::map<std::vector<Token>, std::size_t> index;
  for (std::size_t i = 0; i < f.targets.size(); ++i) index[f.targets[i].tokens()] = i;
  std::vector<std::size_t> counts(f.targets.size(), 0);
  Rng rng(17);
  for (int i = 0; i < 40000; ++i) ++counts[index.at(sample(f.params, f.x.instruction, rng, {}).response.tokens())];
  EXPECT_GT(testing::chi_square_p_value(p, counts), 1e-3);
}

TEST(Tabular, GreedyBreaksTiesTowardsLowestIndex) {
  TabularFixture f;
  f.params.tabular().rows[row_key(f.x.instruction)] = std::vector<double>(f.targets.size(), 0.0);
  Rng rng(1);
  SampleOptions greedy;
  greedy.greedy = true;
  EXPECT_EQ(sample(f.params, f.x.instruction, rng, greedy).response, f.targets[0]);
}

TEST(Tabular, CritiqueParametersCannotSampleResponses) {
  TabularFixture f;
  f.params.purpose = PolicyPurpose::kCritique;
  Rng rng(1);
  EXPECT_THROW(sample(f.params, f.x.instruction, rng, {}), ContractViolation);
}

TEST(Tabular, GradientMatchesFiniteDifferences) {
  TabularFixture f(9);
  std::vector<Example> batch{{f.x.instruction, f.targets[0], 1.0}, {f.x.instruction, f.targets[5], 2.0},
                             {f.x.instruction, f.targets[9], 0.5}};
  const auto key = row_key(f.x.instruction);
  f.params.tabular().rows[key] = f.logits;
  for (auto mode : {AggregationMode::kTokenMean, AggregationMode::kSeqMeanTokenSum}) {
    auto lg = nll_gradients(f.params, batch, mode);
    auto loss_at = [&](const std::vector<double>& z) {
      auto p = f.params;
      p.tabular().rows[key] = z;
      return nll_gradients(p, batch, mode).loss;
    };
    for (std::size_t i = 0; i < f.logits.size(); i += 3) {
      ASSERT_NEAR(lg.grads.at(key)[i], testing::central_difference(loss_at, f.logits, i, 1e-5), 1e-6);
    }
  }
}

TEST(Aggregation, FormulasMatchHandComputation) {
  std::vector<std::vector<double>> nll{{1.0, 2.0, 3.0}, {4.0}};
  std::vector<double> ones{1.0, 1.0};
  EXPECT_DOUBLE_EQ(aggregate_loss(nll, ones, AggregationMode::kTokenMean), 10.0 / 4.0);
  EXPECT_DOUBLE_EQ(aggregate_loss(nll, ones, AggregationMode::kSeqMeanTokenSum), 10.0 / 2.0);
  std::vector<double> w{2.0, 1.0};
  EXPECT_DOUBLE_EQ(aggregate_loss(nll, w, AggregationMode::kTokenMean), (2.0 * 6.0 + 4.0) / (2.0 * 3.0 + 1.0));
  EXPECT_DOUBLE_EQ(aggregate_loss(nll, w, AggregationMode::kSeqMeanTokenSum), (2.0 * 6.0 + 4.0) / 3.0);
}

TEST(Aggregation, ModesOnlyDifferForUnequalLengths) {
  TabularFixture f;
  std::vector<Example> same{{f.x.instruction, f.targets[0]}, {f.x.instruction, f.targets[8]}};
  ASSERT_EQ(f.targets[0].size(), f.targets[8].size());
  auto a = nll_gradients(f.params, same, AggregationMode::kTokenMean).loss;
  auto b = nll_gradients(f.params, same, AggregationMode::kSeqMeanTokenSum).loss;
  EXPECT_NEAR(b, a * static_cast<double>(f.targets[0].size()), 1e-12);
}

TEST(Schedule, WarmupThenCosine) {
  LrSchedule s{LrSchedule::Kind::kCosine, 1.0, 110, 10};
  EXPECT_DOUBLE_EQ(s.at(0), 0.1);
  EXPECT_DOUBLE_EQ(s.at(9), 1.0);
  EXPECT_NEAR(s.at(60), 0.5 * (1.0 + std::cos(M_PI * 50.0 / 100.0)), 1e-12);
  EXPECT_GE(s.at(109), 0.0);
  LrSchedule c{LrSchedule::Kind::kConstant, 0.3, 5, 0};
  EXPECT_DOUBLE_EQ(c.at(4), 0.3);
}

TEST(Adam, FirstStepMovesEachCoordinateByTheLearningRate) {
  TabularFixture f;
  const auto key = row_key(f.x.instruction);
  OptimizerState state;
  Gradients g{{key, std::vector<double>(f.targets.size(), 0.0)}};
  g[key][0] = 3.0;
  g[key][1] = -0.002;
  apply_gradients(f.params, state, g, 0.1);
  const auto& row = f.params.tabular().rows.at(key);
  EXPECT_NEAR(row[0], f.logits[0] - 0.1, 1e-6);
  EXPECT_NEAR(row[1], f.logits[1] + 0.1, 1e-4);
  EXPECT_DOUBLE_EQ(row[2], f.logits[2]);
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, InfiniteLogitsStayPinned) {
  TabularFixture f;
  const auto key = row_key(f.x.instruction);
  f.logits[4] = -std::numeric_limits<double>::infinity();
  f.params.tabular().rows[key] = f.logits;
  OptimizerState state;
  std::vector<Example> batch{{f.x.instruction, f.targets[0]}};
  for (int i = 0; i < 3; ++i) gradient_step(f.params, state, batch, AggregationMode::kTokenMean, 0.5);
  EXPECT_TRUE(std::isinf(f.params.tabular().rows.at(key)[4]));
  EXPECT_GT(log_prob(f.params, f.x.instruction, f.targets[0]).total, std::log(plain_softmax(f.logits)[0]));
}

NeuralWeights tiny_net(std::uint64_t seed) {
  NeuralShape shape;
  shape.vocab = vocab().size();
  shape.dim = 8;
  shape.layers = 2;
  shape.hidden = 12;
  shape.max_len = 24;
  Rng rng(seed);
  return make_neural_policy(shape, vocab().hash(), rng).neural();
}

TEST(Neural, GradientMatchesFiniteDifferences) {
  auto w = tiny_net(3);
  auto x = task(noiseless_env(), "3 + 4 mod 10 = ?");
  std::vector<Token> input = x.instruction.tokens();
  const std::size_t start = input.size();
  const auto target = response(noiseless_env(), "let me check => 7 <eos>");
  input.insert(input.end(), target.tokens().begin(), target.tokens().end());
  std::vector<double> grad(w.values.size(), 0.0);
  neural::sequence_nll(w, input, start, nullptr, &grad, 1.0);
  auto f = [&](const std::vector<double>& v) {
    NeuralWeights c{w.shape, v};
    return neural::sequence_nll(c, input, start, nullptr, nullptr, 1.0);
  };
  Rng pick(8);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    std::size_t i = pick.index(w.values.size());
    double fd = testing::central_difference(f, w.values, i, 1e-5);
    worst = std::max(worst, std::fabs(fd - grad[i]) / std::max(1.0, std::fabs(fd)));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(Neural, PerTokenLogProbsAreNormalisedConditionals) {
  auto w = tiny_net(4);
  PolicyParameters p{w, vocab().hash(), PolicyPurpose::kResponse, "t"};
  auto x = task(noiseless_env(), "reverse a b c = ?");
  auto dist = next_token_distribution(p, x.instruction, {});
  double total = 0.0;
  for (double v : dist) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  auto target = response(noiseless_env(), "c b a <eos>");
  auto lp = log_prob(p, x.instruction, target);
  std::vector<Token> prefix;
  double manual = 0.0;
  for (Token t : target.tokens()) {
    manual += std::log(next_token_distribution(p, x.instruction, prefix)[t.id]);
    prefix.push_back(t);
  }
  EXPECT_NEAR(lp.total, manual, 1e-9);
}

TEST(Neural, TrainingFitsASingleExample) {
  PolicyParameters p{tiny_net(5), vocab().hash(), PolicyPurpose::kResponse, "t"};
  auto x = task(noiseless_env(), "3 + 4 mod 10 = ?");
  std::vector<Example> batch{{x.instruction, x.ground_truth}};
  OptimizerState state;
  double first = gradient_step(p, state, batch, AggregationMode::kTokenMean, 0.01);
  double last = first;
  for (int i = 0; i < 60; ++i) last = gradient_step(p, state, batch, AggregationMode::kTokenMean, 0.01);
  EXPECT_LT(last, 0.2 * first);
}

TEST(Neural, SpecialEmbeddingsAreRedrawn) {
  PolicyParameters p{tiny_net(6), vocab().hash(), PolicyPurpose::kResponse, "t"};
  auto before = p.neural().values;
  Rng rng(2);
  init_special_embeddings(p, rng);
  const auto layout = neural::Layout::of(p.neural().shape);
  const std::size_t d = p.neural().shape.dim;
  const std::size_t v = p.neural().shape.vocab;
  auto at = [&](const std::vector<double>& vals, std::size_t tok, std::size_t j) { return vals[layout.tok_emb + j * v + tok]; };
  bool changed = false;
  for (std::size_t j = 0; j < d; ++j) {
    changed = changed || at(before, Vocabulary::kEfOpen.id, j) != at(p.neural().values, Vocabulary::kEfOpen.id, j);
    ASSERT_EQ(at(before, 10, j), at(p.neural().values, 10, j));
  }
  EXPECT_TRUE(changed);
}

TEST(Checkpoint, RoundTripsTabularWithInfiniteLogits) {
  TabularFixture f;
  f.logits[2] = -std::numeric_limits<double>::infinity();
  f.params.tabular().rows[row_key(f.x.instruction)] = f.logits;
  OptimizerState opt;
  std::vector<Example> batch{{f.x.instruction, f.targets[0]}};
  gradient_step(f.params, opt, batch, AggregationMode::kTokenMean, 0.1);
  auto path = std::filesystem::temp_directory_path() / "fcp_policy_test_ckpt.json";
  save_checkpoint(path, f.params, &opt);
  auto back = load_checkpoint(path, vocab().hash());
  EXPECT_EQ(parameter_digest(back.params), parameter_digest(f.params));
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, opt.step);
  EXPECT_TRUE(std::isinf(back.params.tabular().rows.at(row_key(f.x.instruction))[2]));
  EXPECT_THROW(load_checkpoint(path, vocab().hash() + 1), ContractViolation);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path, vocab().hash()), MissingArtifact);
}

TEST(Checkpoint, RoundTripsNeuralExactly) {
  PolicyParameters p{tiny_net(7), vocab().hash(), PolicyPurpose::kResponse, "t"};
  auto back = checkpoint_from_json(checkpoint_to_json(p), vocab().hash());
  EXPECT_EQ(back.params.neural().values, p.neural().values);
  EXPECT_EQ(back.params.neural().shape, p.neural().shape);
}

}  // namespace
}  // namespace fcp
