#include <gtest/gtest.h>

#include <cmath>

#include "fcp/baselines.hpp"
#include "fcp/errors.hpp"
#include "support/fixtures.hpp"

namespace fcp {
namespace {

using testing::noisy_env;

TEST(GroupAdvantage, NormalisesWithPopulationStd) {
  std::vector<double> r{1.0, 0.0, 0.0, 1.0};
  auto a = GroupAdvantage::compute(r);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_NEAR(a[i], (r[i] - 0.5) / (0.5 + 1e-8), 1e-12);
  double s = 0.0;
  for (double v : a) s += v;
  EXPECT_NEAR(s, 0.0, 1e-12);
}

TEST(GroupAdvantage, EqualRewardsGiveZeros) {
  std::vector<double> r{0.7, 0.7, 0.7};
  for (double v : GroupAdvantage::compute(r)) EXPECT_EQ(v, 0.0);
  std::vector<double> one{0.3};
  EXPECT_EQ(GroupAdvantage::compute(one), std::vector<double>{0.0});
}

struct World {
  const Environment& env = noisy_env();
  std::vector<TaskInstance> prompts = testing::tasks(env, TaskKind::kModularArithmetic, 9, 10, 3);
  PolicyParameters ref = make_tabular_policy(env.vocab());
  Dataset data;
  World() {
    register_tasks(ref, env, prompts);
    CollectOptions o;
    o.n_per_prompt = 8;
    Rng rng(4);
    data = collect_offline(ref, env, prompts, o, rng);
  }
};

SupervisedOptions opts() {
  SupervisedOptions o;
  o.epochs = 10;
  o.batch_size = 16;
  o.lr = 1.0;
  o.scheduler = LrSchedule::Kind::kConstant;
  o.warmup_ratio = 0.0;
  return o;
}

double mean_accuracy(const PolicyParameters& p, const World& s) {
  double acc = 0.0;
  for (const auto& x : s.prompts) {
    auto d = tabular_distribution(p, x.instruction);
    for (std::size_t i = 0; i < d.probs.size(); ++i) {
      if (s.env.verify(x, (*d.targets)[i]) == Verdict::kCorrect) acc += d.probs[i];
    }
  }
  return acc / static_cast<double>(s.prompts.size());
}

TEST(Sft, UsesBareInstructions) {
  World s;
  auto ex = sft_examples(s.data);
  ASSERT_EQ(ex.size(), s.data.size());
  EXPECT_EQ(ex[0].context, s.data.triples[0].instruction);
}

TEST(Rft, KeepsOnlyCorrectAndImprovesAccuracy) {
  World s;
  auto kept = filter_correct(s.data, s.env);
  ASSERT_FALSE(kept.empty());
  for (const auto& t : kept.triples) {
    EXPECT_EQ(s.env.verify(s.env.tasks().parse_instruction(t.instruction), t.response), Verdict::kCorrect);
  }
  Rng rng(5);
  auto r = train_rft(s.ref, s.data, s.env, opts(), rng);
  EXPECT_GT(mean_accuracy(r.params, s), mean_accuracy(s.ref, s) + 0.2);
}

TEST(Rft, NoCorrectTriplesIsAConfigError) {
  World s;
  Dataset wrong;
  for (const auto& t : s.data.triples) {
    if (s.env.verify(s.env.tasks().parse_instruction(t.instruction), t.response) == Verdict::kIncorrect)
      wrong.triples.push_back(t);
  }
  EXPECT_TRUE(filter_correct(wrong, s.env).empty());
  Rng rng(1);
  EXPECT_THROW(train_rft(s.ref, wrong, s.env, opts(), rng), ConfigError);
}

TEST(Cft, ProducesCritiqueDirectionParameters) {
  World s;
  auto params = make_tabular_policy(s.env.vocab());
  register_critique_spaces(params, s.env, s.data, FeedbackStyle::kReviewer);
  auto ex = cft_examples(s.data);
  ASSERT_EQ(ex.size(), s.data.size());
  EXPECT_EQ(ex[0].context.role(), Role::kCritiqueContext);
  EXPECT_EQ(ex[0].target, critique_target(s.data.triples[0].feedback.text()));
  Rng rng(6);
  auto r = train_cft(params, s.data, opts(), rng);
  EXPECT_EQ(r.params.purpose, PolicyPurpose::kCritique);
  Rng srng(1);
  EXPECT_THROW(sample(r.params, s.prompts[0].instruction, srng, {}), ContractViolation);
  EXPECT_LT(r.losses.back(), r.losses.front());
}

TEST(Grpo, RaisesMeanReward) {
  World s;
  GrpoOptions o;
  o.rounds = 15;
  o.prompt_batch = 10;
  o.group_size = 6;
  o.lr = 0.5;
  auto r = train_grpo_lite(s.ref, s.env, s.prompts, o, 9);
  ASSERT_EQ(r.metrics.size(), 15u);
  EXPECT_GT(mean_accuracy(r.params, s), mean_accuracy(s.ref, s));
  auto again = train_grpo_lite(s.ref, s.env, s.prompts, o, 9);
  EXPECT_EQ(again.params.tabular().rows, r.params.tabular().rows);
}

}  // namespace
}  // namespace fcp
