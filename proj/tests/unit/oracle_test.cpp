#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fcp/errors.hpp"
#include "fcp/oracle.hpp"
#include "fcp/train.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

namespace fcp {
namespace {

using testing::noiseless_env;
using testing::noisy_env;
using testing::task;

// Synthetic joint over placeholder sequences; only the numbers matter.
JointTable synthetic(const testing::RandomTable& t) {
  const auto& env = noiseless_env();
  auto x = task(env, "3 + 4 mod 10 = ?");
  auto rs = env.tasks().enumerate_responses(x);
  auto fs = env.all_feedback(FeedbackStyle::kReviewer);
  rs.resize(t.prior.size());
  fs.resize(t.lik[0].size());
  return make_joint(x, rs, fs, t.prior, t.lik);
}

TEST(Posterior, MatchesLinearDomainBayes) {
  std::mt19937_64 g(1);
  for (int trial = 0; trial < 200; ++trial) {
    auto t = testing::random_table(2 + g() % 10, 2 + g() % 8, g);
    auto joint = synthetic(t);
    for (std::size_t c = 0; c < t.lik[0].size(); ++c) {
      auto expected = testing::brute_posterior(t.prior, t.lik, c);
      auto got = posterior(joint, c);
      for (std::size_t o = 0; o < expected.size(); ++o) ASSERT_NEAR(got[o], expected[o], 1e-12);
    }
  }
}

TEST(Posterior, ZeroMarginalIsOutOfSupport) {
  testing::RandomTable t{{0.5, 0.5}, {{1.0, 0.0}, {1.0, 0.0}}};
  auto joint = synthetic(t);
  EXPECT_THROW(posterior(joint, 1), OutOfSupport);
  EXPECT_EQ(marginal_support(joint), std::vector<std::size_t>{0});
  EXPECT_EQ(reachable_feedbacks(joint), std::vector<std::size_t>{0});
  EXPECT_EQ(joint.log_marginal(1), -std::numeric_limits<double>::infinity());
}

TEST(MakeJoint, RejectsUnnormalisedRows) {
  testing::RandomTable t{{0.5, 0.5}, {{0.7, 0.2}, {0.5, 0.5}}};
  EXPECT_THROW(synthetic(t), DomainError);
  testing::RandomTable u{{0.6, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}};
  EXPECT_THROW(synthetic(u), DomainError);
}

TEST(Divergences, MatchBruteForce) {
  std::mt19937_64 g(2);
  for (int i = 0; i < 100; ++i) {
    auto p = testing::random_distribution(7, g), q = testing::random_distribution(7, g);
    EXPECT_NEAR(kl_divergence(p, q), testing::brute_kl(p, q), 1e-12);
    EXPECT_NEAR(tv_distance(p, q), testing::brute_tv(p, q), 1e-15);
  }
  std::vector<double> p{0.5, 0.5}, q{1.0, 0.0};
  EXPECT_EQ(kl_divergence(p, q), kInfiniteKl);
  EXPECT_EQ(kl_divergence(q, p), std::log(2.0));
}

TEST(KlObjective, IdentityHoldsOnRandomTables) {
  std::mt19937_64 g(3);
  for (int trial = 0; trial < 500; ++trial) {
    auto t = testing::random_table(2 + g() % 12, 2 + g() % 6, g);
    auto joint = synthetic(t);
    auto pi = testing::random_distribution(t.prior.size(), g);
    const std::size_t c = g() % t.lik[0].size();
    auto r = kl_objective(pi, joint, c);
    // Independent evaluation of both sides.
    double expected_ll = 0.0;
    for (std::size_t o = 0; o < pi.size(); ++o) expected_ll += pi[o] * std::log(t.lik[o][c]);
    double lhs = expected_ll - testing::brute_kl(pi, t.prior);
    double z = 0.0;
    for (std::size_t o = 0; o < pi.size(); ++o) z += t.prior[o] * t.lik[o][c];
    double rhs = -testing::brute_kl(pi, testing::brute_posterior(t.prior, t.lik, c)) + std::log(z);
    ASSERT_NEAR(r.objective_value, lhs, 1e-9);
    ASSERT_NEAR(lhs, rhs, 1e-9);
    ASSERT_LT(r.identity_residual, 1e-9);
  }
}

TEST(KlObjective, MaximisedByThePosterior) {
  std::mt19937_64 g(4);
  auto t = testing::random_table(6, 4, g);
  auto joint = synthetic(t);
  auto post = posterior(joint, 2);
  auto best = kl_objective(post, joint, 2);
  EXPECT_NEAR(best.kl_reverse, 0.0, 1e-12);
  EXPECT_NEAR(best.objective_value, joint.log_marginal(2), 1e-12);
  for (int i = 0; i < 50; ++i) {
    auto pi = testing::random_distribution(6, g);
    EXPECT_LT(kl_objective(pi, joint, 2).objective_value, best.objective_value);
  }
}

TEST(KlObjective, MassOutsideThePriorIsADomainError) {
  testing::RandomTable t{{1.0, 0.0}, {{0.5, 0.5}, {0.5, 0.5}}};
  auto joint = synthetic(t);
  std::vector<double> pi{0.5, 0.5};
  EXPECT_THROW(kl_objective(pi, joint, 0), DomainError);
}

TEST(ForwardKl, ZeroExactlyAtThePosteriors) {
  std::mt19937_64 g(5);
  auto t = testing::random_table(5, 3, g);
  auto joint = synthetic(t);
  std::vector<std::vector<double>> q;
  for (std::size_t c = 0; c < 3; ++c) q.push_back(posterior(joint, c));
  EXPECT_NEAR(forward_kl_objective(joint, q), 0.0, 1e-12);
  q[1] = testing::random_distribution(5, g);
  EXPECT_GT(forward_kl_objective(joint, q), 0.0);
}

TEST(ExactConditionalFit, RowsEqualThePosterior) {
  const auto& env = noisy_env();
  auto x = task(env, "3 + 4 mod 10 = ?");
  auto ref = make_tabular_policy(env.vocab());
  auto rs = env.tasks().enumerate_responses(x);
  Rng rng(3);
  std::vector<double> logits;
  for (std::size_t i = 0; i < rs.size(); ++i) logits.push_back(rng.normal());
  register_space(ref, x.instruction, rs, logits);
  auto joint = enumerate_joint(ref, env, x, FeedbackStyle::kReviewer);
  auto fit = exact_conditional_fit(joint, env.vocab());
  EXPECT_TRUE(fit.excluded.empty());
  for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
    auto dist = tabular_distribution(fit.params, wrap_context(joint.feedbacks[c], x.instruction));
    auto expected = testing::brute_posterior(joint.prior, joint.likelihood, c);
    for (std::size_t o = 0; o < expected.size(); ++o) ASSERT_NEAR(dist.probs[o], expected[o], 1e-12);
  }
}

TEST(EnumerateJoint, RespectsLimitsAndMatchesTheEnvironment) {
  const auto& env = noisy_env();
  auto x = task(env, "upper a b c = ?");
  auto ref = make_tabular_policy(env.vocab());
  register_space(ref, x.instruction, env.tasks().enumerate_responses(x));
  auto joint = enumerate_joint(ref, env, x, FeedbackStyle::kUser);
  EXPECT_NEAR(joint.total_mass(), 1.0, 1e-12);
  for (std::size_t o = 0; o < joint.num_responses(); ++o) {
    for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
      ASSERT_DOUBLE_EQ(joint.likelihood[o][c],
                       env.feedback_likelihood(x, joint.responses[o], joint.feedbacks[c], FeedbackStyle::kUser));
    }
  }
  EXPECT_THROW(enumerate_joint(ref, env, x, FeedbackStyle::kUser, EnumerationLimits{3, 1000}), DomainError);
}

TEST(VerifiableCase, PosteriorIsSupportedOnCorrectResponses) {
  const auto& env = noiseless_env();
  std::mt19937_64 g(6);
  for (auto x : testing::tasks(env, TaskKind::kModularArithmetic, 9, 20, 8)) {
    auto rs = env.tasks().enumerate_responses(x);
    auto verifier = [&](const TokenSequence& o) { return env.verify(x, o); };
    auto joint = verifier_joint(x, rs, testing::random_distribution(rs.size(), g), verifier,
                                testing::feedback(env, "yes , that is correct ."),
                                testing::feedback(env, "that is wrong ."));
    auto report = verifiable_case_check(joint, 0, verifier);
    ASSERT_EQ(report.incorrect_mass, 0.0);
    ASSERT_NEAR(report.expected_reward, 1.0, 1e-12);
  }
}

TEST(VerifiableCase, BrokenPremiseIsReported) {
  const auto& env = noiseless_env();
  auto x = task(env, "3 + 4 mod 10 = ?");
  auto rs = env.tasks().enumerate_responses(x);
  std::vector<double> prior(rs.size(), 1.0 / static_cast<double>(rs.size()));
  std::vector<std::vector<double>> lik(rs.size(), std::vector<double>{0.5, 0.5});
  auto fs = env.all_feedback(FeedbackStyle::kUser);
  auto joint = make_joint(x, rs, {fs[0], fs[1]}, prior, lik);
  EXPECT_THROW(verifiable_case_check(joint, 0, [&](const TokenSequence& o) { return env.verify(x, o); }),
               VerificationFailure);
}

}  // namespace
}  // namespace fcp
