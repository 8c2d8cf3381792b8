#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fcp/checkpoint.hpp"
#include "fcp/errors.hpp"
#include "fcp/eval.hpp"
#include "support/fixtures.hpp"

namespace fcp {
namespace {

using testing::noiseless_env;

const ConditionLabel kAll[] = {ConditionLabel::kFullyPositive, ConditionLabel::kFullyNegative, ConditionLabel::kNeutral,
                               ConditionLabel::kHasCode, ConditionLabel::kNullCondition};

TEST(EvalCondition, NullLabelIffEmptyFeedback) {
  const auto& env = noiseless_env();
  EXPECT_NO_THROW(EvalCondition(ConditionLabel::kNullCondition, TokenSequence(Role::kFeedback, {})));
  EXPECT_THROW(EvalCondition(ConditionLabel::kNullCondition, testing::feedback(env, "bad answer .")),
               ContractViolation);
  EXPECT_THROW(EvalCondition(ConditionLabel::kFullyPositive, TokenSequence(Role::kFeedback, {})), ContractViolation);
}

TEST(StandardConditions, UseRepresentativeFeedback) {
  const auto& env = noiseless_env();
  auto cs = standard_conditions(env, FeedbackStyle::kReviewer, kAll);
  ASSERT_EQ(cs.size(), 5u);
  EXPECT_EQ(cs[0].feedback(), env.representative_feedback(Polarity::kFullyPositive, FeedbackStyle::kReviewer));
  EXPECT_TRUE(cs[4].feedback().empty());
  for (auto l : kAll) EXPECT_EQ(parse_condition_label(to_string(l)), l);
}

struct World {
  const Environment& env = noiseless_env();
  std::vector<TaskInstance> eval_set = testing::tasks(env, TaskKind::kModularArithmetic, 9, 8, 12);
  PolicyParameters params = make_tabular_policy(env.vocab());
  World() { register_tasks(params, env, eval_set); }
};

TEST(Evaluate, GreedyIsSeedInvariantAndReadOnly) {
  World s;
  auto cs = standard_conditions(s.env, FeedbackStyle::kReviewer, kAll);
  std::vector<std::uint64_t> seeds{1, 2};
  auto before = parameter_digest(s.params);
  auto records = evaluate(s.params, cs, s.eval_set, s.env, {}, seeds);
  EXPECT_EQ(parameter_digest(s.params), before);
  ASSERT_EQ(records.size(), 10u);
  for (std::size_t i = 0; i < records.size(); i += 2) {
    auto a = records[i], b = records[i + 1];
    EXPECT_EQ(a.seed, 1u);
    EXPECT_EQ(b.seed, 2u);
    b.seed = a.seed;
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.sample_count, s.eval_set.size());
  }
}

TEST(Evaluate, PerfectPolicyScoresPerfectly) {
  World s;
  for (const auto& x : s.eval_set) {
    auto rs = s.env.tasks().enumerate_responses(x);
    std::vector<double> z(rs.size(), -50.0);
    z[0] = 0.0;
    s.params.tabular().rows[row_key(x.instruction)] = z;
  }
  EvalCondition null(ConditionLabel::kNullCondition, TokenSequence(Role::kFeedback, {}));
  // The null condition wraps empty feedback, which falls back to the reference.
  std::vector<EvalCondition> cs{null};
  for (const auto& x : s.eval_set) {
    s.params.tabular().rows[row_key(wrap_context(null.feedback(), x.instruction))] =
        s.params.tabular().rows[row_key(x.instruction)];
  }
  std::vector<std::uint64_t> seeds{0};
  auto r = evaluate(s.params, cs, s.eval_set, s.env, {}, seeds);
  EXPECT_DOUBLE_EQ(r[0].accuracy, 1.0);
  EXPECT_DOUBLE_EQ(r[0].marker_rate, 0.0);
  EXPECT_DOUBLE_EQ(r[0].mean_length, 1.0);  // <eos> is not counted
  EXPECT_DOUBLE_EQ(r[0].mean_score, 0.95);
}

TEST(Evaluate, OverlapWithTrainingIsRejected) {
  World s;
  auto cs = standard_conditions(s.env, FeedbackStyle::kReviewer, kAll);
  std::vector<std::uint64_t> seeds{0};
  EXPECT_THROW(evaluate(s.params, cs, s.eval_set, s.env, {}, seeds, {s.eval_set[3].id}), ContractViolation);
}

TEST(SweepCsv, HasFixedHeaderAndRows) {
  std::vector<MetricsRecord> rs{{ConditionLabel::kFullyPositive, 0.5, 0.25, 3.0, 0.8, 8, 1},
                                {ConditionLabel::kNullCondition, 0.25, 0.0, 2.5, 0.4, 8, 1}};
  auto csv = sweep_csv(rs);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "condition,seed,accuracy,marker_rate,mean_length,mean_score,sample_count");
  EXPECT_NE(csv.find("fully_positive,1,0.5,0.25,3,0.8,8"), std::string::npos);
  auto summary = sweep_summary(rs, "abc");
  EXPECT_EQ(summary["config_digest"], "abc");
  ASSERT_EQ(summary["conditions"].size(), 2u);
  EXPECT_EQ(summary["conditions"][0]["condition"], "fully_positive");
  EXPECT_DOUBLE_EQ(summary["conditions"][0]["delta_vs_null"]["accuracy"].get<double>(), 0.25);
  EXPECT_DOUBLE_EQ(summary["conditions"][1]["delta_vs_null"]["accuracy"].get<double>(), 0.0);
}

TEST(SweepReport, UnwritablePathIsAnIoError) {
  std::vector<MetricsRecord> rs{{}};
  EXPECT_THROW(condition_sweep_report(rs, "/proc/definitely/not/here/sweep", "d"), IoError);
}

TEST(MovingAverage, TrailingWindow) {
  std::vector<double> v{1, 2, 3, 4, 5};
  auto m = moving_average(v, 3);
  EXPECT_DOUBLE_EQ(m[0], 1.0);
  EXPECT_DOUBLE_EQ(m[1], 1.5);
  EXPECT_DOUBLE_EQ(m[2], 2.0);
  EXPECT_DOUBLE_EQ(m[4], 4.0);
}

TEST(Dynamics, PadsShorterLogsWithNa) {
  std::map<std::string, std::vector<RoundMetrics>> logs;
  logs["fcp"] = {{1, 0.5, 0.5, 0.5, 3.0, 0.1, 4}, {2, 0.6, 0.5, 0.5, 3.0, 0.1, 4}};
  logs["sft"] = {{1, 0.4, 0.5, 0.5, 3.0, 0.1, 4}};
  auto csv = dynamics_csv(logs);
  auto header = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(header.rfind("round,fcp_accuracy,fcp_accuracy_ma10", 0), 0u);
  EXPECT_NE(csv.find("NA"), std::string::npos);
}

TEST(MetricsCsv, RoundTrips) {
  std::vector<RoundMetrics> rows{{1, 0.125, 0.5, 0.75, 3.5, 1.25, 16}, {2, 0.25, 0.5, 0.5, 4.0, 0.0, 16}};
  auto back = parse_metrics_csv(metrics_csv(rows));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_DOUBLE_EQ(back[1].mean_length, 4.0);
  EXPECT_EQ(back[0].count, 16u);
}

TEST(Slope, LeastSquares) {
  std::vector<double> v{1.0, 3.0, 5.0, 7.0};
  EXPECT_DOUBLE_EQ(least_squares_slope(v), 2.0);
  std::vector<double> flat{2.0, 2.0};
  EXPECT_DOUBLE_EQ(least_squares_slope(flat), 0.0);
}

}  // namespace
}  // namespace fcp
