#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcp/env.hpp"
#include "fcp/policy.hpp"
#include "fcp/train.hpp"

namespace fcp {

enum class ConditionLabel { kFullyPositive, kFullyNegative, kNeutral, kHasCode, kNullCondition };

std::string_view to_string(ConditionLabel l);
ConditionLabel parse_condition_label(std::string_view text);

class EvalCondition {
 public:
  // Throws ContractViolation unless label == null_condition iff feedback is
  // empty.
  EvalCondition(ConditionLabel label, TokenSequence feedback);

  ConditionLabel label() const { return label_; }
  const TokenSequence& feedback() const { return feedback_; }

 private:
  ConditionLabel label_;
  TokenSequence feedback_;
};

// Fixed representative strings: the environment's representative feedback of
// each polarity for the style, plus the null condition.
std::vector<EvalCondition> standard_conditions(const Environment& env, FeedbackStyle style,
                                               std::span<const ConditionLabel> labels);

struct MetricsRecord {
  ConditionLabel label = ConditionLabel::kNullCondition;
  double accuracy = 0.0;
  double marker_rate = 0.0;
  double mean_length = 0.0;
  double mean_score = 0.0;
  std::size_t sample_count = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

struct DecodeOptions {
  bool greedy = true;
  double temperature = 1.0;
  std::size_t max_len = 20;
};

// One record per (condition, seed), conditions outermost. Scores use the
// environment's noise-free reference score so greedy records do not depend on
// the seed. Throws ContractViolation when an eval instance id appears in
// train_ids.
std::vector<MetricsRecord> evaluate(const PolicyParameters& params, std::span<const EvalCondition> conditions,
                                    std::span<const TaskInstance> eval_set, const Environment& env,
                                    const DecodeOptions& decode, std::span<const std::uint64_t> seeds,
                                    const std::set<std::uint64_t>& train_ids = {});

// Fixed column order: condition,seed,accuracy,marker_rate,mean_length,mean_score,sample_count
std::string sweep_csv(std::span<const MetricsRecord> records);
// Per-condition means and their deltas against null_condition (when present).
nlohmann::ordered_json sweep_summary(std::span<const MetricsRecord> records, const std::string& config_digest);
// Writes <stem>.csv and <stem>.json; IoError names the failing path.
void condition_sweep_report(std::span<const MetricsRecord> records, const std::filesystem::path& stem,
                            const std::string& config_digest);

// Trailing mean over rounds max(1, r - window + 1) .. r.
std::vector<double> moving_average(std::span<const double> values, std::size_t window = 10);

// Columns: round, then for each method (map order) and each of accuracy,
// mean_score, mean_length, loss: the value and its 10-round moving average.
// Shorter logs are padded with "NA".
std::string dynamics_csv(const std::map<std::string, std::vector<RoundMetrics>>& logs);
void dynamics_report(const std::map<std::string, std::vector<RoundMetrics>>& logs, const std::filesystem::path& path);

// Shared CSV helpers for round metric logs.
std::string metrics_csv(std::span<const RoundMetrics> rows);
std::vector<RoundMetrics> parse_metrics_csv(const std::string& text);

// Least-squares slope of values against their index.
double least_squares_slope(std::span<const double> values);

std::string format_double(double v);

}  // namespace fcp
