#include "fcp/eval.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

constexpr ConditionLabel kAllLabels[] = {ConditionLabel::kFullyPositive, ConditionLabel::kFullyNegative,
                                         ConditionLabel::kNeutral, ConditionLabel::kHasCode,
                                         ConditionLabel::kNullCondition};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << content;
  if (!f) throw IoError("write failed for " + path.string());
}

Polarity polarity_of(ConditionLabel l) {
  switch (l) {
    case ConditionLabel::kFullyPositive: return Polarity::kFullyPositive;
    case ConditionLabel::kFullyNegative: return Polarity::kFullyNegative;
    case ConditionLabel::kNeutral: return Polarity::kNeutral;
    case ConditionLabel::kHasCode: return Polarity::kHasCode;
    case ConditionLabel::kNullCondition: break;
  }
  throw ContractViolation("null condition has no polarity");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string_view to_string(ConditionLabel l) {
  switch (l) {
    case ConditionLabel::kFullyPositive: return "fully_positive";
    case ConditionLabel::kFullyNegative: return "fully_negative";
    case ConditionLabel::kNeutral: return "neutral";
    case ConditionLabel::kHasCode: return "has_code";
    case ConditionLabel::kNullCondition: return "null_condition";
  }
  return "?";
}

ConditionLabel parse_condition_label(std::string_view text) {
  for (auto l : kAllLabels) {
    if (to_string(l) == text) return l;
  }
  throw ConfigError("unknown eval condition '" + std::string(text) + "'");
}

EvalCondition::EvalCondition(ConditionLabel label, TokenSequence feedback)
    : label_(label), feedback_(std::move(feedback)) {
  if (feedback_.role() != Role::kFeedback) throw ContractViolation("eval condition needs a feedback sequence");
  if ((label_ == ConditionLabel::kNullCondition) != feedback_.empty()) {
    throw ContractViolation("null_condition must pair with empty feedback and only with it");
  }
}

std::vector<EvalCondition> standard_conditions(const Environment& env, FeedbackStyle style,
                                               std::span<const ConditionLabel> labels) {
  std::vector<EvalCondition> out;
  for (auto l : labels) {
    if (l == ConditionLabel::kNullCondition) {
      out.emplace_back(l, TokenSequence(Role::kFeedback, {}));
    } else {
      out.emplace_back(l, env.representative_feedback(polarity_of(l), style));
    }
  }
  return out;
}

std::vector<MetricsRecord> evaluate(const PolicyParameters& params, std::span<const EvalCondition> conditions,
                                    std::span<const TaskInstance> eval_set, const Environment& env,
                                    const DecodeOptions& decode, std::span<const std::uint64_t> seeds,
                                    const std::set<std::uint64_t>& train_ids) {
  for (const auto& x : eval_set) {
    if (train_ids.count(x.id)) {
      throw ContractViolation("eval instance '" + render(env.vocab(), x.instruction) + "' overlaps the training set");
    }
  }
  if (eval_set.empty()) throw ContractViolation("evaluate needs a nonempty eval set");
  const Token marker = env.vocab().id(kMarkerWord);
  SampleOptions so{decode.temperature, decode.greedy, decode.max_len};
  std::vector<MetricsRecord> out;
  for (const auto& cond : conditions) {
    for (std::uint64_t seed : seeds) {
      MetricsRecord m;
      m.label = cond.label();
      m.seed = seed;
      for (std::size_t i = 0; i < eval_set.size(); ++i) {
        const auto& x = eval_set[i];
        Rng r(derive_seed(seed, "eval", i));
        auto s = sample(params, wrap_context(cond.feedback(), x.instruction), r, so);
        auto content = response_content(s.response);
        m.accuracy += env.verify(x, s.response) == Verdict::kCorrect ? 1.0 : 0.0;
        m.marker_rate += !content.empty() && content.front() == marker ? 1.0 : 0.0;
        m.mean_length += static_cast<double>(content.size());
        m.mean_score += env.reference_score(x, s.response);
      }
      m.sample_count = eval_set.size();
      const double n = static_cast<double>(m.sample_count);
      m.accuracy /= n;
      m.marker_rate /= n;
      m.mean_length /= n;
      m.mean_score /= n;
      out.push_back(m);
    }
  }
  return out;
}

std::string sweep_csv(std::span<const MetricsRecord> records) {
  std::ostringstream s;
  s << "condition,seed,accuracy,marker_rate,mean_length,mean_score,sample_count\n";
  for (const auto& r : records) {
    s << to_string(r.label) << ',' << r.seed << ',' << format_double(r.accuracy) << ',' << format_double(r.marker_rate)
      << ',' << format_double(r.mean_length) << ',' << format_double(r.mean_score) << ',' << r.sample_count << '\n';
  }
  return s.str();
}

nlohmann::ordered_json sweep_summary(std::span<const MetricsRecord> records, const std::string& config_digest) {
  if (records.empty()) throw ContractViolation("condition sweep needs records");
  struct Acc {
    double accuracy = 0, marker_rate = 0, mean_length = 0, mean_score = 0;
    std::size_t n = 0;
  };
  std::vector<ConditionLabel> order;
  std::map<ConditionLabel, Acc> acc;
  for (const auto& r : records) {
    if (!acc.count(r.label)) order.push_back(r.label);
    auto& a = acc[r.label];
    a.accuracy += r.accuracy;
    a.marker_rate += r.marker_rate;
    a.mean_length += r.mean_length;
    a.mean_score += r.mean_score;
    ++a.n;
  }
  for (auto& [l, a] : acc) {
    const double n = static_cast<double>(a.n);
    a.accuracy /= n;
    a.marker_rate /= n;
    a.mean_length /= n;
    a.mean_score /= n;
  }
  nlohmann::ordered_json j;
  j["config_digest"] = config_digest;
  nlohmann::ordered_json conds = nlohmann::ordered_json::array();
  const Acc* null_acc = acc.count(ConditionLabel::kNullCondition) ? &acc[ConditionLabel::kNullCondition] : nullptr;
  for (auto l : order) {
    const auto& a = acc[l];
    nlohmann::ordered_json e;
    e["condition"] = std::string(to_string(l));
    e["seeds"] = a.n;
    e["accuracy"] = a.accuracy;
    e["marker_rate"] = a.marker_rate;
    e["mean_length"] = a.mean_length;
    e["mean_score"] = a.mean_score;
    if (null_acc) {
      e["delta_vs_null"] = {{"accuracy", a.accuracy - null_acc->accuracy},
                            {"marker_rate", a.marker_rate - null_acc->marker_rate},
                            {"mean_length", a.mean_length - null_acc->mean_length},
                            {"mean_score", a.mean_score - null_acc->mean_score}};
    }
    conds.push_back(e);
  }
  j["conditions"] = conds;
  return j;
}

void condition_sweep_report(std::span<const MetricsRecord> records, const std::filesystem::path& stem,
                            const std::string& config_digest) {
  auto summary = sweep_summary(records, config_digest);
  auto csv_path = stem;
  csv_path += ".csv";
  auto json_path = stem;
  json_path += ".json";
  write_file(csv_path, sweep_csv(records));
  write_file(json_path, summary.dump(2) + "\n");
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw ContractViolation("moving average window must be positive");
  std::vector<double> out;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out.push_back(sum / static_cast<double>(std::min(i + 1, window)));
  }
  return out;
}

std::string dynamics_csv(const std::map<std::string, std::vector<RoundMetrics>>& logs) {
  if (logs.empty()) throw ContractViolation("dynamics report needs at least one log");
  std::size_t rounds = 0;
  for (const auto& [name, log] : logs) rounds = std::max(rounds, log.size());
  static constexpr const char* kFields[] = {"accuracy", "mean_score", "mean_length", "loss"};
  auto field = [](const RoundMetrics& m, int f) {
    switch (f) {
      case 0: return m.accuracy;
      case 1: return m.mean_score;
      case 2: return m.mean_length;
      default: return m.loss;
    }
  };
  std::ostringstream s;
  s << "round";
  std::vector<std::vector<std::vector<double>>> ma;  // [method][field][round]
  for (const auto& [name, log] : logs) {
    ma.emplace_back();
    for (int f = 0; f < 4; ++f) {
      s << ',' << name << '_' << kFields[f] << ',' << name << '_' << kFields[f] << "_ma10";
      std::vector<double> v;
      for (const auto& m : log) v.push_back(field(m, f));
      ma.back().push_back(moving_average(v));
    }
  }
  s << '\n';
  for (std::size_t r = 0; r < rounds; ++r) {
    s << r + 1;
    std::size_t k = 0;
    for (const auto& [name, log] : logs) {
      for (int f = 0; f < 4; ++f) {
        if (r < log.size()) {
          s << ',' << format_double(field(log[r], f)) << ',' << format_double(ma[k][static_cast<std::size_t>(f)][r]);
        } else {
          s << ",NA,NA";
        }
      }
      ++k;
    }
    s << '\n';
  }
  return s.str();
}

void dynamics_report(const std::map<std::string, std::vector<RoundMetrics>>& logs, const std::filesystem::path& path) {
  write_file(path, dynamics_csv(logs));
}

std::string metrics_csv(std::span<const RoundMetrics> rows) {
  std::ostringstream s;
  s << "round,accuracy,positive_feedback_rate,mean_score,mean_length,loss,count\n";
  for (const auto& m : rows) {
    s << m.round << ',' << format_double(m.accuracy) << ',' << format_double(m.positive_feedback_rate) << ','
      << format_double(m.mean_score) << ',' << format_double(m.mean_length) << ',' << format_double(m.loss) << ','
      << m.count << '\n';
  }
  return s.str();
}

std::vector<RoundMetrics> parse_metrics_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<RoundMetrics> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw ParseError("metrics row needs 7 columns", lineno);
    RoundMetrics m;
    try {
      m.round = std::stoi(f[0]);
      m.accuracy = std::stod(f[1]);
      m.positive_feedback_rate = std::stod(f[2]);
      m.mean_score = std::stod(f[3]);
      m.mean_length = std::stod(f[4]);
      m.loss = std::stod(f[5]);
      m.count = std::stoul(f[6]);
    } catch (const std::exception&) {
      throw ParseError("malformed metrics row", lineno);
    }
    out.push_back(m);
  }
  return out;
}

double least_squares_slope(std::span<const double> values) {
  const double n = static_cast<double>(values.size());
  if (values.size() < 2) return 0.0;
  double mx = (n - 1.0) / 2.0, my = 0.0;
  for (double v : values) my += v;
  my /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    num += (static_cast<double>(i) - mx) * (values[i] - my);
    den += (static_cast<double>(i) - mx) * (static_cast<double>(i) - mx);
  }
  return num / den;
}

}  // namespace fcp
