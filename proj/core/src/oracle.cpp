#include "fcp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double log_sum_exp(const std::vector<double>& logs) {
  double mx = kNegInf;
  for (double v : logs) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double v : logs) s += std::exp(v - mx);
  return mx + std::log(s);
}

void check_distribution(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw DomainError(std::string(what) + " does not sum to 1");
}

}  // namespace

double JointTable::log_marginal(std::size_t c) const {
  std::vector<double> logs;
  logs.reserve(responses.size());
  for (std::size_t o = 0; o < responses.size(); ++o) {
    logs.push_back(log_or_neg_inf(prior[o]) + log_or_neg_inf(likelihood[o][c]));
  }
  return log_sum_exp(logs);
}

double JointTable::marginal(std::size_t c) const {
  double m = 0.0;
  for (std::size_t o = 0; o < responses.size(); ++o) m += joint[o][c];
  return m;
}

double JointTable::total_mass() const {
  double m = 0.0;
  for (const auto& row : joint) {
    for (double v : row) m += v;
  }
  return m;
}

JointTable make_joint(TaskInstance instruction, std::vector<TokenSequence> responses,
                      std::vector<TokenSequence> feedbacks, std::vector<double> prior,
                      std::vector<std::vector<double>> likelihood) {
  if (prior.size() != responses.size() || likelihood.size() != responses.size()) {
    throw DomainError("joint: prior and likelihood must have one entry per response");
  }
  check_distribution(prior, "prior");
  JointTable j;
  j.instruction = std::move(instruction);
  for (std::size_t o = 0; o < likelihood.size(); ++o) {
    if (likelihood[o].size() != feedbacks.size()) throw DomainError("joint: likelihood row has the wrong width");
    double sum = 0.0;
    for (double v : likelihood[o]) {
      if (!(v >= 0.0)) throw DomainError("joint: negative likelihood");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw DomainError("joint: likelihood row " + std::to_string(o) + " sums to " + std::to_string(sum));
    }
  }
  j.joint.assign(responses.size(), std::vector<double>(feedbacks.size(), 0.0));
  for (std::size_t o = 0; o < responses.size(); ++o) {
    for (std::size_t c = 0; c < feedbacks.size(); ++c) j.joint[o][c] = prior[o] * likelihood[o][c];
  }
  j.responses = std::move(responses);
  j.feedbacks = std::move(feedbacks);
  j.prior = std::move(prior);
  j.likelihood = std::move(likelihood);
  return j;
}

JointTable enumerate_joint(const PolicyParameters& reference, const Environment& env, const TaskInstance& x,
                           FeedbackStyle style, EnumerationLimits limits) {
  auto dist = tabular_distribution(reference, x.instruction);
  const auto& responses = *dist.targets;
  if (responses.size() > limits.max_responses) {
    throw DomainError("response space has " + std::to_string(responses.size()) + " entries, limit " +
                      std::to_string(limits.max_responses));
  }
  std::vector<TokenSequence> feedbacks;
  std::vector<std::vector<FeedbackOutcome>> per_response;
  for (const auto& o : responses) {
    per_response.push_back(env.feedback_distribution(x, o, style));
    for (const auto& f : per_response.back()) {
      if (std::find(feedbacks.begin(), feedbacks.end(), f.text) == feedbacks.end()) feedbacks.push_back(f.text);
    }
    if (feedbacks.size() > limits.max_feedbacks) {
      throw DomainError("feedback support exceeds " + std::to_string(limits.max_feedbacks) + " strings");
    }
  }
  std::vector<std::vector<double>> lik(responses.size(), std::vector<double>(feedbacks.size(), 0.0));
  for (std::size_t o = 0; o < responses.size(); ++o) {
    for (const auto& f : per_response[o]) {
      auto c = static_cast<std::size_t>(std::find(feedbacks.begin(), feedbacks.end(), f.text) - feedbacks.begin());
      lik[o][c] += f.probability;
    }
  }
  auto j = make_joint(x, responses, std::move(feedbacks), dist.probs, std::move(lik));
  j.style = style;
  return j;
}

std::vector<double> posterior(const JointTable& joint, std::size_t c) {
  if (c >= joint.num_feedbacks()) throw DomainError("feedback index out of range");
  const double lm = joint.log_marginal(c);
  if (lm == kNegInf) throw OutOfSupport("feedback has zero marginal probability under the joint");
  std::vector<double> post(joint.num_responses(), 0.0);
  for (std::size_t o = 0; o < post.size(); ++o) {
    double lj = log_or_neg_inf(joint.prior[o]) + log_or_neg_inf(joint.likelihood[o][c]);
    post[o] = lj == kNegInf ? 0.0 : std::exp(lj - lm);
  }
  return post;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) return kInfiniteKl;
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(kl, 0.0);
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw DomainError("tv_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

nlohmann::json DiagnosticsReport::to_json() const {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return v > 0 ? "inf" : "-inf";
  };
  return {{"kl_forward", num(kl_forward)},
          {"kl_reverse", num(kl_reverse)},
          {"objective_value", num(objective_value)},
          {"identity_residual", num(identity_residual)},
          {"posterior_tv_distance", num(posterior_tv_distance)}};
}

DiagnosticsReport kl_objective(std::span<const double> pi, const JointTable& joint, std::size_t c_plus) {
  if (pi.size() != joint.num_responses()) throw DomainError("pi must cover the joint's response set");
  check_distribution(pi, "pi");
  for (std::size_t o = 0; o < pi.size(); ++o) {
    if (pi[o] > 0.0 && joint.prior[o] <= 0.0) {
      throw DomainError("pi puts mass on response " + std::to_string(o) + " outside the prior's support");
    }
  }
  const auto post = posterior(joint, c_plus);
  DiagnosticsReport r;
  r.kl_reverse = kl_divergence(pi, post);
  r.kl_forward = kl_divergence(post, pi);
  r.posterior_tv_distance = tv_distance(pi, post);

  double expected_log_lik = 0.0;
  for (std::size_t o = 0; o < pi.size(); ++o) {
    if (pi[o] <= 0.0) continue;
    double l = joint.likelihood[o][c_plus];
    if (l <= 0.0) {
      expected_log_lik = kNegInf;
      break;
    }
    expected_log_lik += pi[o] * std::log(l);
  }
  const double kl_prior = kl_divergence(pi, joint.prior);
  r.objective_value = expected_log_lik - kl_prior;
  const double rhs = (r.kl_reverse == kInfiniteKl ? kNegInf : -r.kl_reverse) + joint.log_marginal(c_plus);
  if (r.objective_value == kNegInf && rhs == kNegInf) {
    r.identity_residual = 0.0;
  } else {
    r.identity_residual = std::abs(r.objective_value - rhs);
  }
  return r;
}

double forward_kl_objective(const JointTable& joint, const std::vector<std::vector<double>>& q) {
  if (q.size() != joint.num_feedbacks()) throw DomainError("q must provide one distribution per feedback");
  double total = 0.0;
  for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
    const double m = joint.marginal(c);
    if (m <= 0.0) continue;
    const double kl = kl_divergence(posterior(joint, c), q[c]);
    if (kl == kInfiniteKl) return kInfiniteKl;
    total += m * kl;
  }
  return total;
}

std::vector<std::size_t> marginal_support(const JointTable& joint) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
    if (joint.log_marginal(c) != kNegInf) out.push_back(c);
  }
  return out;
}

std::vector<std::size_t> reachable_feedbacks(const JointTable& joint) {
  std::vector<bool> hit(joint.num_feedbacks(), false);
  for (std::size_t o = 0; o < joint.num_responses(); ++o) {
    if (joint.prior[o] <= 0.0) continue;
    for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) hit[c] = hit[c] || joint.likelihood[o][c] > 0.0;
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < hit.size(); ++c) {
    if (hit[c]) out.push_back(c);
  }
  return out;
}

VerifiableCaseReport verifiable_case_check(const JointTable& joint, std::size_t c_plus,
                                           const std::function<Verdict(const TokenSequence&)>& verifier) {
  std::vector<bool> correct(joint.num_responses());
  std::ostringstream bad;
  for (std::size_t o = 0; o < joint.num_responses(); ++o) {
    correct[o] = verifier(joint.responses[o]) == Verdict::kCorrect;
    const double expected = correct[o] ? 1.0 : 0.0;
    if (joint.likelihood[o][c_plus] != expected) bad << ' ' << o;
  }
  if (!bad.str().empty()) {
    throw VerificationFailure("likelihood of c+ is not the correctness indicator for responses:" + bad.str());
  }
  VerifiableCaseReport r;
  r.posterior = posterior(joint, c_plus);
  for (std::size_t o = 0; o < r.posterior.size(); ++o) {
    if (correct[o]) {
      r.expected_reward += r.posterior[o];
    } else if (r.posterior[o] != 0.0) {
      r.incorrect_mass += r.posterior[o];
      bad << ' ' << o;
    }
  }
  if (!bad.str().empty()) throw VerificationFailure("posterior puts mass on incorrect responses:" + bad.str());
  if (std::abs(r.expected_reward - 1.0) > 1e-12) {
    throw VerificationFailure("posterior expected reward is " + std::to_string(r.expected_reward));
  }
  return r;
}

JointTable verifier_joint(const TaskInstance& x, std::vector<TokenSequence> responses, std::vector<double> prior,
                          const std::function<Verdict(const TokenSequence&)>& verifier, TokenSequence c_plus,
                          TokenSequence c_minus) {
  std::vector<std::vector<double>> lik;
  for (const auto& o : responses) {
    bool ok = verifier(o) == Verdict::kCorrect;
    lik.push_back({ok ? 1.0 : 0.0, ok ? 0.0 : 1.0});
  }
  return make_joint(x, std::move(responses), {std::move(c_plus), std::move(c_minus)}, std::move(prior),
                    std::move(lik));
}

}  // namespace fcp
