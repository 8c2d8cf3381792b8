#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include <json.hpp>

#include "fcp/env.hpp"
#include "fcp/policy.hpp"

namespace fcp {

// Returned by the KL helpers when p puts mass where q has none.
inline constexpr double kInfiniteKl = std::numeric_limits<double>::infinity();

// P_off(o, c | x) = pi_ref(o | x) * p_env(c | x, o) on enumerated spaces.
struct JointTable {
  TaskInstance instruction;
  FeedbackStyle style = FeedbackStyle::kReviewer;
  std::vector<TokenSequence> responses;
  std::vector<TokenSequence> feedbacks;
  std::vector<double> prior;                    // [o]
  std::vector<std::vector<double>> likelihood;  // [o][c]
  std::vector<std::vector<double>> joint;       // [o][c]

  std::size_t num_responses() const { return responses.size(); }
  std::size_t num_feedbacks() const { return feedbacks.size(); }
  double marginal(std::size_t c) const;
  double log_marginal(std::size_t c) const;  // -inf for zero mass
  double total_mass() const;
};

struct EnumerationLimits {
  std::size_t max_responses = 10000;
  std::size_t max_feedbacks = 1000;
};

// Builds a table from explicit pieces. Throws DomainError when a likelihood
// row does not sum to 1 within 1e-12 or the prior is not a distribution.
JointTable make_joint(TaskInstance instruction, std::vector<TokenSequence> responses,
                      std::vector<TokenSequence> feedbacks, std::vector<double> prior,
                      std::vector<std::vector<double>> likelihood);

// The prior comes from the tabular reference on x's space; the feedback axis
// is the union of every response's feedback support. Throws DomainError with
// the sizes when the limits are exceeded.
JointTable enumerate_joint(const PolicyParameters& reference, const Environment& env, const TaskInstance& x,
                           FeedbackStyle style, EnumerationLimits limits = {});

// P_off(. | x, c). Throws OutOfSupport when the marginal of c is exactly 0.
std::vector<double> posterior(const JointTable& joint, std::size_t c);

// KL(p || q) with 0 log 0 = 0; kInfiniteKl when q = 0 < p.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double tv_distance(std::span<const double> p, std::span<const double> q);

struct DiagnosticsReport {
  double kl_forward = 0.0;  // KL(posterior || pi)
  double kl_reverse = 0.0;  // KL(pi || posterior)
  double objective_value = 0.0;
  double identity_residual = 0.0;
  double posterior_tv_distance = 0.0;

  nlohmann::json to_json() const;
};

// objective = E_pi[log p_env(c+ | o)] - KL(pi || prior), checked against
// -KL(pi || posterior) + log P_off(c+ | x). Throws DomainError when pi puts
// mass outside the prior's support.
DiagnosticsReport kl_objective(std::span<const double> pi, const JointTable& joint, std::size_t c_plus);

// Expected forward KL E_{P_off(c|x)}[KL(posterior(c) || q(c))] where q[c] is
// a distribution over responses for every feedback with positive marginal.
double forward_kl_objective(const JointTable& joint, const std::vector<std::vector<double>>& q);

// Feedback indices with positive marginal, and the union of the supports of
// p_env(. | x, o) over supp(prior). Equal by construction; both are exposed so
// the equality can be checked.
std::vector<std::size_t> marginal_support(const JointTable& joint);
std::vector<std::size_t> reachable_feedbacks(const JointTable& joint);

struct VerifiableCaseReport {
  std::vector<double> posterior;
  double incorrect_mass = 0.0;
  double expected_reward = 0.0;
};

// Requires likelihood[o][c+] = 1 for correct o and 0 otherwise. Throws
// VerificationFailure listing the offending responses when that premise or the
// conclusions (zero incorrect mass, expected reward 1) fail.
VerifiableCaseReport verifiable_case_check(const JointTable& joint, std::size_t c_plus,
                                           const std::function<Verdict(const TokenSequence&)>& verifier);

// Joint with a deterministic verifier environment: feedback 0 is c+ (emitted
// for correct responses) and feedback 1 is c- (emitted otherwise).
JointTable verifier_joint(const TaskInstance& x, std::vector<TokenSequence> responses, std::vector<double> prior,
                          const std::function<Verdict(const TokenSequence&)>& verifier, TokenSequence c_plus,
                          TokenSequence c_minus);

}  // namespace fcp
