#include "fcp/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fcp/errors.hpp"
#include "fcp/neural.hpp"
#include "fcp/oracle.hpp"

namespace fcp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> softmax(const std::vector<double>& logits, double temperature = 1.0) {
  double mx = kNegInf;
  for (double z : logits) mx = std::max(mx, z);
  std::vector<double> p(logits.size(), 0.0);
  if (mx == kNegInf) throw DomainError("softmax over a row with no finite logit");
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = logits[i] == kNegInf ? 0.0 : std::exp((logits[i] - mx) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

void check_tokens(const TokenSequence& seq, std::size_t vocab_size) {
  for (Token t : seq.tokens()) {
    if (t.id >= vocab_size) throw ContractViolation("token id " + std::to_string(t.id) + " outside vocabulary");
  }
}

struct TabularView {
  const std::vector<TokenSequence>* targets;
  std::vector<double> logits;
};

TabularView tabular_view(const TabularTable& table, const TokenSequence& context) {
  check_tokens(context, table.vocab_size);
  BlockKey space = space_key(context);
  auto sp = table.spaces.find(space);
  if (sp == table.spaces.end()) throw ContractViolation("no tabular space registered for this context");
  TabularView v{&sp->second, {}};
  auto row = table.rows.find(row_key(context));
  if (row != table.rows.end()) {
    v.logits = row->second;
  } else if (auto ref = table.reference.find(space); ref != table.reference.end()) {
    v.logits = ref->second;
  } else {
    v.logits.assign(sp->second.size(), 0.0);
  }
  return v;
}

std::size_t target_index(const std::vector<TokenSequence>& targets, const TokenSequence& target) {
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].tokens() == target.tokens()) return i;
  }
  return targets.size();
}

std::vector<Token> neural_input(const TokenSequence& context, const TokenSequence& target) {
  std::vector<Token> in;
  in.reserve(context.size() + target.size() + 1);
  in.push_back(Vocabulary::kBos);
  in.insert(in.end(), context.tokens().begin(), context.tokens().end());
  in.insert(in.end(), target.tokens().begin(), target.tokens().end());
  return in;
}

std::size_t pick(const std::vector<double>& probs, Rng& rng, bool greedy) {
  if (!greedy) return rng.categorical(probs);
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

}  // namespace

std::string_view to_string(Backend b) { return b == Backend::kTabular ? "tabular" : "neural"; }

std::string_view to_string(AggregationMode m) {
  return m == AggregationMode::kTokenMean ? "token_mean" : "seq_mean_token_sum";
}

Backend parse_backend(std::string_view text) {
  if (text == "tabular") return Backend::kTabular;
  if (text == "neural") return Backend::kNeural;
  throw ConfigError("unknown backend '" + std::string(text) + "' (expected tabular or neural)");
}

AggregationMode parse_aggregation(std::string_view text) {
  if (text == "token_mean") return AggregationMode::kTokenMean;
  if (text == "seq_mean_token_sum") return AggregationMode::kSeqMeanTokenSum;
  throw ConfigError("unknown aggregation mode '" + std::string(text) + "'");
}

PolicyParameters make_tabular_policy(const Vocabulary& vocab) {
  PolicyParameters p;
  TabularTable t;
  t.vocab_size = vocab.size();
  p.impl = std::move(t);
  p.vocab_hash = vocab.hash();
  return p;
}

PolicyParameters make_neural_policy(const NeuralShape& shape, std::uint64_t vocab_hash, Rng& rng) {
  PolicyParameters p;
  NeuralWeights w;
  w.shape = shape;
  neural::initialize(w, rng);
  p.impl = std::move(w);
  p.vocab_hash = vocab_hash;
  return p;
}

BlockKey space_key(const TokenSequence& context) {
  switch (context.role()) {
    case Role::kInstruction: return context.tokens();
    case Role::kContext: return unwrap_context(context).instruction.tokens();
    case Role::kCritiqueContext: {
      BlockKey k{Vocabulary::kPad};
      k.insert(k.end(), context.tokens().begin(), context.tokens().end());
      return k;
    }
    default: throw ContractViolation("policy context must be an instruction, context or critique context");
  }
}

BlockKey row_key(const TokenSequence& context) {
  if (context.role() == Role::kCritiqueContext) return space_key(context);
  if (context.role() == Role::kContext) unwrap_context(context);
  else if (context.role() != Role::kInstruction) throw ContractViolation("bad context role for a tabular row");
  return context.tokens();
}

void register_space(PolicyParameters& params, const TokenSequence& space, std::vector<TokenSequence> targets,
                    std::vector<double> reference_logits) {
  auto& t = params.tabular();
  if (targets.empty()) throw ContractViolation("register_space: empty target set");
  if (!reference_logits.empty() && reference_logits.size() != targets.size()) {
    throw ContractViolation("register_space: reference logits do not match the target set");
  }
  for (const auto& tgt : targets) check_tokens(tgt, t.vocab_size);
  BlockKey key = space_key(space);
  if (!reference_logits.empty()) t.reference[key] = std::move(reference_logits);
  t.spaces[key] = std::move(targets);
}

TabularDistribution tabular_distribution(const PolicyParameters& params, const TokenSequence& context) {
  auto v = tabular_view(params.tabular(), context);
  return {v.targets, softmax(v.logits)};
}

LogProb log_prob(const PolicyParameters& params, const TokenSequence& context, const TokenSequence& target) {
  LogProb out;
  if (params.backend() == Backend::kNeural) {
    const auto& w = params.neural();
    check_tokens(context, w.shape.vocab);
    check_tokens(target, w.shape.vocab);
    if (target.empty()) return out;
    auto in = neural_input(context, target);
    out.total = -neural::sequence_nll(w, in, context.size() + 1, &out.per_token, nullptr, 0.0);
    return out;
  }
  check_tokens(target, params.tabular().vocab_size);
  auto dist = tabular_distribution(params, context);
  const auto& targets = *dist.targets;
  const auto& tk = target.tokens();
  double prev_mass = 1.0;
  for (std::size_t t = 0; t < tk.size(); ++t) {
    double mass = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto& cand = targets[i].tokens();
      if (cand.size() > t && std::equal(tk.begin(), tk.begin() + static_cast<long>(t) + 1, cand.begin())) {
        mass += dist.probs[i];
      }
    }
    // Prefix masses can round slightly; the total below is taken directly.
    out.per_token.push_back(mass > 0.0 && prev_mass > 0.0 ? std::log(mass / prev_mass) : kNegInf);
    prev_mass = mass;
  }
  std::size_t k = target_index(targets, target);
  out.total = k < targets.size() && dist.probs[k] > 0.0 ? std::log(dist.probs[k]) : kNegInf;
  // Keep the decomposition exactly additive: absorb rounding into the last term.
  if (!out.per_token.empty() && std::isfinite(out.total)) {
    double head = 0.0;
    for (std::size_t i = 0; i + 1 < out.per_token.size(); ++i) head += out.per_token[i];
    out.per_token.back() = out.total - head;
  }
  return out;
}

std::vector<double> next_token_distribution(const PolicyParameters& params, const TokenSequence& context,
                                            std::span<const Token> prefix) {
  if (params.backend() == Backend::kNeural) {
    const auto& w = params.neural();
    check_tokens(context, w.shape.vocab);
    std::vector<Token> in{Vocabulary::kBos};
    in.insert(in.end(), context.tokens().begin(), context.tokens().end());
    in.insert(in.end(), prefix.begin(), prefix.end());
    return softmax(neural::next_logits(w, in));
  }
  const auto& table = params.tabular();
  auto dist = tabular_distribution(params, context);
  std::vector<double> out(table.vocab_size, 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < dist.targets->size(); ++i) {
    const auto& cand = (*dist.targets)[i].tokens();
    if (cand.size() > prefix.size() && std::equal(prefix.begin(), prefix.end(), cand.begin())) {
      out[cand[prefix.size()].id] += dist.probs[i];
      mass += dist.probs[i];
    }
  }
  if (mass <= 0.0) throw DomainError("prefix has zero probability under the tabular policy");
  for (double& v : out) v /= mass;
  return out;
}

Sample sample(const PolicyParameters& params, const TokenSequence& context, Rng& rng, const SampleOptions& options) {
  if (params.purpose == PolicyPurpose::kCritique) {
    throw ContractViolation("critique-direction parameters are not a response policy");
  }
  if (!(options.temperature > 0.0) && !options.greedy) throw ContractViolation("temperature must be positive");
  Sample s;
  if (params.backend() == Backend::kTabular) {
    auto v = tabular_view(params.tabular(), context);
    auto probs = options.greedy ? softmax(v.logits) : softmax(v.logits, options.temperature);
    std::size_t k = pick(probs, rng, options.greedy);
    std::vector<Token> toks = (*v.targets)[k].tokens();
    if (toks.size() > options.max_len) {
      toks.resize(options.max_len);
      s.truncated = toks.back() != Vocabulary::kEos;
    }
    s.response = TokenSequence(Role::kResponse, std::move(toks));
    return s;
  }
  const auto& w = params.neural();
  check_tokens(context, w.shape.vocab);
  std::vector<Token> in{Vocabulary::kBos};
  in.insert(in.end(), context.tokens().begin(), context.tokens().end());
  std::vector<Token> out;
  s.truncated = true;
  while (out.size() < options.max_len && in.size() < w.shape.max_len) {
    auto logits = neural::next_logits(w, in);
    if (!options.greedy) {
      for (double& z : logits) z /= options.temperature;
    }
    auto probs = softmax(logits);
    Token t{static_cast<std::uint32_t>(pick(probs, rng, options.greedy))};
    out.push_back(t);
    in.push_back(t);
    if (t == Vocabulary::kEos) {
      s.truncated = false;
      break;
    }
  }
  s.response = TokenSequence(Role::kResponse, std::move(out));
  return s;
}

LossAndGradients scaled_nll_gradients(const PolicyParameters& params, std::span<const Example> batch,
                                      std::span<const double> coefficients, double normalizer) {
  if (batch.empty()) throw ContractViolation("gradient computation on an empty batch");
  if (coefficients.size() != batch.size()) throw ContractViolation("one coefficient per example required");
  if (!(normalizer > 0.0)) throw ContractViolation("normalizer must be positive");
  LossAndGradients out;
  if (params.backend() == Backend::kNeural) {
    const auto& w = params.neural();
    auto& g = out.grads[BlockKey{}];
    g.assign(neural::Layout::of(w.shape).total, 0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      check_tokens(batch[i].context, w.shape.vocab);
      check_tokens(batch[i].target, w.shape.vocab);
      if (batch[i].target.empty()) continue;
      auto in = neural_input(batch[i].context, batch[i].target);
      double scale = coefficients[i] / normalizer;
      double nll = neural::sequence_nll(w, in, batch[i].context.size() + 1, nullptr, scale != 0.0 ? &g : nullptr, scale);
      if (!std::isfinite(nll)) throw TrainingAborted("non-finite loss at batch index " + std::to_string(i));
      out.loss += scale * nll;
    }
    return out;
  }
  const auto& table = params.tabular();
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto v = tabular_view(table, batch[i].context);
    std::size_t k = target_index(*v.targets, batch[i].target);
    if (k == v.targets->size()) {
      throw ContractViolation("target at batch index " + std::to_string(i) + " is outside the tabular space");
    }
    auto probs = softmax(v.logits);
    double scale = coefficients[i] / normalizer;
    if (probs[k] <= 0.0) {
      if (scale == 0.0) continue;
      throw TrainingAborted("non-finite loss at batch index " + std::to_string(i));
    }
    out.loss += scale * -std::log(probs[k]);
    auto& g = out.grads[row_key(batch[i].context)];
    if (g.empty()) g.assign(probs.size(), 0.0);
    for (std::size_t j = 0; j < probs.size(); ++j) g[j] += scale * probs[j];
    g[k] -= scale;
  }
  return out;
}

LossAndGradients nll_gradients(const PolicyParameters& params, std::span<const Example> batch, AggregationMode mode) {
  std::vector<double> coef;
  double normalizer = 0.0;
  for (const auto& ex : batch) {
    coef.push_back(ex.weight);
    normalizer += mode == AggregationMode::kTokenMean ? ex.weight * static_cast<double>(ex.target.size()) : ex.weight;
  }
  if (!(normalizer > 0.0)) throw ContractViolation("batch has no weighted tokens");
  return scaled_nll_gradients(params, batch, coef, normalizer);
}

double aggregate_loss(std::span<const std::vector<double>> per_token_nll, std::span<const double> weights,
                      AggregationMode mode) {
  if (per_token_nll.size() != weights.size()) throw ContractViolation("one weight per sequence required");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < per_token_nll.size(); ++i) {
    double s = 0.0;
    for (double v : per_token_nll[i]) s += v;
    num += weights[i] * s;
    den += mode == AggregationMode::kTokenMean ? weights[i] * static_cast<double>(per_token_nll[i].size()) : weights[i];
  }
  if (!(den > 0.0)) throw ContractViolation("aggregate_loss: empty batch");
  return num / den;
}

double LrSchedule::at(std::int64_t step) const {
  if (warmup_steps > 0 && step < warmup_steps) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  if (kind == Kind::kConstant) return base_lr;
  const double span = static_cast<double>(std::max<std::int64_t>(1, total_steps - warmup_steps));
  const double progress = std::clamp(static_cast<double>(step - warmup_steps) / span, 0.0, 1.0);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void apply_gradients(PolicyParameters& params, OptimizerState& state, const Gradients& grads, double learning_rate) {
  ++state.step;
  const auto& a = state.adam;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(a.beta1, t);
  const double c2 = 1.0 - std::pow(a.beta2, t);
  auto update = [&](std::vector<double>& w, const std::vector<double>& g, Moments& m) {
    if (m.first.size() != w.size()) {
      m.first.assign(w.size(), 0.0);
      m.second.assign(w.size(), 0.0);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      m.first[i] = a.beta1 * m.first[i] + (1.0 - a.beta1) * g[i];
      m.second[i] = a.beta2 * m.second[i] + (1.0 - a.beta2) * g[i] * g[i];
      if (!std::isfinite(w[i])) continue;  // -inf logits stay pinned at zero probability
      w[i] -= learning_rate * ((m.first[i] / c1) / (std::sqrt(m.second[i] / c2) + a.eps) + a.weight_decay * w[i]);
    }
  };
  if (params.backend() == Backend::kNeural) {
    auto it = grads.find(BlockKey{});
    if (it == grads.end()) return;
    update(params.neural().values, it->second, state.moments[BlockKey{}]);
    return;
  }
  auto& table = params.tabular();
  for (const auto& [key, g] : grads) {
    auto row = table.rows.find(key);
    if (row == table.rows.end()) {
      // First update of a row starts from the reference logits of its space.
      std::vector<double> init(g.size(), 0.0);
      BlockKey space = key;
      if (!key.empty() && key.front() == Vocabulary::kEfOpen) {
        space = unwrap_context(TokenSequence(Role::kContext, key)).instruction.tokens();
      }
      if (auto ref = table.reference.find(space); ref != table.reference.end()) init = ref->second;
      row = table.rows.emplace(key, std::move(init)).first;
    }
    update(row->second, g, state.moments[key]);
  }
}

double gradient_step(PolicyParameters& params, OptimizerState& state, std::span<const Example> batch,
                     AggregationMode mode, double learning_rate) {
  auto lg = nll_gradients(params, batch, mode);
  if (!std::isfinite(lg.loss)) {
    for (std::size_t i = 0; i < batch.size(); ++i) {
      std::span<const Example> one(&batch[i], 1);
      auto single = nll_gradients(params, one, mode);
      if (!std::isfinite(single.loss)) throw TrainingAborted("non-finite loss at batch index " + std::to_string(i));
    }
    throw TrainingAborted("non-finite aggregated loss");
  }
  for (const auto& [key, g] : lg.grads) {
    for (double v : g) {
      if (!std::isfinite(v)) throw TrainingAborted("non-finite gradient in batch");
    }
  }
  apply_gradients(params, state, lg.grads, learning_rate);
  return lg.loss;
}

void init_special_embeddings(PolicyParameters& params, Rng& rng) {
  if (params.backend() != Backend::kNeural) return;
  auto& w = params.neural();
  const std::size_t d = w.shape.dim;
  const std::size_t v = w.shape.vocab;
  const std::size_t off = neural::Layout::of(w.shape).tok_emb;
  auto at = [&](std::size_t row, std::size_t col) -> double& { return w.values[off + col * v + row]; };
  const std::uint32_t special[] = {Vocabulary::kEfOpen.id, Vocabulary::kEfClose.id};
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  std::size_t n = 0;
  for (std::size_t r = 0; r < v; ++r) {
    if (r == special[0] || r == special[1]) continue;
    ++n;
    for (std::size_t c = 0; c < d; ++c) mean[c] += at(r, c);
  }
  if (n < 2) throw ContractViolation("need at least two ordinary embedding rows");
  for (double& m : mean) m /= static_cast<double>(n);
  for (std::size_t r = 0; r < v; ++r) {
    if (r == special[0] || r == special[1]) continue;
    for (std::size_t c = 0; c < d; ++c) var[c] += (at(r, c) - mean[c]) * (at(r, c) - mean[c]);
  }
  for (double& s : var) s /= static_cast<double>(n - 1);
  for (std::uint32_t r : special) {
    for (std::size_t c = 0; c < d; ++c) at(r, c) = mean[c] + std::sqrt(var[c]) * rng.normal();
  }
}

ConditionalFit exact_conditional_fit(const JointTable& joint, const Vocabulary& vocab) {
  ConditionalFit fit{make_tabular_policy(vocab), {}};
  fit.params.tag = "exact_fit";
  register_space(fit.params, joint.instruction.instruction, joint.responses);
  for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
    if (joint.marginal(c) <= 0.0) {
      fit.excluded.push_back(c);
      continue;
    }
    auto post = posterior(joint, c);
    std::vector<double> logits(post.size());
    for (std::size_t o = 0; o < post.size(); ++o) logits[o] = post[o] > 0.0 ? std::log(post[o]) : kNegInf;
    fit.params.tabular().rows[row_key(wrap_context(joint.feedbacks[c], joint.instruction.instruction))] =
        std::move(logits);
  }
  return fit;
}

TokenSequence critique_target(const TokenSequence& feedback) {
  if (feedback.role() != Role::kFeedback) throw ContractViolation("critique_target expects a feedback sequence");
  auto t = feedback.tokens();
  t.push_back(Vocabulary::kEos);
  return TokenSequence(Role::kFeedback, std::move(t));
}

}  // namespace fcp
