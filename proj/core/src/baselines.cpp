#include "fcp/baselines.hpp"

#include <cmath>

#include "fcp/errors.hpp"

namespace fcp {

std::vector<double> GroupAdvantage::compute(std::span<const double> rewards) {
  std::vector<double> adv(rewards.size(), 0.0);
  if (rewards.empty()) return adv;
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  bool all_equal = true;
  double var = 0.0;
  for (double r : rewards) {
    all_equal = all_equal && r == rewards[0];
    var += (r - mean) * (r - mean);
  }
  if (all_equal) return adv;
  const double sd = std::sqrt(var / static_cast<double>(rewards.size()));
  for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / (sd + kEpsilon);
  return adv;
}

std::vector<Example> sft_examples(const Dataset& dataset) {
  std::vector<Example> ex;
  ex.reserve(dataset.size());
  for (const auto& t : dataset.triples) ex.push_back({t.instruction, t.response, 1.0});
  return ex;
}

TrainResult train_sft(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng) {
  if (dataset.empty()) throw ConfigError("SFT needs a nonempty dataset");
  auto r = train_supervised(std::move(params), sft_examples(dataset), options, rng);
  r.params.tag = "sft";
  return r;
}

Dataset filter_correct(const Dataset& dataset, const Environment& env) {
  Dataset out;
  out.provenance = dataset.provenance;
  for (const auto& t : dataset.triples) {
    if (env.verify(env.tasks().parse_instruction(t.instruction), t.response) == Verdict::kCorrect) {
      out.triples.push_back(t);
    }
  }
  return out;
}

TrainResult train_rft(PolicyParameters params, const Dataset& dataset, const Environment& env,
                      const SupervisedOptions& options, Rng& rng) {
  Dataset kept = filter_correct(dataset, env);
  if (kept.empty()) throw ConfigError("RFT: the dataset has no correct responses");
  auto r = train_sft(std::move(params), kept, options, rng);
  r.params.tag = "rft";
  return r;
}

std::vector<Example> cft_examples(const Dataset& dataset) {
  std::vector<Example> ex;
  ex.reserve(dataset.size());
  for (const auto& t : dataset.triples) {
    ex.push_back({critique_context(t.instruction, t.response), critique_target(t.feedback.text()), 1.0});
  }
  return ex;
}

TrainResult train_cft(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng) {
  if (dataset.empty()) throw ConfigError("CFT needs a nonempty dataset");
  params.purpose = PolicyPurpose::kCritique;
  auto r = train_supervised(std::move(params), cft_examples(dataset), options, rng);
  r.params.tag = "cft";
  return r;
}

GrpoResult train_grpo_lite(PolicyParameters params, const Environment& env, std::span<const TaskInstance> prompts,
                           const GrpoOptions& options, std::uint64_t seed) {
  if (options.group_size < 2) throw ConfigError("GRPO-lite needs rollouts_per_prompt >= 2");
  if (options.rounds > 0 && prompts.empty()) throw ConfigError("GRPO-lite needs prompts");
  GrpoResult res{std::move(params), {}, {}};
  res.params.tag = "grpo_lite";
  res.optimizer.adam.weight_decay = options.weight_decay;
  res.optimizer.schedule = {LrSchedule::Kind::kConstant, options.lr, 1, 0};
  for (int t = 1; t <= options.rounds; ++t) {
    const std::uint64_t rs = derive_seed(seed, "grpo", static_cast<std::uint64_t>(t));
    Rng prompt_rng(derive_seed(rs, "prompts"));
    const PolicyParameters snapshot = res.params;
    std::vector<Example> batch;
    std::vector<double> coef;
    RoundMetrics m;
    m.round = t;
    for (int i = 0; i < options.prompt_batch; ++i) {
      const auto& x = prompts[prompt_rng.index(prompts.size())];
      Rng r(derive_seed(rs, "rollout", static_cast<std::uint64_t>(i)));
      std::vector<TokenSequence> group;
      std::vector<double> rewards;
      for (int k = 0; k < options.group_size; ++k) {
        auto s = sample(snapshot, x.instruction, r, options.sampling);
        auto c = env.give_feedback(x, s.response, options.style, r);
        rewards.push_back(c.score());
        m.accuracy += env.verify(x, s.response) == Verdict::kCorrect ? 1.0 : 0.0;
        m.mean_length += static_cast<double>(response_content(s.response).size());
        auto p = env.classify(c.text(), options.style);
        m.positive_feedback_rate += p && *p == Polarity::kFullyPositive ? 1.0 : 0.0;
        group.push_back(std::move(s.response));
      }
      auto adv = GroupAdvantage::compute(rewards);
      for (std::size_t k = 0; k < group.size(); ++k) {
        m.mean_score += rewards[k];
        if (adv[k] == 0.0 || group[k].empty()) continue;
        batch.push_back({x.instruction, group[k], 1.0});
        coef.push_back(adv[k]);
      }
    }
    m.count = static_cast<std::size_t>(options.prompt_batch) * static_cast<std::size_t>(options.group_size);
    const double n = static_cast<double>(m.count);
    m.accuracy /= n;
    m.mean_length /= n;
    m.mean_score /= n;
    m.positive_feedback_rate /= n;
    if (!batch.empty()) {
      // Minimizing sum_i A_i * nll_i / n ascends the advantage-weighted likelihood.
      auto lg = scaled_nll_gradients(res.params, batch, coef, n);
      m.loss = lg.loss;
      apply_gradients(res.params, res.optimizer, lg.grads, res.optimizer.schedule.at(res.optimizer.step));
    }
    res.metrics.push_back(m);
  }
  return res;
}

}  // namespace fcp
