#include "fcp/train.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

bool contains_word(const TokenSequence& seq, const Vocabulary& vocab, const std::vector<std::string>& words) {
  for (Token t : seq.tokens()) {
    if (std::find(words.begin(), words.end(), vocab.word(t)) != words.end()) return true;
  }
  return false;
}

std::vector<std::size_t> round_prompts(std::size_t available, int batch, Rng& rng) {
  std::vector<std::size_t> idx(available);
  for (std::size_t i = 0; i < available; ++i) idx[i] = i;
  rng.shuffle(idx.begin(), idx.end());
  std::vector<std::size_t> out;
  for (int i = 0; i < batch; ++i) out.push_back(idx[static_cast<std::size_t>(i) % available]);
  return out;
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void register_tasks(PolicyParameters& params, const Environment& env, std::span<const TaskInstance> tasks) {
  if (params.backend() != Backend::kTabular) return;
  for (const auto& x : tasks) {
    if (params.tabular().spaces.count(space_key(x.instruction))) continue;
    register_space(params, x.instruction, env.tasks().enumerate_responses(x));
  }
}

void register_critique_spaces(PolicyParameters& params, const Environment& env, const Dataset& dataset,
                              FeedbackStyle style) {
  if (params.backend() != Backend::kTabular) return;
  std::vector<TokenSequence> targets;
  for (const auto& c : env.all_feedback(style)) targets.push_back(critique_target(c));
  for (const auto& t : dataset.triples) {
    auto ctx = critique_context(t.instruction, t.response);
    if (params.tabular().spaces.count(space_key(ctx))) continue;
    register_space(params, ctx, targets);
  }
}

std::vector<std::pair<TaskInstance, TokenSequence>> reference_corpus(const Environment& env,
                                                                     std::span<const TaskInstance> prompts,
                                                                     const ReferenceCorpusOptions& options, Rng& rng) {
  using Form = TaskSuite::Form;
  constexpr Form kForms[] = {Form::kShort, Form::kMedium, Form::kLong, Form::kMessy};
  std::vector<std::pair<TaskInstance, TokenSequence>> out;
  for (const auto& x : prompts) {
    auto answers = env.tasks().plausible_answers(x);
    for (int i = 0; i < options.per_prompt; ++i) {
      std::size_t a = 0;
      if (answers.size() > 1 && rng.uniform() >= options.p_correct) a = 1 + rng.index(answers.size() - 1);
      Form form = kForms[rng.index(4)];
      bool marker = rng.uniform() < options.p_marker;
      out.emplace_back(x, env.tasks().make_response(answers[a], form, marker));
    }
  }
  return out;
}

Selection parse_selection(std::string_view text) {
  if (text == "all") return Selection::kAll;
  if (text == "balanced_pair") return Selection::kBalancedPair;
  throw ConfigError("unknown selection '" + std::string(text) + "' (expected all or balanced_pair)");
}

std::string_view to_string(Selection s) { return s == Selection::kAll ? "all" : "balanced_pair"; }

Dataset collect_offline(const PolicyParameters& reference, const Environment& env, std::span<const TaskInstance> prompts,
                        const CollectOptions& options, Rng& rng) {
  if (options.n_per_prompt < 1) throw ConfigError("n_per_prompt must be at least 1");
  Dataset d;
  if (prompts.empty()) {
    std::cerr << "warning: collect_offline called with an empty instruction stream\n";
    return d;
  }
  const std::uint64_t base = rng.next_u64();
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& x = prompts[i];
    Rng r(derive_seed(base, "collect", i));
    std::vector<TokenSequence> responses;
    for (int k = 0; k < options.n_per_prompt; ++k) {
      responses.push_back(sample(reference, x.instruction, r, options.sampling).response);
    }
    if (options.selection == Selection::kAll) {
      for (auto& o : responses) {
        auto c = env.give_feedback(x, o, options.style, r);
        d.triples.push_back({x.instruction, std::move(o), std::move(c)});
      }
      continue;
    }
    const TokenSequence* good = nullptr;
    const TokenSequence* bad = nullptr;
    for (const auto& o : responses) {
      bool ok = env.verify(x, o) == Verdict::kCorrect;
      if (ok && !good) good = &o;
      if (!ok && !bad) bad = &o;
    }
    if (!good || !bad) continue;
    for (const TokenSequence* o : {good, bad}) {
      auto c = env.give_feedback(x, *o, options.style, r);
      d.triples.push_back({x.instruction, *o, std::move(c)});
    }
  }
  return d;
}

TrainResult train_supervised(PolicyParameters params, std::vector<Example> examples, const SupervisedOptions& options,
                             Rng& rng) {
  if (examples.empty()) throw ContractViolation("training requires a nonempty dataset");
  if (options.epochs < 1 || options.batch_size < 1) throw ConfigError("epochs and batch_size must be positive");
  TrainResult r{std::move(params), {}, {}};
  const std::size_t n = examples.size();
  const auto bs = static_cast<std::size_t>(options.batch_size);
  const std::int64_t per_epoch = static_cast<std::int64_t>((n + bs - 1) / bs);
  r.optimizer.adam.weight_decay = options.weight_decay;
  r.optimizer.schedule = {options.scheduler, options.lr, per_epoch * options.epochs,
                          static_cast<std::int64_t>(std::llround(options.warmup_ratio * static_cast<double>(per_epoch * options.epochs)))};
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  int above = 0;
  std::vector<Example> batch;
  for (int e = 0; e < options.epochs; ++e) {
    if (options.shuffle) rng.shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < n; start += bs) {
      batch.clear();
      for (std::size_t i = start; i < std::min(n, start + bs); ++i) batch.push_back(examples[order[i]]);
      const double lr = r.optimizer.schedule.at(r.optimizer.step);
      double loss = gradient_step(r.params, r.optimizer, batch, options.aggregation, lr);
      r.losses.push_back(loss);
      above = loss > options.divergence_factor * r.losses.front() ? above + 1 : 0;
      if (above >= options.divergence_window) {
        throw TrainingAborted("loss diverged: " + std::to_string(loss) + " after " + std::to_string(r.losses.size()) +
                              " steps (initial " + std::to_string(r.losses.front()) + ")");
      }
    }
  }
  return r;
}

std::vector<Example> fcp_examples(const Dataset& dataset) {
  std::vector<Example> ex;
  ex.reserve(dataset.size());
  for (const auto& t : dataset.triples) ex.push_back({wrap_context(t.feedback.text(), t.instruction), t.response, 1.0});
  return ex;
}

TrainResult train_offline(PolicyParameters params, const Dataset& dataset, const SupervisedOptions& options, Rng& rng) {
  if (dataset.empty()) throw ContractViolation("train_offline requires a nonempty dataset");
  return train_supervised(std::move(params), fcp_examples(dataset), options, rng);
}

std::vector<Example> exhaustive_examples(const JointTable& joint) {
  std::vector<Example> ex;
  for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
    auto ctx = wrap_context(joint.feedbacks[c], joint.instruction.instruction);
    for (std::size_t o = 0; o < joint.num_responses(); ++o) {
      if (joint.joint[o][c] > 0.0) ex.push_back({ctx, joint.responses[o], joint.joint[o][c]});
    }
  }
  return ex;
}

std::vector<std::string> default_length_lexicon() { return {"concise", "verbose", "short", "long", "brief", "succinct"}; }

const TokenSequence& ConditionPool::draw(Rng& rng) const {
  if (entries.empty()) throw ContractViolation("draw from an empty condition pool");
  std::vector<double> w;
  w.reserve(entries.size());
  for (const auto& e : entries) w.push_back(e.weight);
  return entries[rng.categorical(w)].feedback;
}

ConditionPool build_condition_pool(const Dataset& dataset, const PoolOptions& options, const Environment& env) {
  ConditionPool pool;
  pool.score_threshold = options.score_threshold;
  pool.length_filtered = options.length_filtered;
  for (const auto& t : dataset.triples) {
    if (!t.feedback.score_present()) throw ConfigError("condition pool needs scored feedback");
    if (t.feedback.score() < options.score_threshold) continue;
    const auto& text = t.feedback.text();
    if (options.length_filtered && contains_word(text, env.vocab(), options.length_lexicon)) continue;
    if (!options.polarity_whitelist.empty()) {
      auto p = env.classify(text, t.feedback.style());
      if (!p || std::find(options.polarity_whitelist.begin(), options.polarity_whitelist.end(), *p) ==
                    options.polarity_whitelist.end()) {
        continue;
      }
    }
    bool dup = std::any_of(pool.entries.begin(), pool.entries.end(),
                           [&](const ConditionPool::Entry& e) { return e.feedback == text; });
    if (!dup) pool.entries.push_back({text, 1.0});
  }
  if (pool.entries.empty()) {
    throw ConfigError("condition pool is empty after filtering (threshold " + std::to_string(options.score_threshold) +
                      "); bootstrapping cannot start");
  }
  return pool;
}

ConditionAssignment parse_assignment(std::string_view text) {
  if (text == "shared_per_prompt") return ConditionAssignment::kSharedPerPrompt;
  if (text == "per_rollout") return ConditionAssignment::kPerRollout;
  throw ConfigError("unknown condition_assignment '" + std::string(text) + "'");
}

std::string_view to_string(ConditionAssignment a) {
  return a == ConditionAssignment::kSharedPerPrompt ? "shared_per_prompt" : "per_rollout";
}

void TrainingSchedule::validate() const {
  if (rounds < 0) throw ConfigError("online.T must be non-negative");
  if (steps_per_round < 1 || prompt_batch < 1 || rollouts_per_prompt < 1 || train_batch < 1) {
    throw ConfigError("online schedule sizes must be positive");
  }
  if (static_cast<long>(prompt_batch) * rollouts_per_prompt < train_batch) {
    throw ConfigError("prompt_batch x rollouts_per_prompt must be at least the train batch B");
  }
}

RoundMetrics round_metrics(const RolloutBuffer& buffer, const Environment& env) {
  RoundMetrics m;
  m.round = buffer.round;
  m.count = buffer.triples.size();
  if (m.count == 0) throw ContractViolation("round_metrics on an empty buffer");
  for (const auto& t : buffer.triples.triples) {
    auto x = env.tasks().parse_instruction(t.instruction);
    if (env.verify(x, t.response) == Verdict::kCorrect) m.accuracy += 1.0;
    auto p = env.classify(t.feedback.text(), t.feedback.style());
    if (p && *p == Polarity::kFullyPositive) m.positive_feedback_rate += 1.0;
    m.mean_score += t.feedback.score();
    m.mean_length += static_cast<double>(response_content(t.response).size());
  }
  const double n = static_cast<double>(m.count);
  m.accuracy /= n;
  m.positive_feedback_rate /= n;
  m.mean_score /= n;
  m.mean_length /= n;
  return m;
}

OptimizerState online_optimizer(const BootstrapOptions& options) {
  OptimizerState s;
  s.adam.weight_decay = options.weight_decay;
  s.schedule = {LrSchedule::Kind::kConstant, options.lr, 1, 0};
  return s;
}

namespace {

struct RoundOutcome {
  RolloutBuffer buffer;
  RoundMetrics metrics;
};

RoundOutcome sampled_round(BootstrapState& state, int t, const ConditionPool& pool, const Environment& env,
                           std::span<const TaskInstance> prompts, const BootstrapOptions& options, std::uint64_t rs) {
  const auto& sch = options.schedule;
  Rng prompt_rng(derive_seed(rs, "prompts"));
  auto chosen = round_prompts(prompts.size(), sch.prompt_batch, prompt_rng);
  const PolicyParameters snapshot = state.params;  // rollouts never see this round's updates

  RoundOutcome out;
  out.buffer.round = t;
  out.buffer.triples.provenance = Provenance::online_round(t);
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    const auto& x = prompts[chosen[i]];
    Rng r(derive_seed(rs, "rollout", i));
    const TokenSequence* cond = &pool.draw(r);
    for (int k = 0; k < sch.rollouts_per_prompt; ++k) {
      if (k > 0 && sch.assignment == ConditionAssignment::kPerRollout) cond = &pool.draw(r);
      auto s = sample(snapshot, wrap_context(*cond, x.instruction), r, options.sampling);
      auto c = env.give_feedback(x, s.response, options.style, r);
      RolloutBuffer::Meta meta{*cond, env.verify(x, s.response), response_content(s.response).size(), c.score(),
                               s.truncated};
      out.buffer.triples.triples.push_back({x.instruction, std::move(s.response), std::move(c)});
      out.buffer.meta.push_back(std::move(meta));
    }
  }
  if (out.buffer.triples.empty()) throw TrainingAborted("round " + std::to_string(t) + " produced an empty buffer");

  // Relabel with the fresh critique: contexts never contain the sampled c+.
  auto examples = fcp_examples(out.buffer.triples);
  Rng batch_rng(derive_seed(rs, "minibatch"));
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  batch_rng.shuffle(order.begin(), order.end());
  std::size_t cursor = 0;
  double loss_sum = 0.0;
  std::vector<Example> batch;
  for (int s = 0; s < sch.steps_per_round; ++s) {
    batch.clear();
    for (int b = 0; b < sch.train_batch; ++b) {
      if (cursor == order.size()) {
        batch_rng.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      batch.push_back(examples[order[cursor++]]);
    }
    loss_sum += gradient_step(state.params, state.optimizer, batch, sch.aggregation,
                              state.optimizer.schedule.at(state.optimizer.step));
  }
  out.metrics = round_metrics(out.buffer, env);
  out.metrics.loss = loss_sum / sch.steps_per_round;
  return out;
}

// Exact expected update on the tabular backend: the rollout distribution is
// q(o|x) = sum_c+ p_user(c+) pi_{t-1}(o | x, c+), and training the buffer to
// convergence sets every row (c, x) to q(o|x) p_env(c|x,o) normalized.
RoundOutcome expected_round(BootstrapState& state, int t, const ConditionPool& pool, const Environment& env,
                            std::span<const TaskInstance> prompts, const BootstrapOptions& options, std::uint64_t rs) {
  if (state.params.backend() != Backend::kTabular) throw ConfigError("expected-update bootstrap needs the tabular backend");
  Rng prompt_rng(derive_seed(rs, "prompts"));
  auto chosen = round_prompts(prompts.size(), std::min<int>(options.schedule.prompt_batch, static_cast<int>(prompts.size())),
                              prompt_rng);
  std::sort(chosen.begin(), chosen.end());
  const PolicyParameters snapshot = state.params;
  double wsum = 0.0;
  for (const auto& e : pool.entries) wsum += e.weight;

  RoundOutcome out;
  out.buffer.round = t;
  out.buffer.triples.provenance = Provenance::online_round(t);
  out.metrics.round = t;
  for (std::size_t idx : chosen) {
    const auto& x = prompts[idx];
    std::vector<double> q;
    const std::vector<TokenSequence>* responses = nullptr;
    for (const auto& e : pool.entries) {
      auto d = tabular_distribution(snapshot, wrap_context(e.feedback, x.instruction));
      responses = d.targets;
      if (q.empty()) q.assign(d.probs.size(), 0.0);
      for (std::size_t o = 0; o < q.size(); ++o) q[o] += e.weight / wsum * d.probs[o];
    }
    std::vector<TokenSequence> feedbacks;
    std::vector<std::vector<double>> lik(responses->size());
    std::vector<std::vector<FeedbackOutcome>> dists;
    for (std::size_t o = 0; o < responses->size(); ++o) {
      dists.push_back(env.feedback_distribution(x, (*responses)[o], options.style));
      for (const auto& f : dists.back()) {
        if (std::find(feedbacks.begin(), feedbacks.end(), f.text) == feedbacks.end()) feedbacks.push_back(f.text);
      }
    }
    for (std::size_t o = 0; o < responses->size(); ++o) {
      lik[o].assign(feedbacks.size(), 0.0);
      for (const auto& f : dists[o]) {
        lik[o][static_cast<std::size_t>(std::find(feedbacks.begin(), feedbacks.end(), f.text) - feedbacks.begin())] +=
            f.probability;
      }
      const double qo = q[o];
      auto a = env.attributes(x, (*responses)[o]);
      out.metrics.accuracy += qo * (a.correct ? 1.0 : 0.0);
      out.metrics.mean_length += qo * static_cast<double>(response_content((*responses)[o]).size());
      for (const auto& f : dists[o]) {
        out.metrics.mean_score += qo * f.probability * f.score;
        if (f.polarity == Polarity::kFullyPositive) out.metrics.positive_feedback_rate += qo * f.probability;
      }
    }
    auto joint = make_joint(x, *responses, std::move(feedbacks), std::move(q), std::move(lik));
    for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
      if (joint.marginal(c) <= 0.0) continue;
      auto post = posterior(joint, c);
      std::vector<double> logits(post.size());
      for (std::size_t o = 0; o < post.size(); ++o) logits[o] = post[o] > 0.0 ? std::log(post[o]) : kNegInf;
      state.params.tabular().rows[row_key(wrap_context(joint.feedbacks[c], x.instruction))] = std::move(logits);
    }
  }
  const double n = static_cast<double>(chosen.size());
  out.metrics.accuracy /= n;
  out.metrics.mean_length /= n;
  out.metrics.mean_score /= n;
  out.metrics.positive_feedback_rate /= n;
  out.metrics.count = chosen.size();
  return out;
}

}  // namespace

BootstrapState bootstrap(BootstrapState state, const ConditionPool& pool, const Environment& env,
                         std::span<const TaskInstance> prompts, const BootstrapOptions& options, std::uint64_t seed,
                         const RoundCallback& on_round) {
  options.schedule.validate();
  if (pool.entries.empty()) throw ConfigError("bootstrap needs a nonempty condition pool");
  if (prompts.empty() && options.schedule.rounds > state.completed_rounds) {
    throw ConfigError("bootstrap needs at least one prompt");
  }
  for (int t = state.completed_rounds + 1; t <= options.schedule.rounds; ++t) {
    const std::uint64_t rs = derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(t));
    RoundOutcome r = options.mode == BootstrapMode::kExpected ? expected_round(state, t, pool, env, prompts, options, rs)
                                                              : sampled_round(state, t, pool, env, prompts, options, rs);
    state.completed_rounds = t;
    if (on_round) on_round(state, r.buffer, r.metrics);
  }
  return state;
}

}  // namespace fcp
