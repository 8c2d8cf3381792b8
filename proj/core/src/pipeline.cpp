#include "fcp/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fcp/baselines.hpp"
#include "fcp/checkpoint.hpp"
#include "fcp/errors.hpp"
#include "fcp/oracle.hpp"

namespace fcp {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

struct Context {
  ExperimentConfig cfg;
  std::unique_ptr<Environment> env;
  fs::path root;
};

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << content;
  if (!f) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw MissingArtifact("missing upstream artifact " + path.string());
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_manifest(const Context& ctx, const std::string& stage, const std::vector<std::string>& files) {
  ojson m;
  m["stage"] = stage;
  m["config_digest"] = ctx.cfg.digest();
  m["master_seed"] = ctx.cfg.master_seed;
  m["files"] = files;
  write_text(ctx.root / stage / "manifest.json", m.dump(2) + "\n");
}

FeedbackGrammar load_grammar(const EnvSection& env) {
  if (env.grammar_path.empty()) return FeedbackGrammar::builtin();
  std::ifstream f(env.grammar_path);
  if (!f) throw ConfigError("cannot read grammar file " + env.grammar_path);
  auto j = nlohmann::json::parse(f, nullptr, false);
  if (j.is_discarded()) throw ConfigError("grammar file " + env.grammar_path + " is not valid JSON");
  return FeedbackGrammar::from_json(j);
}

Context make_context(const RunOptions& o) {
  Context ctx;
  ctx.cfg = o.config_path.empty() ? load_config(ojson::object(), o.overrides) : load_config_file(o.config_path, o.overrides);
  ctx.env = std::make_unique<Environment>(load_grammar(ctx.cfg.env), EnvOptions{ctx.cfg.env.noise_rate});
  ctx.root = ctx.cfg.output_dir;
  fs::create_directories(ctx.root);
  write_text(ctx.root / "config.resolved.json", ctx.cfg.resolved.dump(2) + "\n");
  return ctx;
}

// ---- tasks ----

void write_tasks(const fs::path& path, const std::vector<TaskInstance>& tasks, const Vocabulary& vocab) {
  std::string out;
  for (const auto& t : tasks) {
    ojson j;
    j["id"] = hex(t.id);
    j["kind"] = std::string(to_string(t.kind));
    j["x"] = render(vocab, t.instruction);
    out += j.dump() + "\n";
  }
  write_text(path, out);
}

std::vector<TaskInstance> read_tasks(const fs::path& path, const Environment& env) {
  std::istringstream in(read_text(path));
  std::vector<TaskInstance> tasks;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("x")) throw ParseError("malformed task record in " + path.string(), n);
    tasks.push_back(env.tasks().parse_instruction(make_sequence(env.vocab(), Role::kInstruction, j["x"].get<std::string>())));
  }
  return tasks;
}

int gen_tasks(Context& ctx) {
  const auto& e = ctx.cfg.env;
  Rng rng(derive_seed(ctx.cfg.master_seed, "gen-tasks"));
  const std::size_t want = static_cast<std::size_t>(e.train_prompts + e.eval_prompts);
  std::vector<TaskInstance> all;
  std::set<std::uint64_t> seen;
  std::size_t attempts = 0;
  while (all.size() < want) {
    if (++attempts > 200 * want + 1000) {
      throw ConfigError("cannot draw " + std::to_string(want) + " distinct tasks at this difficulty");
    }
    TaskKind kind = e.task_kind == "mixed" ? (rng.index(2) == 0 ? TaskKind::kModularArithmetic : TaskKind::kStringTransform)
                                           : parse_task_kind(e.task_kind);
    int difficulty = e.difficulty;
    if (e.task_kind == "mixed") {
      auto r = supported_difficulty(kind);
      difficulty = std::clamp(difficulty, r.lo, r.hi);
    }
    auto t = ctx.env->generate_instruction(kind, difficulty, rng);
    if (seen.insert(t.id).second) all.push_back(std::move(t));
  }
  std::vector<TaskInstance> train(all.begin(), all.begin() + e.train_prompts);
  std::vector<TaskInstance> eval(all.begin() + e.train_prompts, all.end());
  write_tasks(ctx.root / "tasks" / "train.jsonl", train, ctx.env->vocab());
  write_tasks(ctx.root / "tasks" / "eval.jsonl", eval, ctx.env->vocab());
  write_manifest(ctx, "tasks", {"train.jsonl", "eval.jsonl"});
  return kExitOk;
}

// ---- policies ----

PolicyParameters load_policy(const Context& ctx, const fs::path& path) {
  return load_checkpoint(path, ctx.env->vocab().hash()).params;
}

void write_dataset(const fs::path& path, const Dataset& d, const Vocabulary& vocab) {
  std::ostringstream s;
  serialize_dataset(d, vocab, s);
  write_text(path, s.str());
}

Dataset read_dataset(const fs::path& path, const Vocabulary& vocab) {
  std::istringstream in(read_text(path));
  return deserialize_dataset(in, vocab);
}

std::string loss_csv(const std::vector<double>& losses) {
  std::string s = "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) s += std::to_string(i + 1) + "," + format_double(losses[i]) + "\n";
  return s;
}

PolicyParameters build_reference(const Context& ctx, const std::vector<TaskInstance>& train) {
  const auto& vocab = ctx.env->vocab();
  if (ctx.cfg.policy.backend == Backend::kTabular) {
    auto p = make_tabular_policy(vocab);
    register_tasks(p, *ctx.env, train);
    return p;
  }
  NeuralShape shape = ctx.cfg.policy.shape;
  shape.vocab = vocab.size();
  Rng init(derive_seed(ctx.cfg.master_seed, "reference-init"));
  auto p = make_neural_policy(shape, vocab.hash(), init);
  Rng corpus_rng(derive_seed(ctx.cfg.master_seed, "reference-corpus"));
  auto corpus = reference_corpus(*ctx.env, train, ctx.cfg.policy.reference.corpus, corpus_rng);
  std::vector<Example> ex;
  for (auto& [x, o] : corpus) ex.push_back({x.instruction, o, 1.0});
  Rng train_rng(derive_seed(ctx.cfg.master_seed, "reference-train"));
  auto r = train_supervised(std::move(p), std::move(ex), ctx.cfg.policy.reference.training, train_rng);
  r.params.tag = "reference";
  return std::move(r.params);
}

int collect(Context& ctx) {
  auto train = read_tasks(ctx.root / "tasks" / "train.jsonl", *ctx.env);
  auto reference = build_reference(ctx, train);
  save_checkpoint(ctx.root / "collect" / "reference.json", reference);
  Rng rng(derive_seed(ctx.cfg.master_seed, "collect"));
  auto d = collect_offline(reference, *ctx.env, train, ctx.cfg.offline.collect, rng);
  write_dataset(ctx.root / "collect" / "offline.jsonl", d, ctx.env->vocab());
  write_manifest(ctx, "collect", {"offline.jsonl", "reference.json"});
  return kExitOk;
}

int train_offline_stage(Context& ctx) {
  auto data = read_dataset(ctx.root / "collect" / "offline.jsonl", ctx.env->vocab());
  auto params = load_policy(ctx, ctx.root / "collect" / "reference.json");
  Rng special(derive_seed(ctx.cfg.master_seed, "special-embeddings"));
  init_special_embeddings(params, special);
  Rng rng(derive_seed(ctx.cfg.master_seed, "train-offline"));
  auto r = train_offline(std::move(params), data, ctx.cfg.offline.training, rng);
  r.params.tag = "fcp_offline";
  save_checkpoint(ctx.root / "train-offline" / "policy.json", r.params);
  write_text(ctx.root / "train-offline" / "loss.csv", loss_csv(r.losses));
  write_manifest(ctx, "train-offline", {"policy.json", "loss.csv"});
  return kExitOk;
}

int build_pool(Context& ctx) {
  auto data = read_dataset(ctx.root / "collect" / "offline.jsonl", ctx.env->vocab());
  auto pool = build_condition_pool(data, ctx.cfg.pool, *ctx.env);
  std::string out;
  for (const auto& e : pool.entries) {
    ojson j;
    j["c"] = render(ctx.env->vocab(), e.feedback);
    j["weight"] = e.weight;
    out += j.dump() + "\n";
  }
  write_text(ctx.root / "build-pool" / "pool.jsonl", out);
  write_manifest(ctx, "build-pool", {"pool.jsonl"});
  return kExitOk;
}

ConditionPool read_pool(const Context& ctx) {
  std::istringstream in(read_text(ctx.root / "build-pool" / "pool.jsonl"));
  ConditionPool pool;
  pool.score_threshold = ctx.cfg.pool.score_threshold;
  pool.length_filtered = ctx.cfg.pool.length_filtered;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ParseError("malformed pool record", n);
    pool.entries.push_back({make_sequence(ctx.env->vocab(), Role::kFeedback, j.at("c").get<std::string>()),
                            j.at("weight").get<double>()});
  }
  if (pool.entries.empty()) throw ConfigError("condition pool file is empty");
  return pool;
}

std::string round_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "round_%03d", t);
  return buf;
}

int bootstrap_stage(Context& ctx, int resume_round) {
  const fs::path dir = ctx.root / "bootstrap";
  auto prompts = read_tasks(ctx.root / "tasks" / "train.jsonl", *ctx.env);
  auto pool = read_pool(ctx);
  BootstrapState state;
  std::vector<RoundMetrics> metrics;
  if (resume_round > 0) {
    auto ck = load_checkpoint(dir / "checkpoints" / (round_name(resume_round) + ".json"), ctx.env->vocab().hash());
    state.params = std::move(ck.params);
    state.optimizer = ck.optimizer.value_or(online_optimizer(ctx.cfg.online));
    state.completed_rounds = resume_round;
    for (const auto& m : parse_metrics_csv(read_text(dir / "metrics.csv"))) {
      if (m.round <= resume_round) metrics.push_back(m);
    }
  } else {
    state.params = load_policy(ctx, ctx.root / "train-offline" / "policy.json");
    state.optimizer = online_optimizer(ctx.cfg.online);
  }
  register_tasks(state.params, *ctx.env, prompts);
  std::vector<std::string> files;
  auto on_round = [&](const BootstrapState& s, const RolloutBuffer& buffer, const RoundMetrics& m) {
    metrics.push_back(m);
    const std::string name = round_name(s.completed_rounds);
    if (!buffer.triples.empty()) write_dataset(dir / "buffers" / (name + ".jsonl"), buffer.triples, ctx.env->vocab());
    save_checkpoint(dir / "checkpoints" / (name + ".json"), s.params, &s.optimizer);
    write_text(dir / "metrics.csv", metrics_csv(metrics));
  };
  state = bootstrap(std::move(state), pool, *ctx.env, prompts, ctx.cfg.online, derive_seed(ctx.cfg.master_seed, "online"),
                    on_round);
  state.params.tag = "fcp_bootstrap";
  save_checkpoint(dir / "policy.json", state.params, &state.optimizer);
  write_text(dir / "metrics.csv", metrics_csv(metrics));
  write_manifest(ctx, "bootstrap", {"policy.json", "metrics.csv", "buffers/", "checkpoints/"});
  return kExitOk;
}

int train_baseline(Context& ctx, const std::string& method) {
  const fs::path dir = ctx.root / "train-baseline" / method;
  auto reference = load_policy(ctx, ctx.root / "collect" / "reference.json");
  Rng rng(derive_seed(ctx.cfg.master_seed, "baseline-" + method));
  if (method == "grpo") {
    auto prompts = read_tasks(ctx.root / "tasks" / "train.jsonl", *ctx.env);
    register_tasks(reference, *ctx.env, prompts);
    GrpoOptions g;
    g.rounds = ctx.cfg.online.schedule.rounds;
    g.prompt_batch = ctx.cfg.online.schedule.prompt_batch;
    g.group_size = ctx.cfg.online.schedule.rollouts_per_prompt;
    g.lr = ctx.cfg.online.lr;
    g.weight_decay = ctx.cfg.online.weight_decay;
    g.sampling = ctx.cfg.online.sampling;
    g.style = ctx.cfg.env.style;
    auto r = train_grpo_lite(std::move(reference), *ctx.env, prompts, g, derive_seed(ctx.cfg.master_seed, "grpo"));
    save_checkpoint(dir / "policy.json", r.params);
    write_text(dir / "metrics.csv", metrics_csv(r.metrics));
    write_manifest(ctx, "train-baseline/" + method, {"policy.json", "metrics.csv"});
    return kExitOk;
  }
  auto data = read_dataset(ctx.root / "collect" / "offline.jsonl", ctx.env->vocab());
  TrainResult r;
  if (method == "sft") {
    r = train_sft(std::move(reference), data, ctx.cfg.offline.training, rng);
  } else if (method == "rft") {
    r = train_rft(std::move(reference), data, *ctx.env, ctx.cfg.offline.training, rng);
  } else if (method == "cft") {
    register_critique_spaces(reference, *ctx.env, data, ctx.cfg.env.style);
    r = train_cft(std::move(reference), data, ctx.cfg.offline.training, rng);
  } else {
    throw ConfigError("unknown baseline method '" + method + "' (expected sft, rft, cft or grpo)");
  }
  save_checkpoint(dir / "policy.json", r.params);
  write_text(dir / "loss.csv", loss_csv(r.losses));
  write_manifest(ctx, "train-baseline/" + method, {"policy.json", "loss.csv"});
  return kExitOk;
}

int eval_stage(Context& ctx, std::ostream& out) {
  auto train = read_tasks(ctx.root / "tasks" / "train.jsonl", *ctx.env);
  auto eval_set = read_tasks(ctx.root / "tasks" / "eval.jsonl", *ctx.env);
  std::set<std::uint64_t> train_ids;
  for (const auto& t : train) train_ids.insert(t.id);
  const std::pair<const char*, fs::path> candidates[] = {
      {"offline", ctx.root / "train-offline" / "policy.json"},
      {"bootstrap", ctx.root / "bootstrap" / "policy.json"},
      {"sft", ctx.root / "train-baseline" / "sft" / "policy.json"},
      {"rft", ctx.root / "train-baseline" / "rft" / "policy.json"},
      {"grpo", ctx.root / "train-baseline" / "grpo" / "policy.json"},
  };
  auto conditions = standard_conditions(*ctx.env, ctx.cfg.env.style, ctx.cfg.eval.conditions);
  std::vector<std::string> files;
  for (const auto& [name, path] : candidates) {
    if (!fs::exists(path)) continue;
    auto params = load_policy(ctx, path);
    register_tasks(params, *ctx.env, eval_set);
    auto records = evaluate(params, conditions, eval_set, *ctx.env, ctx.cfg.eval.decode, ctx.cfg.eval.seeds, train_ids);
    condition_sweep_report(records, ctx.root / "eval" / name, ctx.cfg.digest());
    files.push_back(std::string(name) + ".csv");
    files.push_back(std::string(name) + ".json");
    out << "eval " << name << ": " << records.size() << " records\n";
  }
  if (files.empty()) throw MissingArtifact("no trained policy found (expected " + candidates[0].second.string() + ")");
  write_manifest(ctx, "eval", files);
  return kExitOk;
}

// ---- verify ----

JointTable random_joint(const Environment& env, std::size_t nr, std::size_t nf, Rng& rng) {
  auto x = env.generate_instruction(TaskKind::kModularArithmetic, 9, rng);
  auto all_r = env.tasks().enumerate_responses(x);
  auto all_f = env.all_feedback(FeedbackStyle::kReviewer);
  if (nr < 1 || nr > all_r.size() || nf < 1 || nf > all_f.size()) {
    throw ConfigError("verify sizes must be within 1.." + std::to_string(all_r.size()) + " responses and 1.." +
                      std::to_string(all_f.size()) + " feedbacks");
  }
  std::vector<TokenSequence> responses(all_r.begin(), all_r.begin() + static_cast<long>(nr));
  std::vector<TokenSequence> feedbacks(all_f.begin(), all_f.begin() + static_cast<long>(nf));
  std::vector<double> prior(nr);
  double s = 0.0;
  for (double& p : prior) s += (p = 0.05 + rng.uniform());
  for (double& p : prior) p /= s;
  std::vector<std::vector<double>> lik(nr, std::vector<double>(nf));
  for (auto& row : lik) {
    double t = 0.0;
    for (double& v : row) t += (v = 0.01 + rng.uniform());
    for (double& v : row) v /= t;
    // Force the row to sum to one exactly within rounding.
    double sum = 0.0;
    for (std::size_t c = 0; c + 1 < nf; ++c) sum += row[c];
    row[nf - 1] = 1.0 - sum;
  }
  return make_joint(x, std::move(responses), std::move(feedbacks), std::move(prior), std::move(lik));
}

int verify_stage(Context& ctx, const VerifyOptions& v, bool json, std::ostream& out) {
  const std::uint64_t seed = v.seed.value_or(derive_seed(ctx.cfg.master_seed, "verify"));
  ojson all = ojson::array();
  bool ok = true;
  double worst_identity = 0.0, worst_bayes = 0.0;
  for (std::size_t i = 0; i < v.instances; ++i) {
    Rng rng(derive_seed(seed, "instance", i));
    JointTable joint;
    std::size_t c_plus = 0;
    if (v.use_env) {
      auto x = ctx.env->generate_instruction(TaskKind::kModularArithmetic, 9, rng);
      auto ref = make_tabular_policy(ctx.env->vocab());
      register_tasks(ref, *ctx.env, std::span<const TaskInstance>(&x, 1));
      joint = enumerate_joint(ref, *ctx.env, x, ctx.cfg.env.style);
      auto target = ctx.env->representative_feedback(Polarity::kFullyPositive, ctx.cfg.env.style);
      for (std::size_t c = 0; c < joint.num_feedbacks(); ++c) {
        if (joint.feedbacks[c] == target) c_plus = c;
      }
    } else {
      joint = random_joint(*ctx.env, v.responses, v.feedbacks, rng);
    }
    double bayes = 0.0;
    for (std::size_t c : marginal_support(joint)) {
      auto post = posterior(joint, c);
      const double m = joint.marginal(c);
      for (std::size_t o = 0; o < post.size(); ++o) bayes = std::max(bayes, std::abs(post[o] * m - joint.joint[o][c]));
    }
    std::vector<double> pi(joint.num_responses());
    double s = 0.0;
    for (std::size_t o = 0; o < pi.size(); ++o) s += (pi[o] = joint.prior[o] > 0.0 ? rng.uniform() + 1e-3 : 0.0);
    for (double& p : pi) p /= s;
    auto report = kl_objective(pi, joint, c_plus);
    auto at_post = kl_objective(posterior(joint, c_plus), joint, c_plus);
    const bool pass = report.identity_residual < 1e-9 && bayes < 1e-12 &&
                      at_post.objective_value >= report.objective_value && std::abs(joint.total_mass() - 1.0) < 1e-9;
    ok = ok && pass;
    worst_identity = std::max(worst_identity, report.identity_residual);
    worst_bayes = std::max(worst_bayes, bayes);
    ojson e;
    e["instance"] = i;
    e["responses"] = joint.num_responses();
    e["feedbacks"] = joint.num_feedbacks();
    e["bayes_residual"] = bayes;
    e["report"] = report.to_json();
    e["pass"] = pass;
    all.push_back(e);
  }
  ojson agg;
  agg["instances"] = v.instances;
  agg["max_identity_residual"] = worst_identity;
  agg["max_bayes_residual"] = worst_bayes;
  agg["pass"] = ok;
  agg["config_digest"] = ctx.cfg.digest();
  if (json) {
    out << ojson{{"reports", all}, {"aggregate", agg}}.dump(2) << "\n";
  } else {
    for (const auto& e : all) out << e.dump() << "\n";
    out << (ok ? "PASS" : "FAIL") << " verify: " << v.instances << " instance(s), max identity_residual "
        << worst_identity << ", max bayes residual " << worst_bayes << "\n";
  }
  return ok ? kExitOk : kExitFailure;
}

// ---- report ----

int report_stage(Context& ctx, bool json, std::ostream& out) {
  std::map<std::string, std::vector<RoundMetrics>> logs;
  const std::pair<const char*, fs::path> sources[] = {
      {"fcp", ctx.root / "bootstrap" / "metrics.csv"},
      {"grpo_lite", ctx.root / "train-baseline" / "grpo" / "metrics.csv"},
  };
  for (const auto& [name, path] : sources) {
    if (fs::exists(path)) logs[name] = parse_metrics_csv(read_text(path));
  }
  if (logs.empty()) throw MissingArtifact("no round metrics found (expected " + sources[0].second.string() + ")");
  dynamics_report(logs, ctx.root / "report" / "dynamics.csv");
  ojson summary;
  summary["config_digest"] = ctx.cfg.digest();
  ojson methods = ojson::object();
  for (const auto& [name, log] : logs) {
    if (log.empty()) continue;
    std::vector<double> lengths;
    for (const auto& m : log) lengths.push_back(m.mean_length);
    methods[name] = {{"rounds", log.size()},
                     {"first_accuracy", log.front().accuracy},
                     {"final_accuracy", log.back().accuracy},
                     {"final_mean_score", log.back().mean_score},
                     {"final_mean_length", log.back().mean_length},
                     {"mean_length_slope", least_squares_slope(lengths)}};
  }
  summary["methods"] = methods;
  if (logs.count("fcp") && logs.count("grpo_lite") && !logs["fcp"].empty() && !logs["grpo_lite"].empty()) {
    summary["fcp_final_score_le_grpo"] = logs["fcp"].back().mean_score <= logs["grpo_lite"].back().mean_score;
  }
  ojson evals = ojson::object();
  for (const char* name : {"offline", "bootstrap", "sft", "rft", "grpo"}) {
    auto p = ctx.root / "eval" / (std::string(name) + ".json");
    if (fs::exists(p)) evals[name] = ojson::parse(read_text(p));
  }
  summary["eval"] = evals;
  write_text(ctx.root / "report" / "summary.json", summary.dump(2) + "\n");
  write_manifest(ctx, "report", {"dynamics.csv", "summary.json"});
  if (json) {
    out << summary.dump(2) << "\n";
  } else {
    for (const auto& [name, m] : methods.items()) {
      out << name << ": final accuracy " << m["final_accuracy"].get<double>() << ", final mean_score "
          << m["final_mean_score"].get<double>() << ", mean_length slope " << m["mean_length_slope"].get<double>()
          << "\n";
    }
  }
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> k = {"gen-tasks", "collect", "train-offline", "build-pool", "bootstrap",
                                             "train-baseline", "eval", "verify", "report"};
  return k;
}

int run(const std::string& subcommand, const RunOptions& options, std::ostream& out, std::ostream& err) {
  try {
    const auto& known = subcommands();
    if (std::find(known.begin(), known.end(), subcommand) == known.end()) {
      throw ConfigError("unknown subcommand '" + subcommand + "'");
    }
    Context ctx = make_context(options);
    if (subcommand == "gen-tasks") return gen_tasks(ctx);
    if (subcommand == "collect") return collect(ctx);
    if (subcommand == "train-offline") return train_offline_stage(ctx);
    if (subcommand == "build-pool") return build_pool(ctx);
    if (subcommand == "bootstrap") return bootstrap_stage(ctx, options.resume_round);
    if (subcommand == "train-baseline") return train_baseline(ctx, options.method);
    if (subcommand == "eval") return eval_stage(ctx, out);
    if (subcommand == "verify") return verify_stage(ctx, options.verify, options.json, out);
    return report_stage(ctx, options.json, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace fcp
