#include "fcp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

using ojson = nlohmann::ordered_json;

constexpr const char* kDefaults = R"json({
  "env": {
    "task_kind": "modular_arithmetic",
    "difficulty": 9,
    "noise_rate": 0.05,
    "grammar_path": "",
    "style": "reviewer",
    "train_prompts": 64,
    "eval_prompts": 64
  },
  "policy": {
    "backend": "tabular",
    "dim": 32,
    "layers": 2,
    "hidden": 64,
    "max_len": 64,
    "max_response_len": 20,
    "reference": {
      "per_prompt": 4,
      "p_correct": 0.5,
      "p_marker": 0.3,
      "epochs": 10,
      "batch_size": 32,
      "lr": 0.02,
      "scheduler": "cosine",
      "warmup_ratio": 0.1
    }
  },
  "offline": {
    "n_per_prompt": 8,
    "selection": "all",
    "epochs": 4,
    "batch_size": 32,
    "lr": 1.0,
    "scheduler": "cosine",
    "warmup_ratio": 0.1,
    "weight_decay": 0.0,
    "aggregation": "token_mean"
  },
  "pool": {
    "threshold": 0.8,
    "length_filtered": false,
    "length_lexicon": ["concise", "verbose", "short", "long", "brief", "succinct"],
    "polarity_whitelist": []
  },
  "online": {
    "T": 30,
    "S": 4,
    "prompt_batch": 64,
    "rollouts_per_prompt": 4,
    "B": 64,
    "aggregation": "token_mean",
    "condition_assignment": "shared_per_prompt",
    "lr": 5.0,
    "weight_decay": 0.01,
    "temperature": 1.0,
    "mode": "sampled"
  },
  "eval": {
    "conditions": ["fully_positive", "fully_negative", "neutral", "has_code", "null_condition"],
    "seeds": [1, 2, 3, 4],
    "decode": "greedy",
    "temperature": 1.0
  },
  "master_seed": 20250101,
  "output_dir": "runs/default"
})json";

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

bool same_kind(const ojson& def, const ojson& val) {
  if (def.is_number_float()) return val.is_number();
  if (def.is_number_integer()) return val.is_number_integer();
  if (def.is_boolean()) return val.is_boolean();
  if (def.is_string()) return val.is_string();
  if (def.is_array()) return val.is_array();
  if (def.is_object()) return val.is_object();
  return false;
}

void unknown_key(const std::string& key, const ojson& defaults) {
  std::string msg = "unknown config key '" + key + "'";
  auto hint = suggest_key(key, config_keys(defaults));
  if (!hint.empty()) msg += "; did you mean '" + hint + "'?";
  throw ConfigError(msg);
}

void merge(ojson& target, const ojson& user, const std::string& prefix, const ojson& defaults) {
  if (!user.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!target.contains(it.key())) unknown_key(key, defaults);
    auto& slot = target[it.key()];
    if (slot.is_object()) {
      merge(slot, it.value(), key, defaults);
    } else {
      if (!same_kind(slot, it.value())) throw ConfigError("config key '" + key + "' has the wrong type");
      slot = it.value();
    }
  }
}

void apply_override(ojson& cfg, const std::string& spec, const ojson& defaults) {
  auto eq = spec.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + spec + "' is not key=value");
  const std::string key = spec.substr(0, eq);
  const std::string raw = spec.substr(eq + 1);
  ojson* node = &cfg;
  std::size_t start = 0;
  while (true) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) unknown_key(key, defaults);
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_object()) throw ConfigError("override '" + key + "' names a section, not a value");
  ojson value = ojson::parse(raw, nullptr, false);
  if (value.is_discarded() || (node->is_string() && !value.is_string())) value = raw;
  if (!same_kind(*node, value)) throw ConfigError("override '" + key + "' has the wrong type");
  *node = value;
}

template <class T>
T get(const ojson& j, const char* key) {
  return j.at(key).get<T>();
}

LrSchedule::Kind parse_scheduler(const std::string& s) {
  if (s == "cosine") return LrSchedule::Kind::kCosine;
  if (s == "constant") return LrSchedule::Kind::kConstant;
  throw ConfigError("unknown scheduler '" + s + "'");
}

void positive(long v, const char* key) {
  if (v < 1) throw ConfigError(std::string(key) + " must be positive");
}

SupervisedOptions supervised(const ojson& j, const char* where) {
  SupervisedOptions o;
  o.epochs = get<int>(j, "epochs");
  o.batch_size = get<int>(j, "batch_size");
  o.lr = get<double>(j, "lr");
  o.scheduler = parse_scheduler(get<std::string>(j, "scheduler"));
  o.warmup_ratio = get<double>(j, "warmup_ratio");
  if (j.contains("weight_decay")) o.weight_decay = get<double>(j, "weight_decay");
  if (j.contains("aggregation")) o.aggregation = parse_aggregation(get<std::string>(j, "aggregation"));
  positive(o.epochs, where);
  positive(o.batch_size, where);
  if (!(o.lr > 0.0)) throw ConfigError(std::string(where) + ".lr must be positive");
  if (o.warmup_ratio < 0.0 || o.warmup_ratio > 1.0) throw ConfigError(std::string(where) + ".warmup_ratio must lie in [0, 1]");
  return o;
}

}  // namespace

std::vector<std::string> config_keys(const ojson& j, const std::string& prefix) {
  std::vector<std::string> out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    out.push_back(key);
    if (it.value().is_object()) {
      auto sub = config_keys(it.value(), key);
      out.insert(out.end(), sub.begin(), sub.end());
    }
  }
  return out;
}

std::string suggest_key(const std::string& key, const std::vector<std::string>& known) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const auto& k : known) {
    std::size_t d = edit_distance(key, k);
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best_d <= std::max<std::size_t>(2, key.size() / 3) ? best : std::string();
}

ojson default_config_json() { return ojson::parse(kDefaults); }

std::string ExperimentConfig::digest() const {
  ojson copy = resolved;
  copy.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(copy.dump())));
  return buf;
}

ExperimentConfig load_config(const ojson& user, const std::vector<std::string>& overrides) {
  const ojson defaults = default_config_json();
  ojson r = defaults;
  merge(r, user, "", defaults);
  for (const auto& o : overrides) apply_override(r, o, defaults);

  ExperimentConfig c;
  c.resolved = r;
  try {
    const auto& e = r.at("env");
    c.env.task_kind = get<std::string>(e, "task_kind");
    if (c.env.task_kind != "mixed") parse_task_kind(c.env.task_kind);
    c.env.difficulty = get<int>(e, "difficulty");
    c.env.noise_rate = get<double>(e, "noise_rate");
    c.env.grammar_path = get<std::string>(e, "grammar_path");
    c.env.style = parse_style(get<std::string>(e, "style"));
    c.env.train_prompts = get<int>(e, "train_prompts");
    c.env.eval_prompts = get<int>(e, "eval_prompts");
    positive(c.env.train_prompts, "env.train_prompts");
    positive(c.env.eval_prompts, "env.eval_prompts");
    if (!(c.env.noise_rate >= 0.0 && c.env.noise_rate <= 1.0)) throw ConfigError("env.noise_rate must lie in [0, 1]");

    const auto& p = r.at("policy");
    c.policy.backend = parse_backend(get<std::string>(p, "backend"));
    c.policy.shape.dim = get<std::size_t>(p, "dim");
    c.policy.shape.layers = get<std::size_t>(p, "layers");
    c.policy.shape.hidden = get<std::size_t>(p, "hidden");
    c.policy.shape.max_len = get<std::size_t>(p, "max_len");
    c.policy.max_response_len = get<std::size_t>(p, "max_response_len");
    positive(static_cast<long>(c.policy.max_response_len), "policy.max_response_len");
    const auto& ref = p.at("reference");
    c.policy.reference.corpus.per_prompt = get<int>(ref, "per_prompt");
    c.policy.reference.corpus.p_correct = get<double>(ref, "p_correct");
    c.policy.reference.corpus.p_marker = get<double>(ref, "p_marker");
    c.policy.reference.training = supervised(ref, "policy.reference");

    const auto& off = r.at("offline");
    c.offline.collect.n_per_prompt = get<int>(off, "n_per_prompt");
    positive(c.offline.collect.n_per_prompt, "offline.n_per_prompt");
    c.offline.collect.selection = parse_selection(get<std::string>(off, "selection"));
    c.offline.collect.style = c.env.style;
    c.offline.collect.sampling.max_len = c.policy.max_response_len;
    c.offline.training = supervised(off, "offline");

    const auto& pool = r.at("pool");
    c.pool.score_threshold = get<double>(pool, "threshold");
    c.pool.length_filtered = get<bool>(pool, "length_filtered");
    c.pool.length_lexicon = pool.at("length_lexicon").get<std::vector<std::string>>();
    for (const auto& s : pool.at("polarity_whitelist")) c.pool.polarity_whitelist.push_back(parse_polarity(s.get<std::string>()));

    const auto& on = r.at("online");
    auto& sch = c.online.schedule;
    sch.rounds = get<int>(on, "T");
    sch.steps_per_round = get<int>(on, "S");
    sch.prompt_batch = get<int>(on, "prompt_batch");
    sch.rollouts_per_prompt = get<int>(on, "rollouts_per_prompt");
    sch.train_batch = get<int>(on, "B");
    sch.aggregation = parse_aggregation(get<std::string>(on, "aggregation"));
    sch.assignment = parse_assignment(get<std::string>(on, "condition_assignment"));
    sch.validate();
    c.online.lr = get<double>(on, "lr");
    c.online.weight_decay = get<double>(on, "weight_decay");
    c.online.style = c.env.style;
    c.online.sampling.temperature = get<double>(on, "temperature");
    c.online.sampling.max_len = c.policy.max_response_len;
    if (!(c.online.sampling.temperature > 0.0)) throw ConfigError("online.temperature must be positive");
    const auto mode = get<std::string>(on, "mode");
    if (mode == "sampled") {
      c.online.mode = BootstrapMode::kSampled;
    } else if (mode == "expected") {
      c.online.mode = BootstrapMode::kExpected;
    } else {
      throw ConfigError("online.mode must be sampled or expected");
    }

    const auto& ev = r.at("eval");
    for (const auto& s : ev.at("conditions")) c.eval.conditions.push_back(parse_condition_label(s.get<std::string>()));
    c.eval.seeds = ev.at("seeds").get<std::vector<std::uint64_t>>();
    if (c.eval.seeds.empty()) throw ConfigError("eval.seeds must not be empty");
    const auto decode = get<std::string>(ev, "decode");
    if (decode != "greedy" && decode != "sample") throw ConfigError("eval.decode must be greedy or sample");
    c.eval.decode.greedy = decode == "greedy";
    c.eval.decode.temperature = get<double>(ev, "temperature");
    c.eval.decode.max_len = c.policy.max_response_len;

    c.master_seed = r.at("master_seed").get<std::uint64_t>();
    c.output_dir = get<std::string>(r, "output_dir");
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("invalid config: ") + ex.what());
  }
  if (const char* env_dir = std::getenv("FCP_OUTPUT_DIR"); env_dir && *env_dir) {
    c.output_dir = env_dir;
    c.resolved["output_dir"] = env_dir;
  }
  return c;
}

ExperimentConfig load_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  ojson user = ojson::parse(f, nullptr, false);
  if (user.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return load_config(user, overrides);
}

}  // namespace fcp
