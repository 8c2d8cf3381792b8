#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcp/baselines.hpp"
#include "fcp/eval.hpp"
#include "fcp/train.hpp"

namespace fcp {

struct EnvSection {
  std::string task_kind = "modular_arithmetic";  // or string_transform, mixed
  int difficulty = 9;
  double noise_rate = 0.05;
  std::string grammar_path;  // empty = built-in grammar
  FeedbackStyle style = FeedbackStyle::kReviewer;
  int train_prompts = 64;
  int eval_prompts = 64;
};

struct ReferenceSection {
  ReferenceCorpusOptions corpus;
  SupervisedOptions training;
};

struct PolicySection {
  Backend backend = Backend::kTabular;
  NeuralShape shape;
  std::size_t max_response_len = 20;
  ReferenceSection reference;
};

struct OfflineSection {
  CollectOptions collect;
  SupervisedOptions training;
};

struct EvalSection {
  std::vector<ConditionLabel> conditions;
  std::vector<std::uint64_t> seeds;
  DecodeOptions decode;
};

struct ExperimentConfig {
  EnvSection env;
  PolicySection policy;
  OfflineSection offline;
  PoolOptions pool;
  BootstrapOptions online;
  EvalSection eval;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir;

  nlohmann::ordered_json resolved;  // defaults merged with the user file and overrides

  // Hex FNV-1a of the resolved config without output_dir, so identical
  // experiments written to different directories share a digest.
  std::string digest() const;
};

nlohmann::ordered_json default_config_json();

// Strict merge: unknown keys and type mismatches throw ConfigError, unknown
// keys with a did-you-mean suggestion.
ExperimentConfig load_config(const nlohmann::ordered_json& user, const std::vector<std::string>& overrides);
ExperimentConfig load_config_file(const std::filesystem::path& path, const std::vector<std::string>& overrides);

// Closest known dotted key by edit distance, or empty when nothing is close.
std::string suggest_key(const std::string& key, const std::vector<std::string>& known);
std::vector<std::string> config_keys(const nlohmann::ordered_json& j, const std::string& prefix = "");

}  // namespace fcp
