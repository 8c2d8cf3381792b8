#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fcp/config.hpp"

namespace fcp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct VerifyOptions {
  std::size_t responses = 4;
  std::size_t feedbacks = 6;
  std::size_t instances = 1;
  std::optional<std::uint64_t> seed;  // defaults to a stream derived from master_seed
  bool use_env = false;               // enumerate a real task instead of a random table
};

struct RunOptions {
  std::string config_path;  // empty = built-in defaults
  std::vector<std::string> overrides;
  bool json = false;
  std::string method = "sft";  // train-baseline: sft, rft, cft, grpo
  int resume_round = -1;       // bootstrap: restart after this round
  VerifyOptions verify;
};

// Subcommands: gen-tasks, collect, train-offline, build-pool, bootstrap,
// train-baseline, eval, verify, report. Artifacts go to
// <output_dir>/<stage>/ with a manifest.json carrying the config digest.
// Returns 0 on success, 1 on contract or verification failures, 2 on
// configuration errors and missing upstream artifacts.
int run(const std::string& subcommand, const RunOptions& options, std::ostream& out, std::ostream& err);

const std::vector<std::string>& subcommands();

}  // namespace fcp
