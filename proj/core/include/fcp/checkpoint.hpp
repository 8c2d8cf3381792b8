#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "fcp/policy.hpp"

namespace fcp {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  PolicyParameters params;
  std::optional<OptimizerState> optimizer;
};

// Self-describing JSON: format_version, vocab_hash, backend, purpose, tag and
// the raw arrays. Doubles are written with round-trip precision; -inf logits
// are stored as null.
nlohmann::json checkpoint_to_json(const PolicyParameters& params, const OptimizerState* optimizer = nullptr);
// Throws ContractViolation when the stored vocabulary hash differs from
// `expected_vocab_hash`, ParseError for malformed content.
Checkpoint checkpoint_from_json(const nlohmann::json& j, std::uint64_t expected_vocab_hash);

void save_checkpoint(const std::filesystem::path& path, const PolicyParameters& params,
                     const OptimizerState* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path, std::uint64_t expected_vocab_hash);

// FNV-1a of the serialized parameters; used to show evaluation is read-only.
std::uint64_t parameter_digest(const PolicyParameters& params);

}  // namespace fcp
