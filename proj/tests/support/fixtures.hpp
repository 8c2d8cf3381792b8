#pragma once

#include <memory>

#include "fcp/env.hpp"
#include "fcp/policy.hpp"
#include "fcp/train.hpp"

namespace fcp::testing {

inline const Environment& noiseless_env() {
  static const Environment env(FeedbackGrammar::builtin(), EnvOptions{0.0});
  return env;
}

inline const Environment& noisy_env() {
  static const Environment env(FeedbackGrammar::builtin(), EnvOptions{0.05});
  return env;
}

inline TaskInstance task(const Environment& env, const char* text) {
  return env.tasks().parse_instruction(make_sequence(env.vocab(), Role::kInstruction, text));
}

inline TokenSequence response(const Environment& env, const char* text) {
  return make_sequence(env.vocab(), Role::kResponse, text);
}

inline TokenSequence feedback(const Environment& env, const char* text) {
  return make_sequence(env.vocab(), Role::kFeedback, text);
}

inline std::vector<TaskInstance> tasks(const Environment& env, TaskKind kind, int difficulty, std::size_t n,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TaskInstance> out;
  while (out.size() < n) {
    auto t = env.generate_instruction(kind, difficulty, rng);
    bool dup = false;
    for (const auto& o : out) dup = dup || o.id == t.id;
    if (!dup) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace fcp::testing
