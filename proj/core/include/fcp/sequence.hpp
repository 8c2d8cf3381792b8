#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "fcp/vocab.hpp"

namespace fcp {

// kCritiqueContext is the [instruction, response] input of the critique
// (forward dynamics) baseline; it carries no <EF> wrapper.
enum class Role { kInstruction, kResponse, kFeedback, kContext, kCritiqueContext };

std::string_view to_string(Role role);

class TokenSequence {
 public:
  TokenSequence() = default;
  TokenSequence(Role role, std::vector<Token> tokens) : role_(role), tokens_(std::move(tokens)) {}

  Role role() const { return role_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  Token operator[](std::size_t i) const { return tokens_[i]; }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  Role role_ = Role::kInstruction;
  std::vector<Token> tokens_;
};

TokenSequence make_sequence(const Vocabulary& vocab, Role role, std::string_view text);
std::string render(const Vocabulary& vocab, const TokenSequence& seq);

// A response ending in <eos> with no padding anywhere. Truncated rollouts
// (no <eos>) are not well formed but are still valid buffer entries.
bool is_terminated_response(const TokenSequence& response);
bool is_truncated_response(const TokenSequence& response);
// Tokens before the first <eos>; padding is dropped.
std::vector<Token> response_content(const TokenSequence& response);

// [<EF>, feedback..., </EF>, instruction...]
TokenSequence wrap_context(const TokenSequence& feedback, const TokenSequence& instruction);

struct UnwrappedContext {
  TokenSequence feedback;
  TokenSequence instruction;
};
// Inverse of wrap_context. Throws MalformedContext when <EF>/</EF> are missing,
// duplicated or out of order.
UnwrappedContext unwrap_context(const TokenSequence& context);

// [instruction..., response content...] for the critique baseline.
TokenSequence critique_context(const TokenSequence& instruction, const TokenSequence& response);

}  // namespace fcp
