#include "fcp/sequence.hpp"

#include <algorithm>

#include "fcp/errors.hpp"

namespace fcp {

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kInstruction: return "instruction";
    case Role::kResponse: return "response";
    case Role::kFeedback: return "feedback";
    case Role::kContext: return "context";
    case Role::kCritiqueContext: return "critique_context";
  }
  return "?";
}

TokenSequence make_sequence(const Vocabulary& vocab, Role role, std::string_view text) {
  return TokenSequence(role, vocab.tokenize(text));
}

std::string render(const Vocabulary& vocab, const TokenSequence& seq) {
  return vocab.detokenize(seq.tokens());
}

bool is_terminated_response(const TokenSequence& response) {
  const auto& t = response.tokens();
  if (t.empty() || t.back() != Vocabulary::kEos) return false;
  return std::none_of(t.begin(), t.end() - 1, [](Token x) {
    return x == Vocabulary::kPad || x == Vocabulary::kEos;
  });
}

bool is_truncated_response(const TokenSequence& response) {
  const auto& t = response.tokens();
  return std::find(t.begin(), t.end(), Vocabulary::kEos) == t.end();
}

std::vector<Token> response_content(const TokenSequence& response) {
  std::vector<Token> out;
  for (Token t : response.tokens()) {
    if (t == Vocabulary::kEos) break;
    if (t == Vocabulary::kPad) continue;
    out.push_back(t);
  }
  return out;
}

TokenSequence wrap_context(const TokenSequence& feedback, const TokenSequence& instruction) {
  if (feedback.role() != Role::kFeedback) {
    throw ContractViolation("wrap_context: expected feedback role, got " + std::string(to_string(feedback.role())));
  }
  if (instruction.role() != Role::kInstruction) {
    throw ContractViolation("wrap_context: expected instruction role, got " +
                            std::string(to_string(instruction.role())));
  }
  auto is_marker = [](Token t) { return t == Vocabulary::kEfOpen || t == Vocabulary::kEfClose; };
  if (std::any_of(feedback.tokens().begin(), feedback.tokens().end(), is_marker) ||
      std::any_of(instruction.tokens().begin(), instruction.tokens().end(), is_marker)) {
    throw ContractViolation("wrap_context: inputs may not contain <EF> or </EF>");
  }
  std::vector<Token> out;
  out.reserve(feedback.size() + instruction.size() + 2);
  out.push_back(Vocabulary::kEfOpen);
  out.insert(out.end(), feedback.tokens().begin(), feedback.tokens().end());
  out.push_back(Vocabulary::kEfClose);
  out.insert(out.end(), instruction.tokens().begin(), instruction.tokens().end());
  return TokenSequence(Role::kContext, std::move(out));
}

UnwrappedContext unwrap_context(const TokenSequence& context) {
  const auto& t = context.tokens();
  auto open = std::find(t.begin(), t.end(), Vocabulary::kEfOpen);
  auto close = std::find(t.begin(), t.end(), Vocabulary::kEfClose);
  if (open == t.end()) throw MalformedContext("context has no <EF>");
  if (close == t.end()) throw MalformedContext("context has no </EF>");
  if (close < open) throw MalformedContext("</EF> precedes <EF>");
  if (open != t.begin()) throw MalformedContext("context must start with <EF>");
  if (std::count(t.begin(), t.end(), Vocabulary::kEfOpen) != 1 ||
      std::count(t.begin(), t.end(), Vocabulary::kEfClose) != 1) {
    throw MalformedContext("context must contain exactly one <EF> and one </EF>");
  }
  return {TokenSequence(Role::kFeedback, std::vector<Token>(open + 1, close)),
          TokenSequence(Role::kInstruction, std::vector<Token>(close + 1, t.end()))};
}

TokenSequence critique_context(const TokenSequence& instruction, const TokenSequence& response) {
  if (instruction.role() != Role::kInstruction || response.role() != Role::kResponse) {
    throw ContractViolation("critique_context: expected (instruction, response)");
  }
  std::vector<Token> out = instruction.tokens();
  // The instruction ends in "?", which separates it from the response content.
  auto content = response_content(response);
  out.insert(out.end(), content.begin(), content.end());
  out.push_back(Vocabulary::kEos);
  return TokenSequence(Role::kCritiqueContext, std::move(out));
}

}  // namespace fcp
