#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fcp/rng.hpp"
#include "fcp/sequence.hpp"

namespace fcp {

enum class TaskKind { kModularArithmetic, kStringTransform };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view text);  // throws ConfigError

// Supported difficulty ranges: modular arithmetic uses difficulty as the
// largest operand (1..9, moduli 2..10, ops + - *); string transforms use it as
// the longest word (3..6 letters, reverse or upper).
struct DifficultyRange {
  int lo;
  int hi;
};
DifficultyRange supported_difficulty(TaskKind kind);

struct TaskInstance {
  std::uint64_t id = 0;  // FNV-1a of the rendered instruction
  TaskKind kind = TaskKind::kModularArithmetic;
  TokenSequence instruction;
  TokenSequence ground_truth;  // shortest correct response: answer then <eos>

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

enum class Verdict { kIncorrect, kCorrect };
enum class LengthBucket { kShort, kMedium, kLong };

std::string_view to_string(LengthBucket bucket);

struct ResponseAttributes {
  bool correct = false;
  LengthBucket length_bucket = LengthBucket::kShort;
  bool has_marker = false;
  bool coherent = false;

  friend bool operator==(const ResponseAttributes&, const ResponseAttributes&) = default;
};

// Every word the task side of the vocabulary needs: digits, operators, task
// verbs, both letter cases, the answer separator "=>", the code-like marker
// "```" and the reasoning filler words.
std::vector<std::string> task_words();

inline constexpr std::string_view kMarkerWord = "```";
inline constexpr std::string_view kSeparatorWord = "=>";

// Response layout: [```] [reasoning... =>] answer... <eos>. The answer span is
// everything after the last "=>" (or after the marker when there is none).
// Reasoning length 0 is short, 1..4 medium, 5+ long.
class TaskSuite {
 public:
  explicit TaskSuite(const Vocabulary& vocab);

  // Deterministic in the stream state. Throws ConfigError for unsupported
  // difficulty.
  TaskInstance generate(TaskKind kind, int difficulty, Rng& rng) const;
  // Rebuilds an instance (and its ground truth) from its instruction tokens.
  // Throws ParseError if the tokens do not form an instruction.
  TaskInstance parse_instruction(const TokenSequence& instruction) const;

  Verdict verify(const TaskInstance& task, const TokenSequence& response) const;
  ResponseAttributes attributes(const TaskInstance& task, const TokenSequence& response) const;

  // The finite response space used by the tabular backend: every plausible
  // answer in four surface forms (short, medium, long, messy), each with and
  // without the marker, plus the empty response. Order is deterministic.
  std::vector<TokenSequence> enumerate_responses(const TaskInstance& task) const;

  enum class Form { kShort, kMedium, kLong, kMessy };
  TokenSequence make_response(const std::vector<Token>& answer, Form form, bool marker) const;
  // Plausible answers for the task, ground truth first.
  std::vector<std::vector<Token>> plausible_answers(const TaskInstance& task) const;

  const Vocabulary& vocab() const { return *vocab_; }

 private:
  std::vector<Token> answer_span(const std::vector<Token>& body) const;
  bool is_answer_token(TaskKind kind, Token t) const;

  const Vocabulary* vocab_;
  Token marker_, separator_, question_, equals_, mod_, reverse_, upper_;
  std::vector<Token> digits_;  // "0".."10"
  std::vector<Token> lower_, upper_letters_;
  std::vector<Token> ops_;  // + - *
  std::vector<Token> medium_reasoning_, long_reasoning_;
  std::vector<bool> is_reasoning_word_;
};

}  // namespace fcp
