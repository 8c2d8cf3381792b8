#include "fcp/tasks.hpp"

#include <algorithm>

#include "fcp/errors.hpp"

namespace fcp {

namespace {

constexpr const char* kMediumReasoning[] = {"let", "me", "check"};
constexpr const char* kLongReasoning[] = {"let", "me", "check", "step", "by", "step"};

int positive_mod(int v, int m) { return ((v % m) + m) % m; }

}  // namespace

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kModularArithmetic ? "modular_arithmetic" : "string_transform";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "modular_arithmetic") return TaskKind::kModularArithmetic;
  if (text == "string_transform") return TaskKind::kStringTransform;
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

DifficultyRange supported_difficulty(TaskKind kind) {
  return kind == TaskKind::kModularArithmetic ? DifficultyRange{1, 9} : DifficultyRange{3, 6};
}

std::string_view to_string(LengthBucket bucket) {
  switch (bucket) {
    case LengthBucket::kShort: return "short";
    case LengthBucket::kMedium: return "medium";
    case LengthBucket::kLong: return "long";
  }
  return "?";
}

std::vector<std::string> task_words() {
  std::vector<std::string> w;
  for (int d = 0; d <= 10; ++d) w.push_back(std::to_string(d));
  for (const char* s : {"+", "-", "*", "mod", "=", "?", "reverse", "upper"}) w.emplace_back(s);
  for (char c = 'a'; c <= 'z'; ++c) w.emplace_back(1, c);
  for (char c = 'A'; c <= 'Z'; ++c) w.emplace_back(1, c);
  w.emplace_back(kSeparatorWord);
  w.emplace_back(kMarkerWord);
  for (const char* s : kLongReasoning) w.emplace_back(s);
  return w;
}

TaskSuite::TaskSuite(const Vocabulary& vocab) : vocab_(&vocab) {
  marker_ = vocab.id(kMarkerWord);
  separator_ = vocab.id(kSeparatorWord);
  question_ = vocab.id("?");
  equals_ = vocab.id("=");
  mod_ = vocab.id("mod");
  reverse_ = vocab.id("reverse");
  upper_ = vocab.id("upper");
  for (int d = 0; d <= 10; ++d) digits_.push_back(vocab.id(std::to_string(d)));
  for (char c = 'a'; c <= 'z'; ++c) lower_.push_back(vocab.id(std::string(1, c)));
  for (char c = 'A'; c <= 'Z'; ++c) upper_letters_.push_back(vocab.id(std::string(1, c)));
  for (const char* s : {"+", "-", "*"}) ops_.push_back(vocab.id(s));
  for (const char* s : kMediumReasoning) medium_reasoning_.push_back(vocab.id(s));
  for (const char* s : kLongReasoning) long_reasoning_.push_back(vocab.id(s));
  is_reasoning_word_.assign(vocab.size(), false);
  for (Token t : long_reasoning_) is_reasoning_word_[t.id] = true;
}

TaskInstance TaskSuite::generate(TaskKind kind, int difficulty, Rng& rng) const {
  auto range = supported_difficulty(kind);
  if (difficulty < range.lo || difficulty > range.hi) {
    throw ConfigError("difficulty " + std::to_string(difficulty) + " unsupported for " + std::string(to_string(kind)) +
                      " (supported " + std::to_string(range.lo) + ".." + std::to_string(range.hi) + ")");
  }
  std::vector<Token> x;
  if (kind == TaskKind::kModularArithmetic) {
    int a = static_cast<int>(rng.index(static_cast<std::size_t>(difficulty) + 1));
    int b = static_cast<int>(rng.index(static_cast<std::size_t>(difficulty) + 1));
    std::size_t op = rng.index(ops_.size());
    int m = 2 + static_cast<int>(rng.index(9));
    x = {digits_[a], ops_[op], digits_[b], mod_, digits_[m], equals_, question_};
  } else {
    bool rev = rng.index(2) == 0;
    int len = 3 + static_cast<int>(rng.index(static_cast<std::size_t>(difficulty - 3) + 1));
    x.push_back(rev ? reverse_ : upper_);
    for (int i = 0; i < len; ++i) x.push_back(lower_[rng.index(lower_.size())]);
    x.push_back(equals_);
    x.push_back(question_);
  }
  return parse_instruction(TokenSequence(Role::kInstruction, std::move(x)));
}

TaskInstance TaskSuite::parse_instruction(const TokenSequence& instruction) const {
  if (instruction.role() != Role::kInstruction) throw ContractViolation("parse_instruction: expected instruction role");
  const auto& t = instruction.tokens();
  auto digit_value = [&](Token tok) -> int {
    auto it = std::find(digits_.begin(), digits_.end(), tok);
    return it == digits_.end() ? -1 : static_cast<int>(it - digits_.begin());
  };
  TaskInstance out;
  out.instruction = instruction;
  out.id = fnv1a(vocab_->detokenize(t));
  std::vector<Token> answer;
  if (t.size() == 7 && t[3] == mod_ && t[5] == equals_ && t[6] == question_) {
    int a = digit_value(t[0]), b = digit_value(t[2]), m = digit_value(t[4]);
    auto op = std::find(ops_.begin(), ops_.end(), t[1]);
    if (a < 0 || a > 9 || b < 0 || b > 9 || m < 2 || op == ops_.end()) {
      throw ParseError("malformed modular arithmetic instruction", 1);
    }
    int v = (*op == ops_[0]) ? a + b : (*op == ops_[1]) ? a - b : a * b;
    out.kind = TaskKind::kModularArithmetic;
    answer = {digits_[positive_mod(v, m)]};
  } else if (t.size() >= 3 && (t[0] == reverse_ || t[0] == upper_) && t[t.size() - 2] == equals_ &&
             t.back() == question_) {
    std::vector<Token> word(t.begin() + 1, t.end() - 2);
    if (word.empty()) throw ParseError("string transform without a word", 1);
    for (Token& w : word) {
      auto it = std::find(lower_.begin(), lower_.end(), w);
      if (it == lower_.end()) throw ParseError("string transform word must be lowercase letters", 1);
      if (t[0] == upper_) w = upper_letters_[static_cast<std::size_t>(it - lower_.begin())];
    }
    if (t[0] == reverse_) std::reverse(word.begin(), word.end());
    out.kind = TaskKind::kStringTransform;
    answer = std::move(word);
  } else {
    throw ParseError("not a task instruction: '" + vocab_->detokenize(t) + "'", 1);
  }
  answer.push_back(Vocabulary::kEos);
  out.ground_truth = TokenSequence(Role::kResponse, std::move(answer));
  return out;
}

std::vector<Token> TaskSuite::answer_span(const std::vector<Token>& body) const {
  auto sep = std::find(body.rbegin(), body.rend(), separator_);
  return std::vector<Token>(sep.base(), body.end());
}

bool TaskSuite::is_answer_token(TaskKind kind, Token t) const {
  if (kind == TaskKind::kModularArithmetic) return std::find(digits_.begin(), digits_.end(), t) != digits_.end();
  return std::find(lower_.begin(), lower_.end(), t) != lower_.end() ||
         std::find(upper_letters_.begin(), upper_letters_.end(), t) != upper_letters_.end();
}

Verdict TaskSuite::verify(const TaskInstance& task, const TokenSequence& response) const {
  return attributes(task, response).correct ? Verdict::kCorrect : Verdict::kIncorrect;
}

ResponseAttributes TaskSuite::attributes(const TaskInstance& task, const TokenSequence& response) const {
  if (response.role() != Role::kResponse) throw ContractViolation("verify: expected response role");
  ResponseAttributes a;
  std::vector<Token> content = response_content(response);
  a.has_marker = !content.empty() && content.front() == marker_;
  std::vector<Token> body(content.begin() + (a.has_marker ? 1 : 0), content.end());
  std::vector<Token> answer = answer_span(body);
  std::vector<Token> truth = response_content(task.ground_truth);
  a.correct = !answer.empty() && answer == truth;

  const std::size_t reasoning = body.size() - answer.size() - (answer.size() < body.size() ? 1 : 0);
  const bool has_separator = answer.size() < body.size();
  a.length_bucket = reasoning == 0 ? LengthBucket::kShort : reasoning <= 4 ? LengthBucket::kMedium : LengthBucket::kLong;

  bool coherent = is_terminated_response(response) && !answer.empty();
  for (Token t : answer) coherent = coherent && is_answer_token(task.kind, t);
  if (has_separator) {
    coherent = coherent && reasoning > 0;
    for (std::size_t i = 0; i < reasoning; ++i) {
      Token t = body[i];
      coherent = coherent && t.id < is_reasoning_word_.size() && is_reasoning_word_[t.id];
    }
  }
  a.coherent = coherent;
  return a;
}

TokenSequence TaskSuite::make_response(const std::vector<Token>& answer, Form form, bool marker) const {
  std::vector<Token> out;
  if (marker) out.push_back(marker_);
  switch (form) {
    case Form::kShort: break;
    case Form::kMedium:
      out.insert(out.end(), medium_reasoning_.begin(), medium_reasoning_.end());
      out.push_back(separator_);
      break;
    case Form::kLong:
      out.insert(out.end(), long_reasoning_.begin(), long_reasoning_.end());
      out.push_back(separator_);
      break;
    case Form::kMessy:
      out.insert(out.end(), answer.begin(), answer.end());
      out.push_back(separator_);
      break;
  }
  out.insert(out.end(), answer.begin(), answer.end());
  out.push_back(Vocabulary::kEos);
  return TokenSequence(Role::kResponse, std::move(out));
}

std::vector<std::vector<Token>> TaskSuite::plausible_answers(const TaskInstance& task) const {
  std::vector<std::vector<Token>> answers;
  auto add = [&](std::vector<Token> a) {
    if (std::find(answers.begin(), answers.end(), a) == answers.end()) answers.push_back(std::move(a));
  };
  add(response_content(task.ground_truth));
  if (task.kind == TaskKind::kModularArithmetic) {
    int m = static_cast<int>(std::find(digits_.begin(), digits_.end(), task.instruction[4]) - digits_.begin());
    for (int r = 0; r < m; ++r) add({digits_[r]});
  } else {
    const auto& t = task.instruction.tokens();
    std::vector<Token> word(t.begin() + 1, t.end() - 2);
    auto to_upper = [&](std::vector<Token> w) {
      for (Token& x : w) x = upper_letters_[static_cast<std::size_t>(std::find(lower_.begin(), lower_.end(), x) - lower_.begin())];
      return w;
    };
    std::vector<Token> rev(word.rbegin(), word.rend());
    add(word);
    add(rev);
    add(to_upper(word));
    add(to_upper(rev));
  }
  return answers;
}

std::vector<TokenSequence> TaskSuite::enumerate_responses(const TaskInstance& task) const {
  std::vector<TokenSequence> out;
  for (const auto& answer : plausible_answers(task)) {
    for (Form form : {Form::kShort, Form::kMedium, Form::kLong, Form::kMessy}) {
      for (bool marker : {false, true}) out.push_back(make_response(answer, form, marker));
    }
  }
  out.emplace_back(Role::kResponse, std::vector<Token>{Vocabulary::kEos});
  return out;
}

}  // namespace fcp
