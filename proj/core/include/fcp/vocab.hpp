#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace fcp {

struct Token {
  std::uint32_t id = 0;
  friend auto operator<=>(const Token&, const Token&) = default;
};

// Closed word-level vocabulary. Ids 0..4 are the reserved specials; the
// remaining words keep the order they were supplied in (duplicates dropped),
// so two vocabularies built from the same word list hash identically.
class Vocabulary {
 public:
  static constexpr Token kPad{0};
  static constexpr Token kBos{1};
  static constexpr Token kEos{2};
  static constexpr Token kEfOpen{3};
  static constexpr Token kEfClose{4};
  static constexpr std::uint32_t kNumSpecials = 5;

  explicit Vocabulary(const std::vector<std::string>& words);

  std::size_t size() const { return words_.size(); }
  bool contains(Token t) const { return t.id < words_.size(); }
  static bool is_special(Token t) { return t.id < kNumSpecials; }

  // Throws ContractViolation for words outside the vocabulary.
  Token id(std::string_view word) const;
  std::optional<Token> find(std::string_view word) const;
  const std::string& word(Token t) const;

  // Whitespace-separated words <-> tokens. Tokenize throws ContractViolation
  // naming the first unknown word.
  std::vector<Token> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const Token> tokens) const;

  // FNV-1a over the ordered word list; stored in checkpoints.
  std::uint64_t hash() const { return hash_; }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::uint64_t hash_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace fcp
