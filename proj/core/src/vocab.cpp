#include "fcp/vocab.hpp"

#include <cctype>
#include <sstream>

#include "fcp/errors.hpp"

namespace fcp {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vocabulary::Vocabulary(const std::vector<std::string>& words) {
  words_ = {"<pad>", "<bos>", "<eos>", "<EF>", "</EF>"};
  for (std::uint32_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
  for (const auto& w : words) {
    if (w.empty() || w.find_first_of(" \t\n\r") != std::string::npos) {
      throw ContractViolation("vocabulary word must be a nonempty token without whitespace: '" + w + "'");
    }
    if (index_.contains(w)) continue;
    index_.emplace(w, static_cast<std::uint32_t>(words_.size()));
    words_.push_back(w);
  }
  hash_ = 0xcbf29ce484222325ULL;
  for (const auto& w : words_) {
    hash_ = fnv1a(w, hash_);
    hash_ = fnv1a(std::string_view("\0", 1), hash_);
  }
}

Token Vocabulary::id(std::string_view word) const {
  if (auto t = find(word)) return *t;
  throw ContractViolation("word outside vocabulary: '" + std::string(word) + "'");
}

std::optional<Token> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return Token{it->second};
}

const std::string& Vocabulary::word(Token t) const {
  if (!contains(t)) throw ContractViolation("token id " + std::to_string(t.id) + " outside vocabulary");
  return words_[t.id];
}

std::vector<Token> Vocabulary::tokenize(std::string_view text) const {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.push_back(id(text.substr(i, j - i)));
    i = j;
  }
  return out;
}

std::string Vocabulary::detokenize(std::span<const Token> tokens) const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += word(tokens[i]);
  }
  return out;
}

}  // namespace fcp
