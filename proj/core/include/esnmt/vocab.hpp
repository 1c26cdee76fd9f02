#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "esnmt/layers.hpp"

namespace esnmt {

// Token <-> id bijection with pad=0, bos=1, eos=2, unk=3 reserved.
class Vocab {
 public:
  Vocab();

  // Returns the existing id when the token is already present.
  TokenId add(std::string_view token);
  // unk for unknown tokens.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<TokenId> encode(std::string_view line) const;
  // Adds unseen tokens instead of mapping them to unk.
  std::vector<TokenId> encode_growing(std::string_view line);
  std::string decode(std::span<const TokenId> ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

// Whitespace tokenizer.
std::vector<std::string> tokenize(std::string_view line);
std::string detokenize(std::span<const std::string> tokens);

}  // namespace esnmt
