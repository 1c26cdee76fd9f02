#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esnmt/model.hpp"
#include "esnmt/vocab.hpp"

namespace esnmt {

struct ParallelCorpus {
  Vocab vocab;
  std::vector<SentencePair> train;
  std::vector<SentencePair> dev;
  std::vector<SentencePair> test;
};

enum class ToyKind : std::uint8_t { copy, reverse, sort_digits, synthetic_grammar };

std::string_view to_string(ToyKind kind);
ToyKind parse_toy_kind(std::string_view text);

struct ToyTaskSpec {
  ToyKind kind = ToyKind::reverse;
  std::size_t size = 1000;  // training pairs
  std::size_t dev_size = 100;
  std::size_t test_size = 100;
  std::size_t min_len = 1;
  std::size_t max_len = 10;
  // Total vocabulary including the four reserved ids (copy and reverse only).
  std::size_t vocab_size = 30;
  std::uint64_t seed = 1;
};

ParallelCorpus make_toy_task(const ToyTaskSpec& spec);

// Membership test for targets of the synthetic grammar task.
bool parses_as_grammar_target(const Vocab& vocab, std::span<const TokenId> target);

// Two aligned files, one sentence per line. With `grow` unseen tokens are
// added to the vocabulary, otherwise they map to unk.
std::vector<SentencePair> load_parallel_text(const std::filesystem::path& source,
                                             const std::filesystem::path& target, Vocab& vocab,
                                             bool grow);

std::vector<std::vector<TokenId>> sources_of(std::span<const SentencePair> pairs);
std::vector<std::vector<TokenId>> targets_of(std::span<const SentencePair> pairs);

}  // namespace esnmt
