#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "esnmt/corpus.hpp"
#include "esnmt/experiments.hpp"
#include "esnmt/vocab.hpp"

namespace esnmt {
namespace {

TEST(Vocab, ReservedIdsAndRoundTrip) {
  Vocab v;
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.token(kPadId), "<pad>");
  EXPECT_EQ(v.token(kEosId), "<eos>");
  const auto ids = v.encode_growing("hello  world hello");
  EXPECT_EQ(ids, (std::vector<TokenId>{4, 5, 4}));
  EXPECT_EQ(v.decode(ids), "hello world hello");
  EXPECT_EQ(v.id("unseen"), kUnkId);
  EXPECT_EQ(v.encode("hello unseen"), (std::vector<TokenId>{4, kUnkId}));
  EXPECT_EQ(v.add("world"), 5);
}

TEST(Toy, ReverseTaskShapesAndDeterminism) {
  ToyTaskSpec s;
  s.size = 200;
  s.max_len = 20;
  s.vocab_size = 30;
  const auto a = make_toy_task(s);
  const auto b = make_toy_task(s);
  EXPECT_EQ(a.vocab.size(), 30u);
  ASSERT_EQ(a.train.size(), 200u);
  std::size_t longest = 0;
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    const auto& p = a.train[i];
    EXPECT_EQ(p.source, b.train[i].source);
    ASSERT_GE(p.source.size(), 1u);
    ASSERT_LE(p.source.size(), 20u);
    longest = std::max(longest, p.source.size());
    EXPECT_TRUE(std::equal(p.source.begin(), p.source.end(), p.target.rbegin()));
    for (TokenId t : p.source) ASSERT_GE(t, 4);
  }
  EXPECT_EQ(longest, 20u);
  EXPECT_NE(a.train[0].source, a.test[0].source);
}

TEST(Toy, CopyAndSortTasks) {
  ToyTaskSpec s;
  s.kind = ToyKind::copy;
  for (const auto& p : make_toy_task(s).train) EXPECT_EQ(p.source, p.target);
  s.kind = ToyKind::sort_digits;
  const auto c = make_toy_task(s);
  for (const auto& p : c.train) {
    EXPECT_TRUE(std::is_sorted(p.target.begin(), p.target.end()));
    EXPECT_TRUE(std::is_permutation(p.source.begin(), p.source.end(), p.target.begin()));
  }
}

TEST(Toy, GrammarTargetsParse) {
  ToyTaskSpec s;
  s.kind = ToyKind::synthetic_grammar;
  s.size = 300;
  const auto c = make_toy_task(s);
  for (const auto& p : c.train) EXPECT_TRUE(parses_as_grammar_target(c.vocab, p.target));
  // Sources are SVO, not target-side SOV, so they do not parse as targets.
  std::size_t source_parses = 0;
  for (const auto& p : c.train) source_parses += parses_as_grammar_target(c.vocab, p.source);
  EXPECT_EQ(source_parses, 0u);
  // Dropping the verb breaks the parse.
  auto broken = c.train[0].target;
  broken.pop_back();
  EXPECT_FALSE(parses_as_grammar_target(c.vocab, broken));
}

TEST(Toy, RejectsBadSpecs) {
  ToyTaskSpec s;
  s.min_len = 5;
  s.max_len = 3;
  EXPECT_THROW(make_toy_task(s), std::invalid_argument);
  EXPECT_THROW(parse_toy_kind("nonsense"), std::invalid_argument);
}

TEST(ParallelText, LoadsAlignedFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "esnmt_parallel_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "src.txt") << "a b c\nd e\n";
  std::ofstream(dir / "tgt.txt") << "c b a\ne d\n";
  Vocab v;
  const auto pairs = load_parallel_text(dir / "src.txt", dir / "tgt.txt", v, true);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(v.decode(pairs[0].target), "c b a");
  std::ofstream(dir / "short.txt") << "x\n";
  EXPECT_THROW(load_parallel_text(dir / "src.txt", dir / "short.txt", v, true), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST(Experiments, DefaultBucketEdges) {
  EXPECT_EQ(default_bucket_edges(50), (std::vector<std::size_t>{10, 20, 30, 40}));
  EXPECT_EQ(default_bucket_edges(20), (std::vector<std::size_t>{4, 8, 12, 16}));
  EXPECT_EQ(default_bucket_edges(2), (std::vector<std::size_t>{1, 2}));
}

}  // namespace
}  // namespace esnmt
