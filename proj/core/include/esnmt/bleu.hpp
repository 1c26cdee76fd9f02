#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "esnmt/layers.hpp"

namespace esnmt {

using Sequence = std::vector<TokenId>;

struct BleuStats {
  std::vector<std::size_t> matches;  // clipped n-gram matches, n = 1..max_n
  std::vector<std::size_t> totals;   // hypothesis n-grams
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

BleuStats bleu_stats(std::span<const Sequence> hypotheses, std::span<const Sequence> references,
                     std::size_t max_n = 4);
double bleu_from_stats(const BleuStats& stats);

// Corpus BLEU in [0, 100]: geometric mean of clipped n-gram precisions times
// the brevity penalty, no smoothing.
double corpus_bleu(std::span<const Sequence> hypotheses, std::span<const Sequence> references,
                   std::size_t max_n = 4);

inline constexpr std::size_t kOpenBucket = std::numeric_limits<std::size_t>::max();

struct BleuBucket {
  std::size_t lo = 0;
  std::size_t hi = kOpenBucket;  // exclusive; kOpenBucket means unbounded
  std::size_t count = 0;
  double bleu = 0.0;
};

// Buckets [0, e0), [e0, e1), ..., [e_last, inf) on source length; empty
// buckets are left out.
std::vector<BleuBucket> bleu_by_length(std::span<const Sequence> hypotheses,
                                       std::span<const Sequence> references,
                                       std::span<const std::size_t> source_lengths,
                                       std::span<const std::size_t> edges, std::size_t max_n = 4);

// bucket_lo,bucket_hi,count,bleu
void write_bleu_csv(std::ostream& out, std::span<const BleuBucket> buckets);

}  // namespace esnmt
