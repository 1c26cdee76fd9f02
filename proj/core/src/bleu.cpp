#include "esnmt/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace esnmt {

namespace {

using Gram = std::vector<TokenId>;

std::map<Gram, std::size_t> count_grams(const Sequence& s, std::size_t n) {
  std::map<Gram, std::size_t> out;
  if (s.size() < n) return out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++out[Gram(s.begin() + static_cast<std::ptrdiff_t>(i),
               s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

void check_lists(std::span<const Sequence> hyp, std::span<const Sequence> ref) {
  if (hyp.empty()) throw std::invalid_argument("bleu: empty hypothesis list");
  if (hyp.size() != ref.size()) {
    throw std::invalid_argument("bleu: " + std::to_string(hyp.size()) + " hypotheses vs " +
                                std::to_string(ref.size()) + " references");
  }
}

}  // namespace

BleuStats bleu_stats(std::span<const Sequence> hypotheses, std::span<const Sequence> references,
                     std::size_t max_n) {
  check_lists(hypotheses, references);
  if (max_n == 0) throw std::invalid_argument("bleu: max_n must be positive");
  BleuStats st;
  st.matches.assign(max_n, 0);
  st.totals.assign(max_n, 0);
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& h = hypotheses[i];
    const auto& r = references[i];
    if (r.empty()) throw std::invalid_argument("bleu: empty reference " + std::to_string(i));
    st.hyp_length += h.size();
    st.ref_length += r.size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      const auto hg = count_grams(h, n);
      const auto rg = count_grams(r, n);
      for (const auto& [g, c] : hg) {
        auto it = rg.find(g);
        if (it != rg.end()) st.matches[n - 1] += std::min(c, it->second);
      }
      if (h.size() >= n) st.totals[n - 1] += h.size() - n + 1;
    }
  }
  return st;
}

double bleu_from_stats(const BleuStats& st) {
  if (st.hyp_length == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < st.matches.size(); ++n) {
    if (st.matches[n] == 0 || st.totals[n] == 0) return 0.0;
    log_sum += std::log(static_cast<double>(st.matches[n]) / static_cast<double>(st.totals[n]));
  }
  const double c = static_cast<double>(st.hyp_length);
  const double r = static_cast<double>(st.ref_length);
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(st.matches.size()));
}

double corpus_bleu(std::span<const Sequence> hypotheses, std::span<const Sequence> references,
                   std::size_t max_n) {
  return bleu_from_stats(bleu_stats(hypotheses, references, max_n));
}

std::vector<BleuBucket> bleu_by_length(std::span<const Sequence> hypotheses,
                                       std::span<const Sequence> references,
                                       std::span<const std::size_t> source_lengths,
                                       std::span<const std::size_t> edges, std::size_t max_n) {
  check_lists(hypotheses, references);
  if (source_lengths.size() != hypotheses.size()) {
    throw std::invalid_argument("bleu_by_length: one source length per pair required");
  }
  if (!std::is_sorted(edges.begin(), edges.end()) ||
      std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw std::invalid_argument("bleu_by_length: bucket edges must be strictly increasing");
  }
  std::vector<BleuBucket> out;
  for (std::size_t b = 0; b <= edges.size(); ++b) {
    BleuBucket bucket;
    bucket.lo = b == 0 ? 0 : edges[b - 1];
    bucket.hi = b == edges.size() ? kOpenBucket : edges[b];
    std::vector<Sequence> h, r;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
      if (source_lengths[i] >= bucket.lo && source_lengths[i] < bucket.hi) {
        h.push_back(hypotheses[i]);
        r.push_back(references[i]);
      }
    }
    if (h.empty()) continue;
    bucket.count = h.size();
    bucket.bleu = corpus_bleu(h, r, max_n);
    out.push_back(bucket);
  }
  return out;
}

void write_bleu_csv(std::ostream& out, std::span<const BleuBucket> buckets) {
  out << "bucket_lo,bucket_hi,count,bleu\n";
  const auto old = out.precision(10);
  for (const auto& b : buckets) {
    out << b.lo << ',';
    if (b.hi == kOpenBucket) {
      out << "inf";
    } else {
      out << b.hi;
    }
    out << ',' << b.count << ',' << b.bleu << '\n';
  }
  out.precision(old);
}

}  // namespace esnmt
