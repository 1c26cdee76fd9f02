#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "esnmt/tensor.hpp"

namespace esnmt {

// Pinned generator: the 64-bit seed is expanded through splitmix64, mixed with
// the FNV-1a hash of a stream label, and the result seeds a xoshiro256**
// state. Identical (seed, label) pairs give identical streams everywhere.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream_label);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform01();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p);

  // Independent stream "<label>/<sub_label>" under the same seed.
  Rng fork(std::string_view sub_label) const;

  std::uint64_t seed() const { return seed_; }
  const std::string& label() const { return label_; }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::array<std::uint64_t, 4> state_{};
};

std::uint64_t fnv1a64(std::string_view text);
std::uint64_t splitmix64(std::uint64_t& state);

// Entries drawn row-major, i.i.d. uniform in [lo, hi).
Matrix seeded_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi);

}  // namespace esnmt
