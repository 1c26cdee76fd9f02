#include "esnmt/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace esnmt {

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view stream_label) : seed_(seed), label_(stream_label) {
  std::uint64_t sm = seed;
  std::uint64_t key = splitmix64(sm) ^ fnv1a64(stream_label);
  for (auto& word : state_) word = splitmix64(key);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("uniform: requires lo < hi");
  const double x = lo + (hi - lo) * uniform01();
  // Rounding can land exactly on hi for some (lo, hi); keep the interval half open.
  return x < hi ? x : std::nextafter(hi, lo);
}

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("below: n must be positive");
  // Lemire's multiply-shift with rejection.
  u128 product = static_cast<u128>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(product);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      product = static_cast<u128>(next_u64()) * n;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

bool Rng::bernoulli(double p) { return uniform01() < p; }

Rng Rng::fork(std::string_view sub_label) const {
  std::string label = label_;
  label += '/';
  label += sub_label;
  return Rng(seed_, label);
}

Matrix seeded_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("seeded_uniform: requires lo < hi");
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.uniform(lo, hi);
  return m;
}

}  // namespace esnmt
