#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "esnmt/architecture.hpp"
#include "esnmt/rng.hpp"
#include "esnmt/tensor.hpp"

namespace esnmt {

// Frozen matrices of one recurrent slot. For LSTM cells the gate blocks
// [input, forget, candidate, output] are stacked row-wise: w_res is 4H x H,
// w_in is 4H x K and bias has 4H entries. Simple cells carry no bias.
struct LayerReservoir {
  LayerSlot slot;
  SparseMatrix w_res;
  SparseMatrix w_in;
  Vector bias;
  // Radius of each recurrent gate block as measured before normalisation.
  std::vector<double> raw_radius;
  std::uint32_t attempts = 1;
};

struct ReservoirSet {
  ReservoirSpec spec;
  std::vector<LayerReservoir> layers;

  const LayerReservoir& find(const std::string& slot_id) const;
};

inline constexpr std::uint32_t kMaxReservoirRetries = 3;

ReservoirSet generate_reservoirs(const ReservoirSpec& spec);
LayerReservoir generate_layer(const ReservoirSpec& spec, const LayerSlot& slot);

// Rows [gate * rows_per_gate, (gate + 1) * rows_per_gate) of a stacked matrix.
Matrix gate_block(const Matrix& stacked, std::size_t gate, std::size_t rows_per_gate);

// A drawn H x W block with exactly round(density * H * W) entries kept; the
// pruned coordinates are a uniformly random subset chosen by `prune_rng`.
Matrix draw_pruned_block(Rng& value_rng, Rng& prune_rng, std::size_t rows, std::size_t cols,
                         double density);

struct ParameterTally {
  std::uint64_t frozen = 0;
  std::uint64_t trainable = 0;

  std::uint64_t total() const { return frozen + trainable; }
  double fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(frozen) / static_cast<double>(total());
  }
};

// Parameter split of the echo state model: recurrent weights and biases are
// frozen, embeddings, attention, projection and scaling factors trainable.
ParameterTally frozen_fraction(const ReservoirSpec& spec, std::uint32_t vocab_size,
                               std::uint32_t attention_dim);

}  // namespace esnmt
