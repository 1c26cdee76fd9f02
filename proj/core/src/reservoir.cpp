#include "esnmt/reservoir.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "esnmt/rng.hpp"
#include "esnmt/spectral.hpp"

namespace esnmt {

const LayerReservoir& ReservoirSet::find(const std::string& slot_id) const {
  for (const auto& layer : layers) {
    if (layer.slot.id() == slot_id) return layer;
  }
  throw std::out_of_range("no reservoir for slot '" + slot_id + "'");
}

Matrix gate_block(const Matrix& stacked, std::size_t gate, std::size_t rows_per_gate) {
  if ((gate + 1) * rows_per_gate > stacked.rows()) {
    throw DimensionError("gate_block: gate " + std::to_string(gate) + " outside " +
                         stacked.shape_string());
  }
  auto src = stacked.rows_span(gate * rows_per_gate, rows_per_gate);
  return Matrix(rows_per_gate, stacked.cols(), std::vector<double>(src.begin(), src.end()));
}

Matrix draw_pruned_block(Rng& value_rng, Rng& prune_rng, std::size_t rows, std::size_t cols,
                         double density) {
  Matrix block = seeded_uniform(value_rng, rows, cols, -1.0, 1.0);
  const std::size_t total = rows * cols;
  const auto keep = static_cast<std::size_t>(std::llround(density * static_cast<double>(total)));
  const std::size_t drop = total - keep;
  // Partial Fisher-Yates: the first `drop` positions of the permutation are zeroed.
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  for (std::size_t i = 0; i < drop; ++i) {
    const std::size_t j = i + prune_rng.below(total - i);
    std::swap(order[i], order[j]);
    block.data()[order[i]] = 0.0;
  }
  return block;
}

namespace {

SparseMatrix to_sparse_kept(const Matrix& dense) { return SparseMatrix::from_dense(dense); }

}  // namespace

LayerReservoir generate_layer(const ReservoirSpec& spec, const LayerSlot& slot) {
  spec.validate();
  const std::size_t h = spec.hidden_dim;
  const std::size_t k = slot.input_dim;
  const std::size_t gates = gate_count(spec.cell_type);

  for (std::uint32_t attempt = 0; attempt <= kMaxReservoirRetries; ++attempt) {
    Rng base(spec.seed, "reservoir/" + slot.id() + "/attempt" + std::to_string(attempt));
    Rng res_values = base.fork("w_res");
    Rng res_prune = base.fork("w_res/prune");
    Rng in_values = base.fork("w_in");
    Rng in_prune = base.fork("w_in/prune");
    Rng bias_rng = base.fork("bias");

    Matrix w_res(gates * h, h);
    std::vector<double> raw(gates, 0.0);
    bool degenerate = false;
    for (std::size_t g = 0; g < gates && !degenerate; ++g) {
      Matrix block = draw_pruned_block(res_values, res_prune, h, h, spec.density);
      const double r = spectral_radius(block).radius;
      if (!(r > 0.0) || !std::isfinite(r)) {
        degenerate = true;
        break;
      }
      raw[g] = r;
      block.scale(spec.radius_norm_target / r);
      auto dst = w_res.rows_span(g * h, h);
      std::copy(block.values().begin(), block.values().end(), dst.begin());
    }
    if (degenerate) continue;

    Matrix w_in(gates * h, k);
    for (std::size_t g = 0; g < gates; ++g) {
      Matrix block = draw_pruned_block(in_values, in_prune, h, k, spec.density);
      auto dst = w_in.rows_span(g * h, h);
      std::copy(block.values().begin(), block.values().end(), dst.begin());
    }

    LayerReservoir out;
    out.slot = slot;
    out.w_res = to_sparse_kept(w_res);
    out.w_in = to_sparse_kept(w_in);
    if (spec.cell_type == CellType::lstm) {
      out.bias.resize(gates * h);
      for (double& b : out.bias) b = bias_rng.uniform(-0.1, 0.1);
    }
    out.raw_radius = std::move(raw);
    out.attempts = attempt + 1;
    return out;
  }
  throw std::runtime_error("reservoir for slot " + slot.id() + " had zero spectral radius after " +
                           std::to_string(kMaxReservoirRetries) + " retries");
}

ReservoirSet generate_reservoirs(const ReservoirSpec& spec) {
  ReservoirSet set;
  set.spec = spec;
  for (const auto& slot : recurrent_layout(spec)) set.layers.push_back(generate_layer(spec, slot));
  return set;
}

ParameterTally frozen_fraction(const ReservoirSpec& spec, std::uint32_t vocab_size,
                               std::uint32_t attention_dim) {
  Architecture arch;
  arch.reservoir = spec;
  arch.vocab_size = vocab_size;
  arch.attention_dim = attention_dim;
  ParameterTally tally;
  for (const auto& t : tensor_layout(arch)) {
    const bool recurrent = t.component == Component::encoder_recurrent ||
                           t.component == Component::decoder_recurrent;
    (recurrent ? tally.frozen : tally.trainable) += t.count();
  }
  return tally;
}

}  // namespace esnmt
