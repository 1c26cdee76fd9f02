#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace esnmt {

enum class CellType : std::uint8_t { simple_rnn = 0, lstm = 1 };

std::string_view to_string(CellType cell);
CellType parse_cell_type(std::string_view text);

// Number of stacked gate blocks in the recurrent/input matrices.
inline std::size_t gate_count(CellType cell) { return cell == CellType::lstm ? 4 : 1; }

// Everything needed to regenerate the frozen random matrices of a model.
struct ReservoirSpec {
  std::uint64_t seed = 1;
  CellType cell_type = CellType::simple_rnn;
  std::uint32_t num_encoder_layers = 1;
  std::uint32_t num_decoder_layers = 1;
  std::uint32_t hidden_dim = 32;
  // Embedding width fed to the bottom encoder and decoder layers.
  std::uint32_t input_dim = 32;
  // Fraction of entries kept after pruning.
  double density = 0.75;
  double radius_norm_target = 1.0;

  void validate() const;
  bool operator==(const ReservoirSpec&) const = default;
};

enum class Side : std::uint8_t { encoder = 0, decoder = 1 };
enum class Direction : std::uint8_t { forward = 0, backward = 1 };

std::string_view to_string(Direction direction);

// One recurrent layer instance. The bottom encoder layer is bidirectional and
// contributes two slots.
struct LayerSlot {
  Side side = Side::encoder;
  std::uint32_t index = 0;
  Direction direction = Direction::forward;
  std::uint32_t input_dim = 0;

  // "encoder.0.fwd", "encoder.0.bwd", "encoder.1", "decoder.0", ...
  std::string id() const;
  // "encoder.0" without the direction suffix.
  std::string layer_id() const;
};

// Canonical slot order: encoder bottom forward, encoder bottom backward,
// encoder upper layers, then decoder layers bottom to top.
std::vector<LayerSlot> recurrent_layout(const ReservoirSpec& spec);

enum class Component : std::uint8_t {
  embedding = 0,
  attention = 1,
  encoder_recurrent = 2,
  decoder_recurrent = 3,
  projection = 4,
  scaling_factors = 5,
};

inline constexpr std::size_t kComponentCount = 6;
std::string_view to_string(Component component);

enum class TensorRole : std::uint8_t {
  embedding,
  w_res,
  w_in,
  recurrent_bias,
  rho,
  gamma,
  weight,
  bias,
};

struct TensorShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  Component component = Component::projection;
  TensorRole role = TensorRole::weight;
  // Index into recurrent_layout() for recurrent and scaling tensors, else -1.
  int slot = -1;

  std::size_t count() const { return rows * cols; }
};

struct Architecture {
  ReservoirSpec reservoir;
  std::uint32_t vocab_size = 16;
  std::uint32_t attention_dim = 32;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

// Every tensor of the model in checkpoint order.
std::vector<TensorShape> tensor_layout(const Architecture& arch);

}  // namespace esnmt
