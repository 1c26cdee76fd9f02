#include "esnmt/architecture.hpp"

#include <stdexcept>

namespace esnmt {

std::string_view to_string(CellType cell) {
  return cell == CellType::lstm ? "lstm" : "simple_rnn";
}

CellType parse_cell_type(std::string_view text) {
  if (text == "simple_rnn" || text == "esn") return CellType::simple_rnn;
  if (text == "lstm") return CellType::lstm;
  throw std::invalid_argument("unknown cell type '" + std::string(text) +
                              "' (expected simple_rnn or lstm)");
}

std::string_view to_string(Direction direction) {
  return direction == Direction::forward ? "forward" : "backward";
}

std::string_view to_string(Component component) {
  switch (component) {
    case Component::embedding:
      return "embedding";
    case Component::attention:
      return "attention";
    case Component::encoder_recurrent:
      return "encoder_recurrent";
    case Component::decoder_recurrent:
      return "decoder_recurrent";
    case Component::projection:
      return "projection";
    case Component::scaling_factors:
      return "scaling_factors";
  }
  return "?";
}

void ReservoirSpec::validate() const {
  if (!(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("density must lie in (0, 1], got " + std::to_string(density));
  }
  if (num_encoder_layers == 0 || num_decoder_layers == 0) {
    throw std::invalid_argument("encoder and decoder need at least one layer");
  }
  if (hidden_dim == 0 || input_dim == 0) {
    throw std::invalid_argument("hidden_dim and input_dim must be positive");
  }
  if (!(radius_norm_target > 0.0)) {
    throw std::invalid_argument("radius_norm_target must be positive");
  }
}

std::string LayerSlot::layer_id() const {
  return std::string(side == Side::encoder ? "encoder." : "decoder.") + std::to_string(index);
}

std::string LayerSlot::id() const {
  std::string out = layer_id();
  if (side == Side::encoder && index == 0) {
    out += direction == Direction::forward ? ".fwd" : ".bwd";
  }
  return out;
}

std::vector<LayerSlot> recurrent_layout(const ReservoirSpec& spec) {
  spec.validate();
  const std::uint32_t h = spec.hidden_dim;
  std::vector<LayerSlot> slots;
  slots.push_back({Side::encoder, 0, Direction::forward, spec.input_dim});
  slots.push_back({Side::encoder, 0, Direction::backward, spec.input_dim});
  for (std::uint32_t l = 1; l < spec.num_encoder_layers; ++l) {
    slots.push_back({Side::encoder, l, Direction::forward, h});
  }
  slots.push_back({Side::decoder, 0, Direction::forward, spec.input_dim});
  // Upper decoder layers read [previous layer output; attention context].
  for (std::uint32_t l = 1; l < spec.num_decoder_layers; ++l) {
    slots.push_back({Side::decoder, l, Direction::forward, 2 * h});
  }
  return slots;
}

void Architecture::validate() const {
  reservoir.validate();
  if (vocab_size < 5) throw std::invalid_argument("vocab_size must cover the reserved ids");
  if (attention_dim == 0) throw std::invalid_argument("attention_dim must be positive");
}

std::vector<TensorShape> tensor_layout(const Architecture& arch) {
  arch.validate();
  const auto& spec = arch.reservoir;
  const std::size_t h = spec.hidden_dim;
  const std::size_t e = spec.input_dim;
  const std::size_t v = arch.vocab_size;
  const std::size_t a = arch.attention_dim;
  const std::size_t g = gate_count(spec.cell_type);

  std::vector<TensorShape> out;
  out.push_back({"embedding", v, e, Component::embedding, TensorRole::embedding});

  const auto slots = recurrent_layout(spec);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto& slot = slots[s];
    const Component comp = slot.side == Side::encoder ? Component::encoder_recurrent
                                                      : Component::decoder_recurrent;
    const std::string id = slot.id();
    const int si = static_cast<int>(s);
    out.push_back({id + ".w_res", g * h, h, comp, TensorRole::w_res, si});
    out.push_back({id + ".w_in", g * h, slot.input_dim, comp, TensorRole::w_in, si});
    if (spec.cell_type == CellType::lstm) {
      out.push_back({id + ".bias", g * h, 1, comp, TensorRole::recurrent_bias, si});
    }
    out.push_back({id + ".rho", 1, 1, Component::scaling_factors, TensorRole::rho, si});
    out.push_back({id + ".gamma", 1, 1, Component::scaling_factors, TensorRole::gamma, si});
  }

  out.push_back({"attention.mix.weight", h, 2 * h, Component::attention, TensorRole::weight});
  out.push_back({"attention.mix.bias", h, 1, Component::attention, TensorRole::bias});
  out.push_back({"attention.query", a, h, Component::attention, TensorRole::weight});
  out.push_back({"attention.key", a, h, Component::attention, TensorRole::weight});
  out.push_back({"attention.score", a, 1, Component::attention, TensorRole::weight});

  out.push_back({"projection.combine.weight", h, 2 * h, Component::projection,
                 TensorRole::weight});
  out.push_back({"projection.combine.bias", h, 1, Component::projection, TensorRole::bias});
  out.push_back({"projection.out.weight", v, h, Component::projection, TensorRole::weight});
  out.push_back({"projection.out.bias", v, 1, Component::projection, TensorRole::bias});
  return out;
}

}  // namespace esnmt
