#include "esnmt/params.hpp"

#include <cmath>
#include <stdexcept>

#include "esnmt/digest.hpp"

namespace esnmt {

std::string_view to_string(MaskPreset preset) {
  switch (preset) {
    case MaskPreset::softmax_only:
      return "softmax_only";
    case MaskPreset::plus_embedding:
      return "plus_embedding";
    case MaskPreset::plus_attention:
      return "plus_attention";
    case MaskPreset::plus_encoder:
      return "plus_encoder";
    case MaskPreset::plus_decoder:
      return "plus_decoder";
    case MaskPreset::fully_trainable:
      return "fully_trainable";
  }
  return "?";
}

MaskPreset parse_mask_preset(std::string_view text) {
  for (MaskPreset p : kAllPresets) {
    if (to_string(p) == text) return p;
  }
  throw std::invalid_argument("unknown mask preset '" + std::string(text) + "'");
}

TrainabilityMask TrainabilityMask::preset(MaskPreset p) {
  TrainabilityMask m;
  m.set(Component::projection, true);
  if (p == MaskPreset::softmax_only) return m;
  m.set(Component::embedding, true);
  if (p == MaskPreset::plus_embedding) return m;
  m.set(Component::attention, true);
  m.set(Component::scaling_factors, true);
  switch (p) {
    case MaskPreset::plus_encoder:
      m.set(Component::encoder_recurrent, true);
      break;
    case MaskPreset::plus_decoder:
      m.set(Component::decoder_recurrent, true);
      break;
    case MaskPreset::fully_trainable:
      m.set(Component::encoder_recurrent, true);
      m.set(Component::decoder_recurrent, true);
      break;
    default:
      break;
  }
  return m;
}

bool TrainabilityMask::any() const {
  for (bool t : trainable) {
    if (t) return true;
  }
  return false;
}

void TrainabilityMask::validate() const {
  if (!any()) throw std::invalid_argument("trainability mask freezes every component");
}

std::uint8_t TrainabilityMask::bits() const {
  std::uint8_t out = 0;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    if (trainable[i]) out = static_cast<std::uint8_t>(out | (1u << i));
  }
  return out;
}

TrainabilityMask TrainabilityMask::from_bits(std::uint8_t bits) {
  if (bits >> kComponentCount) throw std::invalid_argument("mask has unknown component bits");
  TrainabilityMask m;
  for (std::size_t i = 0; i < kComponentCount; ++i) m.trainable[i] = (bits >> i) & 1u;
  return m;
}

std::string TrainabilityMask::name() const {
  for (MaskPreset p : kAllPresets) {
    if (preset(p) == *this) return std::string(to_string(p));
  }
  return "custom";
}

ParameterStore::ParameterStore(std::vector<Tensor> tensors) : tensors_(std::move(tensors)) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    const auto& t = tensors_[i];
    if (t.value.rows() != t.shape.rows || t.value.cols() != t.shape.cols) {
      throw DimensionError("tensor " + t.shape.name + " holds " + t.value.shape_string());
    }
    if (!by_name_.emplace(t.shape.name, i).second) {
      throw std::invalid_argument("duplicate tensor name " + t.shape.name);
    }
  }
}

bool ParameterStore::contains(const std::string& name) const { return by_name_.count(name) > 0; }

std::size_t ParameterStore::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw std::out_of_range("no tensor named '" + name + "'");
  return it->second;
}

std::vector<std::string> ParameterStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& t : tensors_) {
    if (t.trainable) out.push_back(t.shape.name);
  }
  return out;
}

std::vector<std::string> ParameterStore::frozen_names() const {
  std::vector<std::string> out;
  for (const auto& t : tensors_) {
    if (!t.trainable) out.push_back(t.shape.name);
  }
  return out;
}

std::map<std::string, std::string> ParameterStore::frozen_digests() const {
  std::map<std::string, std::string> out;
  for (const auto& t : tensors_) {
    if (!t.trainable) out.emplace(t.shape.name, tensor_digest(t.value));
  }
  return out;
}

std::uint64_t ParameterStore::trainable_count() const {
  std::uint64_t n = 0;
  for (const auto& t : tensors_) {
    if (t.trainable) n += t.value.size();
  }
  return n;
}

std::uint64_t ParameterStore::frozen_count() const {
  std::uint64_t n = 0;
  for (const auto& t : tensors_) {
    if (!t.trainable) n += t.value.size();
  }
  return n;
}

double global_norm(const GradientSet& grads) {
  double sum = 0.0;
  for (const auto& [name, g] : grads) {
    for (double x : g.values()) sum += x * x;
  }
  return std::sqrt(sum);
}

}  // namespace esnmt
