#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "esnmt/architecture.hpp"
#include "esnmt/tensor.hpp"

namespace esnmt {

enum class MaskPreset : std::uint8_t {
  softmax_only = 0,
  plus_embedding,
  plus_attention,
  plus_encoder,
  plus_decoder,
  fully_trainable,
};

inline constexpr std::array<MaskPreset, 6> kAllPresets = {
    MaskPreset::softmax_only, MaskPreset::plus_embedding, MaskPreset::plus_attention,
    MaskPreset::plus_encoder, MaskPreset::plus_decoder,   MaskPreset::fully_trainable};

std::string_view to_string(MaskPreset preset);
MaskPreset parse_mask_preset(std::string_view text);

// Per-component trainable flag; false means frozen at its random initial value.
struct TrainabilityMask {
  std::array<bool, kComponentCount> trainable{};

  static TrainabilityMask preset(MaskPreset p);

  bool operator[](Component c) const { return trainable[static_cast<std::size_t>(c)]; }
  void set(Component c, bool value) { trainable[static_cast<std::size_t>(c)] = value; }
  bool any() const;
  void validate() const;

  // Bit i set iff component i is trainable.
  std::uint8_t bits() const;
  static TrainabilityMask from_bits(std::uint8_t bits);
  // Named preset if the flags match one, else "custom".
  std::string name() const;

  bool operator==(const TrainabilityMask&) const = default;
};

struct Tensor {
  TensorShape shape;
  Matrix value;
  bool trainable = false;
};

using GradientSet = std::map<std::string, Matrix>;

class ParameterStore {
 public:
  ParameterStore() = default;
  explicit ParameterStore(std::vector<Tensor> tensors);

  std::size_t size() const { return tensors_.size(); }
  const Tensor& at(std::size_t i) const { return tensors_.at(i); }
  Tensor& at(std::size_t i) { return tensors_.at(i); }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  bool contains(const std::string& name) const;
  std::size_t index(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return tensors_[index(name)].value; }
  Matrix& value(const std::string& name) { return tensors_[index(name)].value; }

  std::vector<std::string> trainable_names() const;
  std::vector<std::string> frozen_names() const;
  // SHA-256 of every frozen tensor, keyed by name.
  std::map<std::string, std::string> frozen_digests() const;
  std::uint64_t trainable_count() const;
  std::uint64_t frozen_count() const;

 private:
  std::vector<Tensor> tensors_;
  std::map<std::string, std::size_t> by_name_;
};

// Global L2 norm over every entry, accumulated in key order.
double global_norm(const GradientSet& grads);

}  // namespace esnmt
