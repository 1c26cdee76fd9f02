#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "esnmt/architecture.hpp"
#include "esnmt/attention.hpp"
#include "esnmt/layers.hpp"
#include "esnmt/params.hpp"

namespace esnmt {

struct ModelConfig {
  Architecture arch;
  TrainabilityMask mask = TrainabilityMask::preset(MaskPreset::plus_attention);
  bool residual = true;
  // Pins every rho to this value and removes it from the trainable set.
  std::optional<double> fixed_rho;
  // Half-width of the uniform init used for non-reservoir tensors.
  double init_scale = 0.05;
  // Starting gamma of frozen recurrent slots; trainable slots start at 1.
  double gamma_init = 10.0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Tensor indices of one recurrent slot inside the parameter store.
struct SlotTensors {
  LayerSlot slot;
  std::size_t w_res = 0;
  std::size_t w_in = 0;
  std::optional<std::size_t> bias;
  std::size_t rho = 0;
  std::size_t gamma = 0;
};

class EsnmtModel {
 public:
  EsnmtModel(ModelConfig config, ParameterStore params);

  const ModelConfig& config() const { return config_; }
  const Architecture& arch() const { return config_.arch; }
  const ParameterStore& params() const { return params_; }
  ParameterStore& params() { return params_; }
  const std::vector<SlotTensors>& slots() const { return slots_; }

  RecurrentWeights slot_weights(std::size_t slot) const;
  ScalingFactors scaling(std::size_t slot) const;
  AttentionParams attention_params() const;
  bool trainable(Component c) const { return config_.mask[c]; }

 private:
  ModelConfig config_;
  ParameterStore params_;
  std::vector<SlotTensors> slots_;
};

// Trainable under the mask, except rho tensors when fixed_rho is set.
bool tensor_trainable(const ModelConfig& config, const TensorShape& shape);

// Deterministic initial model: frozen recurrent slots come from
// generate_reservoirs(spec), everything else from per-tensor streams keyed by
// the tensor name. The result depends only on the config.
EsnmtModel build_model(const ModelConfig& config);

struct SentencePair {
  std::vector<TokenId> source;
  std::vector<TokenId> target;
};

// Right-padded, time-major batch. tgt_in = [bos, target], tgt_out = [target, eos].
struct Batch {
  std::size_t size = 0;
  std::size_t src_len = 0;
  std::size_t tgt_len = 0;
  std::vector<TokenId> src;
  std::vector<std::uint8_t> src_valid;
  std::vector<TokenId> tgt_in;
  std::vector<TokenId> tgt_out;
};

Batch make_batch(std::span<const SentencePair> pairs);
Batch make_batch(std::span<const SentencePair> pairs, std::span<const std::size_t> indices);
// Source-only batch for decoding.
Batch make_source_batch(std::span<const std::vector<TokenId>> sources);

enum class Mode : std::uint8_t { train, eval };

struct ForwardOptions {
  Mode mode = Mode::eval;
  double dropout = 0.0;
  std::uint64_t dropout_seed = 0;
  std::uint64_t step = 0;
};

// Activations kept for the backward pass.
struct ForwardCache {
  const EsnmtModel* model = nullptr;
  Batch batch;
  Matrix drop_src, drop_tgt, drop_mix, drop_combine;
  std::vector<Matrix> drop_enc, drop_dec;
  RecurrentCache enc_fwd, enc_bwd;
  std::vector<RecurrentCache> enc_upper;
  std::vector<RecurrentCache> dec;
  Matrix mix_in;       // [fwd; bwd]
  Matrix memory;       // top encoder output
  AttentionCache attn;
  Matrix combine_in;   // [top decoder output; context]
  Matrix combine_out;  // tanh(...) before dropout
  Matrix readout;      // projection input
};

struct ForwardResult {
  Matrix logits;  // tgt_len * size x vocab
  ForwardCache cache;
};

ForwardResult forward(const EsnmtModel& model, const Batch& batch, const ForwardOptions& opts);

// Gradients for exactly the trainable tensors of the model.
GradientSet backward(const EsnmtModel& model, const ForwardCache& cache, const Matrix& d_logits);

struct EncoderOutput {
  Matrix memory;  // src_len * size x H
  std::vector<std::uint8_t> src_valid;
  std::size_t batch = 0;
};

EncoderOutput encode(const EsnmtModel& model, const Batch& batch);

// Argmax decoding until eos or max_len tokens; eos is not included.
std::vector<std::vector<TokenId>> greedy_decode(const EsnmtModel& model,
                                                std::span<const std::vector<TokenId>> sources,
                                                std::size_t max_len, std::size_t batch_size = 64);

}  // namespace esnmt
