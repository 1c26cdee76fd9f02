#include "esnmt/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "esnmt/reservoir.hpp"
#include "esnmt/rng.hpp"

namespace esnmt {

void ModelConfig::validate() const {
  arch.validate();
  mask.validate();
  if (!(init_scale > 0.0) || !std::isfinite(init_scale)) {
    throw std::invalid_argument("init_scale must be positive");
  }
  if (!std::isfinite(gamma_init)) throw std::invalid_argument("gamma_init must be finite");
  if (fixed_rho && !std::isfinite(*fixed_rho)) {
    throw std::invalid_argument("fixed_rho must be finite");
  }
}

EsnmtModel::EsnmtModel(ModelConfig config, ParameterStore params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const auto layout = tensor_layout(config_.arch);
  if (layout.size() != params_.size()) {
    throw std::invalid_argument("parameter store has " + std::to_string(params_.size()) +
                                " tensors, architecture needs " + std::to_string(layout.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& want = layout[i];
    const auto& have = params_.at(i).shape;
    if (want.name != have.name || want.rows != have.rows || want.cols != have.cols) {
      throw DimensionError("tensor " + std::to_string(i) + ": expected " + want.name + " " +
                           std::to_string(want.rows) + "x" + std::to_string(want.cols) +
                           ", found " + have.name + " " + params_.at(i).value.shape_string());
    }
  }
  const bool lstm = config_.arch.reservoir.cell_type == CellType::lstm;
  for (const auto& slot : recurrent_layout(config_.arch.reservoir)) {
    const std::string id = slot.id();
    SlotTensors s;
    s.slot = slot;
    s.w_res = params_.index(id + ".w_res");
    s.w_in = params_.index(id + ".w_in");
    if (lstm) s.bias = params_.index(id + ".bias");
    s.rho = params_.index(id + ".rho");
    s.gamma = params_.index(id + ".gamma");
    slots_.push_back(s);
  }
}

ScalingFactors EsnmtModel::scaling(std::size_t slot) const {
  const auto& s = slots_.at(slot);
  return {params_.at(s.rho).value.data()[0], params_.at(s.gamma).value.data()[0]};
}

RecurrentWeights EsnmtModel::slot_weights(std::size_t slot) const {
  const auto& s = slots_.at(slot);
  RecurrentWeights w;
  w.cell = config_.arch.reservoir.cell_type;
  w.w_res = &params_.at(s.w_res).value;
  w.w_in = &params_.at(s.w_in).value;
  w.bias = s.bias ? &params_.at(*s.bias).value : nullptr;
  w.scale = scaling(slot);
  w.name = s.slot.id();
  return w;
}

AttentionParams EsnmtModel::attention_params() const {
  return {&params_.value("attention.query"), &params_.value("attention.key"),
          &params_.value("attention.score")};
}

bool tensor_trainable(const ModelConfig& config, const TensorShape& shape) {
  return config.mask[shape.component] &&
         !(shape.role == TensorRole::rho && config.fixed_rho.has_value());
}

EsnmtModel build_model(const ModelConfig& config) {
  config.validate();
  const auto& spec = config.arch.reservoir;
  const auto slots = recurrent_layout(spec);
  std::vector<std::optional<LayerReservoir>> reservoirs(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const Component comp = slots[s].side == Side::encoder ? Component::encoder_recurrent
                                                          : Component::decoder_recurrent;
    if (!config.mask[comp]) reservoirs[s] = generate_layer(spec, slots[s]);
  }

  std::vector<Tensor> tensors;
  for (const auto& shape : tensor_layout(config.arch)) {
    Tensor t;
    t.shape = shape;
    t.trainable = tensor_trainable(config, shape);
    const bool from_reservoir = shape.slot >= 0 && reservoirs[shape.slot].has_value();
    Rng rng(spec.seed, "init/" + shape.name);
    switch (shape.role) {
      case TensorRole::w_res:
      case TensorRole::w_in:
        if (from_reservoir) {
          const auto& r = *reservoirs[shape.slot];
          t.value = (shape.role == TensorRole::w_res ? r.w_res : r.w_in).to_dense();
        } else {
          t.value = seeded_uniform(rng, shape.rows, shape.cols, -config.init_scale,
                                   config.init_scale);
        }
        break;
      case TensorRole::recurrent_bias:
        if (from_reservoir) {
          t.value = Matrix::column(reservoirs[shape.slot]->bias);
        } else {
          // Trainable LSTM: zero bias with the forget block opened.
          t.value = Matrix(shape.rows, 1);
          const std::size_t h = shape.rows / 4;
          for (std::size_t i = h; i < 2 * h; ++i) t.value.data()[i] = 1.0;
        }
        break;
      case TensorRole::rho:
        t.value = Matrix(1, 1, config.fixed_rho.value_or(1.0));
        break;
      case TensorRole::gamma:
        t.value = Matrix(1, 1, from_reservoir ? config.gamma_init : 1.0);
        break;
      case TensorRole::bias:
        t.value = Matrix(shape.rows, shape.cols);
        break;
      case TensorRole::embedding:
      case TensorRole::weight:
        t.value = seeded_uniform(rng, shape.rows, shape.cols, -config.init_scale,
                                 config.init_scale);
        break;
    }
    tensors.push_back(std::move(t));
  }
  return EsnmtModel(config, ParameterStore(std::move(tensors)));
}

Batch make_batch(std::span<const SentencePair> pairs, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  Batch b;
  b.size = indices.size();
  for (std::size_t i : indices) {
    const auto& p = pairs[i];
    if (p.source.empty()) throw std::invalid_argument("make_batch: empty source sequence");
    b.src_len = std::max(b.src_len, p.source.size());
    b.tgt_len = std::max(b.tgt_len, p.target.size() + 1);
  }
  b.src.assign(b.src_len * b.size, kPadId);
  b.src_valid.assign(b.src_len * b.size, 0);
  b.tgt_in.assign(b.tgt_len * b.size, kPadId);
  b.tgt_out.assign(b.tgt_len * b.size, kPadId);
  for (std::size_t j = 0; j < b.size; ++j) {
    const auto& p = pairs[indices[j]];
    for (std::size_t t = 0; t < p.source.size(); ++t) {
      b.src[t * b.size + j] = p.source[t];
      b.src_valid[t * b.size + j] = 1;
    }
    b.tgt_in[j] = kBosId;
    for (std::size_t t = 0; t < p.target.size(); ++t) {
      b.tgt_in[(t + 1) * b.size + j] = p.target[t];
      b.tgt_out[t * b.size + j] = p.target[t];
    }
    b.tgt_out[p.target.size() * b.size + j] = kEosId;
  }
  return b;
}

Batch make_batch(std::span<const SentencePair> pairs) {
  std::vector<std::size_t> idx(pairs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch(pairs, idx);
}

Batch make_source_batch(std::span<const std::vector<TokenId>> sources) {
  std::vector<SentencePair> pairs;
  pairs.reserve(sources.size());
  for (const auto& s : sources) pairs.push_back({s, {}});
  return make_batch(pairs);
}

namespace {

Matrix dropout_mask(std::size_t rows, std::size_t cols, const ForwardOptions& opts,
                    const std::string& site) {
  if (opts.mode != Mode::train || opts.dropout <= 0.0) return {};
  if (opts.dropout >= 1.0) throw std::invalid_argument("dropout rate must be below 1");
  Rng rng(opts.dropout_seed, "dropout/" + std::to_string(opts.step) + "/" + site);
  const double keep = 1.0 / (1.0 - opts.dropout);
  Matrix m(rows, cols);
  for (double& x : m.values()) x = rng.uniform01() < opts.dropout ? 0.0 : keep;
  return m;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.empty()) return;
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] *= mask.data()[i];
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

// Runs the encoder, filling the cache fields it owns.
void run_encoder(const EsnmtModel& model, const Batch& batch, const ForwardOptions& opts,
                 ForwardCache& c) {
  const auto& params = model.params();
  const std::size_t n_enc = model.arch().reservoir.num_encoder_layers;
  const std::size_t bsz = batch.size;

  Matrix x = embed(params.value("embedding"), batch.src);
  c.drop_src = dropout_mask(x.rows(), x.cols(), opts, "embed.src");
  apply_mask(x, c.drop_src);

  c.enc_fwd = recurrent_forward(model.slot_weights(0), x, bsz, batch.src_valid, false);
  c.enc_bwd = recurrent_forward(model.slot_weights(1), x, bsz, batch.src_valid, true);
  c.mix_in = hstack(c.enc_fwd.h, c.enc_bwd.h);
  Matrix layer = affine_forward(c.mix_in, params.value("attention.mix.weight"),
                                &params.value("attention.mix.bias"));
  c.drop_mix = dropout_mask(layer.rows(), layer.cols(), opts, "encoder.0");
  apply_mask(layer, c.drop_mix);

  c.enc_upper.clear();
  c.drop_enc.clear();
  for (std::size_t l = 1; l < n_enc; ++l) {
    c.enc_upper.push_back(
        recurrent_forward(model.slot_weights(1 + l), layer, bsz, batch.src_valid, false));
    Matrix out = c.enc_upper.back().h;
    c.drop_enc.push_back(dropout_mask(out.rows(), out.cols(), opts, "encoder." + std::to_string(l)));
    apply_mask(out, c.drop_enc.back());
    if (model.config().residual) add_into(out, layer);
    layer = std::move(out);
  }
  c.memory = std::move(layer);
}

}  // namespace

ForwardResult forward(const EsnmtModel& model, const Batch& batch, const ForwardOptions& opts) {
  const auto& params = model.params();
  const auto& spec = model.arch().reservoir;
  const std::size_t n_enc = spec.num_encoder_layers;
  const std::size_t n_dec = spec.num_decoder_layers;
  const std::size_t bsz = batch.size;
  if (bsz == 0 || batch.src.size() != batch.src_len * bsz ||
      batch.tgt_in.size() != batch.tgt_len * bsz) {
    throw std::invalid_argument("forward: malformed batch");
  }

  ForwardResult res;
  ForwardCache& c = res.cache;
  c.model = &model;
  c.batch = batch;
  run_encoder(model, batch, opts, c);

  Matrix y = embed(params.value("embedding"), batch.tgt_in);
  c.drop_tgt = dropout_mask(y.rows(), y.cols(), opts, "embed.tgt");
  apply_mask(y, c.drop_tgt);

  const std::size_t dec0 = 1 + n_enc;
  c.dec.clear();
  c.drop_dec.clear();
  c.dec.push_back(recurrent_forward(model.slot_weights(dec0), y, bsz, {}, false));
  Matrix layer = c.dec.back().h;
  c.drop_dec.push_back(dropout_mask(layer.rows(), layer.cols(), opts, "decoder.0"));
  apply_mask(layer, c.drop_dec.back());

  AttentionResult attn =
      attention_forward(model.attention_params(), layer, c.memory, bsz, batch.src_valid);
  c.attn = std::move(attn.cache);
  const Matrix& ctx = attn.context;

  for (std::size_t l = 1; l < n_dec; ++l) {
    c.dec.push_back(
        recurrent_forward(model.slot_weights(dec0 + l), hstack(layer, ctx), bsz, {}, false));
    Matrix out = c.dec.back().h;
    c.drop_dec.push_back(dropout_mask(out.rows(), out.cols(), opts, "decoder." + std::to_string(l)));
    apply_mask(out, c.drop_dec.back());
    if (model.config().residual) add_into(out, layer);
    layer = std::move(out);
  }

  c.combine_in = hstack(layer, ctx);
  c.combine_out = affine_forward(c.combine_in, params.value("projection.combine.weight"),
                                 &params.value("projection.combine.bias"));
  for (double& v : c.combine_out.values()) v = std::tanh(v);
  c.readout = c.combine_out;
  c.drop_combine = dropout_mask(c.readout.rows(), c.readout.cols(), opts, "combine");
  apply_mask(c.readout, c.drop_combine);
  res.logits = affine_forward(c.readout, params.value("projection.out.weight"),
                              &params.value("projection.out.bias"));
  require_finite(res.logits, "projection output");
  return res;
}

GradientSet backward(const EsnmtModel& model, const ForwardCache& c, const Matrix& d_logits) {
  if (c.model != &model) throw std::invalid_argument("backward: cache was produced by another model");
  const auto& params = model.params();
  const auto& spec = model.arch().reservoir;
  const std::size_t n_enc = spec.num_encoder_layers;
  const std::size_t n_dec = spec.num_decoder_layers;
  const std::size_t hd = spec.hidden_dim;
  if (d_logits.rows() != c.readout.rows() || d_logits.cols() != model.arch().vocab_size) {
    throw DimensionError("backward: logits gradient " + d_logits.shape_string() +
                         " does not match cached forward pass");
  }
  const bool t_emb = model.trainable(Component::embedding);
  const bool t_attn = model.trainable(Component::attention);
  const bool t_proj = model.trainable(Component::projection);
  const bool t_enc = model.trainable(Component::encoder_recurrent);
  const bool t_dec = model.trainable(Component::decoder_recurrent);
  const bool t_scale = model.trainable(Component::scaling_factors);
  const bool below = t_emb || t_attn || t_enc || t_dec || t_scale;

  GradientSet grads;
  auto put = [&](const std::string& name, Matrix g) {
    if (params.at(params.index(name)).trainable) grads[name] = std::move(g);
  };
  auto put_slot = [&](std::size_t slot, RecurrentGrads& g, bool weights) {
    const auto& s = model.slots()[slot];
    const std::string id = s.slot.id();
    if (weights) {
      put(id + ".w_res", std::move(g.d_w_res));
      put(id + ".w_in", std::move(g.d_w_in));
      if (s.bias) put(id + ".bias", std::move(g.d_bias));
    }
    if (t_scale) {
      put(id + ".rho", Matrix(1, 1, g.d_rho));
      put(id + ".gamma", Matrix(1, 1, g.d_gamma));
    }
  };

  // Readout and combine layer.
  AffineGrads g_out = affine_backward(c.readout, params.value("projection.out.weight"), d_logits,
                                      true, t_proj, true);
  if (t_proj) {
    put("projection.out.weight", std::move(g_out.d_w));
    put("projection.out.bias", std::move(g_out.d_b));
  }
  Matrix d_z = std::move(g_out.d_x);
  apply_mask(d_z, c.drop_combine);
  for (std::size_t i = 0; i < d_z.size(); ++i) {
    const double z = c.combine_out.data()[i];
    d_z.data()[i] *= 1.0 - z * z;
  }
  AffineGrads g_comb = affine_backward(c.combine_in, params.value("projection.combine.weight"),
                                       d_z, below, t_proj, true);
  if (t_proj) {
    put("projection.combine.weight", std::move(g_comb.d_w));
    put("projection.combine.bias", std::move(g_comb.d_b));
  }

  if (below) {
    Matrix d_layer(g_comb.d_x.rows(), hd), d_ctx(g_comb.d_x.rows(), hd);
    split_columns(g_comb.d_x, d_layer, d_ctx);
    const std::size_t dec0 = 1 + n_enc;

    for (std::size_t l = n_dec; l-- > 1;) {
      Matrix d_out = d_layer;
      apply_mask(d_out, c.drop_dec[l]);
      RecurrentGradRequest req;
      req.input = true;
      req.scaling = t_scale;
      req.weights = t_dec;
      RecurrentGrads g = recurrent_backward(model.slot_weights(dec0 + l), c.dec[l], d_out, req);
      put_slot(dec0 + l, g, t_dec);
      Matrix d_prev(g.d_x.rows(), hd), d_ctx_l(g.d_x.rows(), hd);
      split_columns(g.d_x, d_prev, d_ctx_l);
      if (model.config().residual) add_into(d_prev, d_layer);
      add_into(d_ctx, d_ctx_l);
      d_layer = std::move(d_prev);
    }

    AttentionGrads g_attn = attention_backward(model.attention_params(), c.attn, d_ctx, t_attn);
    if (t_attn) {
      put("attention.query", std::move(g_attn.d_query_w));
      put("attention.key", std::move(g_attn.d_key_w));
      put("attention.score", std::move(g_attn.d_score));
    }
    add_into(d_layer, g_attn.d_queries);

    Matrix d_emb;
    if (t_emb) d_emb = Matrix(params.value("embedding").rows(), params.value("embedding").cols());

    {
      Matrix d_out = d_layer;
      apply_mask(d_out, c.drop_dec[0]);
      RecurrentGradRequest req;
      req.input = t_emb;
      req.scaling = t_scale;
      req.weights = t_dec;
      RecurrentGrads g = recurrent_backward(model.slot_weights(dec0), c.dec[0], d_out, req);
      put_slot(dec0, g, t_dec);
      if (t_emb) {
        apply_mask(g.d_x, c.drop_tgt);
        embed_backward(g.d_x, c.batch.tgt_in, d_emb);
      }
    }

    // Encoder.
    Matrix d_mem = std::move(g_attn.d_memory);
    for (std::size_t l = n_enc; l-- > 1;) {
      Matrix d_out = d_mem;
      apply_mask(d_out, c.drop_enc[l - 1]);
      RecurrentGradRequest req;
      req.input = true;
      req.scaling = t_scale;
      req.weights = t_enc;
      RecurrentGrads g =
          recurrent_backward(model.slot_weights(1 + l), c.enc_upper[l - 1], d_out, req);
      put_slot(1 + l, g, t_enc);
      if (model.config().residual) add_into(g.d_x, d_mem);
      d_mem = std::move(g.d_x);
    }
    apply_mask(d_mem, c.drop_mix);
    AffineGrads g_mix = affine_backward(c.mix_in, params.value("attention.mix.weight"), d_mem,
                                        true, t_attn, true);
    if (t_attn) {
      put("attention.mix.weight", std::move(g_mix.d_w));
      put("attention.mix.bias", std::move(g_mix.d_b));
    }
    Matrix d_f(g_mix.d_x.rows(), hd), d_b(g_mix.d_x.rows(), hd);
    split_columns(g_mix.d_x, d_f, d_b);
    RecurrentGradRequest req;
    req.input = t_emb;
    req.scaling = t_scale;
    req.weights = t_enc;
    RecurrentGrads gf = recurrent_backward(model.slot_weights(0), c.enc_fwd, d_f, req);
    RecurrentGrads gb = recurrent_backward(model.slot_weights(1), c.enc_bwd, d_b, req);
    put_slot(0, gf, t_enc);
    put_slot(1, gb, t_enc);
    if (t_emb) {
      add_into(gf.d_x, gb.d_x);
      apply_mask(gf.d_x, c.drop_src);
      embed_backward(gf.d_x, c.batch.src, d_emb);
      put("embedding", std::move(d_emb));
    }
  }

  for (const auto& name : params.trainable_names()) {
    if (!grads.count(name)) throw std::logic_error("backward produced no gradient for " + name);
  }
  return grads;
}

EncoderOutput encode(const EsnmtModel& model, const Batch& batch) {
  ForwardCache c;
  run_encoder(model, batch, ForwardOptions{}, c);
  return {std::move(c.memory), batch.src_valid, batch.size};
}

}  // namespace esnmt
