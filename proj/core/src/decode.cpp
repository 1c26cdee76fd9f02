#include <cmath>
#include <stdexcept>

#include "esnmt/model.hpp"

namespace esnmt {

namespace {

struct DecoderSlot {
  RecurrentWeights w;
  Matrix w_in_t;
  Matrix w_res_t;
};

Matrix input_products(const DecoderSlot& s, const Matrix& x) {
  Matrix u(x.rows(), s.w_in_t.cols());
  gemm_acc(x.data(), s.w_in_t.data(), u.data(), x.rows(), x.cols(), u.cols());
  return u;
}

std::size_t argmax_row(const Matrix& m, std::size_t r) {
  auto row = m.row(r);
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace

std::vector<std::vector<TokenId>> greedy_decode(const EsnmtModel& model,
                                                std::span<const std::vector<TokenId>> sources,
                                                std::size_t max_len, std::size_t batch_size) {
  if (max_len == 0) throw std::invalid_argument("greedy_decode: max_len must be positive");
  if (batch_size == 0) throw std::invalid_argument("greedy_decode: batch_size must be positive");
  const auto& params = model.params();
  const auto& spec = model.arch().reservoir;
  const std::size_t n_enc = spec.num_encoder_layers;
  const std::size_t n_dec = spec.num_decoder_layers;
  const std::size_t hd = spec.hidden_dim;
  const AttentionParams ap = model.attention_params();
  const Matrix& table = params.value("embedding");

  std::vector<DecoderSlot> dec;
  for (std::size_t l = 0; l < n_dec; ++l) {
    DecoderSlot s{model.slot_weights(1 + n_enc + l), {}, {}};
    s.w_in_t = transpose(*s.w.w_in);
    s.w_res_t = transpose(*s.w.w_res);
    dec.push_back(std::move(s));
  }

  std::vector<std::vector<TokenId>> out(sources.size());
  for (std::size_t first = 0; first < sources.size(); first += batch_size) {
    const std::size_t bsz = std::min(batch_size, sources.size() - first);
    const Batch batch = make_source_batch(sources.subspan(first, bsz));
    const EncoderOutput enc = encode(model, batch);
    const Matrix keys = attention_keys(ap, enc.memory);

    std::vector<Matrix> h(n_dec, Matrix(bsz, hd));
    std::vector<Matrix> c(n_dec, Matrix(bsz, hd));
    std::vector<TokenId> prev(bsz, kBosId);
    std::vector<std::uint8_t> done(bsz, 0);
    std::size_t remaining = bsz;

    for (std::size_t step = 0; step < max_len && remaining > 0; ++step) {
      Matrix hn, cn;
      const Matrix x = embed(table, prev);
      recurrent_step_rows(dec[0].w, dec[0].w_res_t, input_products(dec[0], x), h[0], c[0], hn, cn);
      h[0] = std::move(hn);
      if (spec.cell_type == CellType::lstm) c[0] = std::move(cn);
      Matrix layer = h[0];
      const Matrix ctx = attention_step(ap, layer, keys, enc.memory, bsz, enc.src_valid);
      for (std::size_t l = 1; l < n_dec; ++l) {
        const Matrix xin = hstack(layer, ctx);
        recurrent_step_rows(dec[l].w, dec[l].w_res_t, input_products(dec[l], xin), h[l], c[l], hn,
                            cn);
        h[l] = std::move(hn);
        if (spec.cell_type == CellType::lstm) c[l] = std::move(cn);
        Matrix o = h[l];
        if (model.config().residual) {
          for (std::size_t i = 0; i < o.size(); ++i) o.data()[i] += layer.data()[i];
        }
        layer = std::move(o);
      }
      Matrix z = affine_forward(hstack(layer, ctx), params.value("projection.combine.weight"),
                                &params.value("projection.combine.bias"));
      for (double& v : z.values()) v = std::tanh(v);
      const Matrix logits = affine_forward(z, params.value("projection.out.weight"),
                                           &params.value("projection.out.bias"));
      require_finite(logits, "projection output");
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto tok = static_cast<TokenId>(argmax_row(logits, b));
        prev[b] = tok;
        if (done[b]) continue;
        if (tok == kEosId) {
          done[b] = 1;
          --remaining;
        } else {
          out[first + b].push_back(tok);
        }
      }
    }
  }
  return out;
}

}  // namespace esnmt
