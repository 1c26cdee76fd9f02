#include "esnmt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace esnmt {

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

[[noreturn]] void throw_non_finite(const std::string& layer, std::size_t step) {
  throw NumericalError("non-finite pre-activation in layer " + layer + " at step " +
                       std::to_string(step) + " (check rho/gamma)");
}

// Element-wise part of one step for `rows` rows. a and u are the unscaled
// recurrent and input products (rows x G*H).
void cell_rows(const RecurrentWeights& w, std::size_t rows, const double* a, const double* u,
               const double* c_prev, double* h, double* c, double* gates, double* tanh_c,
               std::size_t step) {
  const std::size_t hd = w.hidden();
  const double rho = w.scale.rho;
  const double gamma = w.scale.gamma;
  if (w.cell == CellType::simple_rnn) {
    for (std::size_t i = 0; i < rows * hd; ++i) {
      const double pre = rho * a[i] + gamma * u[i];
      if (!std::isfinite(pre)) throw_non_finite(w.name, step);
      h[i] = std::tanh(pre);
    }
    return;
  }
  const double* bias = w.bias->data();
  const std::size_t gh = 4 * hd;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* ar = a + r * gh;
    const double* ur = u + r * gh;
    double* gr = gates + r * gh;
    for (std::size_t j = 0; j < gh; ++j) {
      const double pre = rho * ar[j] + gamma * ur[j] + bias[j];
      if (!std::isfinite(pre)) throw_non_finite(w.name, step);
      gr[j] = (j >= 2 * hd && j < 3 * hd) ? std::tanh(pre) : sigmoid(pre);
    }
    for (std::size_t i = 0; i < hd; ++i) {
      const double ig = gr[i];
      const double fg = gr[hd + i];
      const double cg = gr[2 * hd + i];
      const double og = gr[3 * hd + i];
      const double cs = fg * c_prev[r * hd + i] + ig * cg;
      const double tc = std::tanh(cs);
      c[r * hd + i] = cs;
      tanh_c[r * hd + i] = tc;
      h[r * hd + i] = og * tc;
    }
  }
}

void check_weights(const RecurrentWeights& w) {
  if (w.w_res == nullptr || w.w_in == nullptr) {
    throw std::invalid_argument("recurrent layer " + w.name + " has no weights");
  }
  const std::size_t gh = w.gates() * w.hidden();
  if (w.w_res->rows() != gh || w.w_in->rows() != gh) {
    throw DimensionError("recurrent layer " + w.name + ": w_res " + w.w_res->shape_string() +
                         ", w_in " + w.w_in->shape_string() + " inconsistent with " +
                         std::string(to_string(w.cell)) + " cell");
  }
  if (w.cell == CellType::lstm && (w.bias == nullptr || w.bias->size() != gh)) {
    throw DimensionError("recurrent layer " + w.name + ": LSTM bias must have " +
                         std::to_string(gh) + " entries");
  }
}

}  // namespace

RecurrentCache recurrent_forward(const RecurrentWeights& w, const Matrix& x, std::size_t batch,
                                 std::span<const std::uint8_t> active, bool reverse,
                                 const Matrix* h0, const Matrix* c0) {
  check_weights(w);
  const std::size_t hd = w.hidden();
  const std::size_t k = w.input();
  const std::size_t gh = w.gates() * hd;
  if (batch == 0 || x.rows() % batch != 0 || x.cols() != k) {
    std::ostringstream msg;
    msg << "recurrent layer " << w.name << ": input " << x.shape_string()
        << " incompatible with batch " << batch << " and input width " << k;
    throw DimensionError(msg.str());
  }
  const std::size_t steps = x.rows() / batch;
  if (!active.empty() && active.size() != x.rows()) {
    throw DimensionError("recurrent layer " + w.name + ": mask length mismatch");
  }
  const bool lstm = w.cell == CellType::lstm;

  RecurrentCache cache;
  cache.cell = w.cell;
  cache.steps = steps;
  cache.batch = batch;
  cache.hidden = hd;
  cache.input = k;
  cache.reverse = reverse;
  cache.active.assign(active.begin(), active.end());
  cache.x = x;
  cache.u = Matrix(x.rows(), gh);
  cache.a = Matrix(x.rows(), gh);
  cache.h = Matrix(x.rows(), hd);
  cache.h_prev = Matrix(x.rows(), hd);
  if (lstm) {
    cache.c = Matrix(x.rows(), hd);
    cache.c_prev = Matrix(x.rows(), hd);
    cache.gates = Matrix(x.rows(), gh);
    cache.tanh_c = Matrix(x.rows(), hd);
  }

  const Matrix w_in_t = transpose(*w.w_in);
  const Matrix w_res_t = transpose(*w.w_res);
  gemm_acc(x.data(), w_in_t.data(), cache.u.data(), x.rows(), k, gh);

  Matrix h_state = h0 != nullptr ? *h0 : Matrix(batch, hd);
  Matrix c_state = c0 != nullptr ? *c0 : Matrix(batch, hd);
  if (h_state.rows() != batch || h_state.cols() != hd || c_state.rows() != batch ||
      c_state.cols() != hd) {
    throw DimensionError("recurrent layer " + w.name + ": initial state shape mismatch");
  }

  for (std::size_t p = 0; p < steps; ++p) {
    const std::size_t t = reverse ? steps - 1 - p : p;
    const std::size_t r0 = t * batch;
    std::copy(h_state.values().begin(), h_state.values().end(),
              cache.h_prev.rows_span(r0, batch).begin());
    double* a = cache.a.data() + r0 * gh;
    gemm_acc(h_state.data(), w_res_t.data(), a, batch, hd, gh);
    double* h = cache.h.data() + r0 * hd;
    if (lstm) {
      std::copy(c_state.values().begin(), c_state.values().end(),
                cache.c_prev.rows_span(r0, batch).begin());
      cell_rows(w, batch, a, cache.u.data() + r0 * gh, c_state.data(), h,
                cache.c.data() + r0 * hd, cache.gates.data() + r0 * gh,
                cache.tanh_c.data() + r0 * hd, t);
    } else {
      cell_rows(w, batch, a, cache.u.data() + r0 * gh, nullptr, h, nullptr, nullptr, nullptr, t);
    }
    for (std::size_t b = 0; b < batch; ++b) {
      if (!active.empty() && active[r0 + b] == 0) {
        std::copy(h_state.row(b).begin(), h_state.row(b).end(), h + b * hd);
        if (lstm) {
          std::copy(c_state.row(b).begin(), c_state.row(b).end(),
                    cache.c.data() + (r0 + b) * hd);
        }
      }
    }
    std::copy(h, h + batch * hd, h_state.data());
    if (lstm) {
      const double* c = cache.c.data() + r0 * hd;
      std::copy(c, c + batch * hd, c_state.data());
    }
  }
  return cache;
}

RecurrentGrads recurrent_backward(const RecurrentWeights& w, const RecurrentCache& cache,
                                  const Matrix& d_h, const RecurrentGradRequest& request,
                                  const Matrix* d_c_last) {
  check_weights(w);
  const std::size_t hd = cache.hidden;
  const std::size_t gh = w.gates() * hd;
  const std::size_t batch = cache.batch;
  const std::size_t rows = cache.steps * batch;
  if (cache.cell != w.cell || hd != w.hidden() || cache.input != w.input()) {
    throw std::invalid_argument("recurrent layer " + w.name + ": cache does not match weights");
  }
  if (d_h.rows() != rows || d_h.cols() != hd) {
    throw DimensionError("recurrent layer " + w.name + ": upstream gradient " +
                         d_h.shape_string() + " does not match cached output " +
                         cache.h.shape_string());
  }
  const bool lstm = w.cell == CellType::lstm;
  const double rho = w.scale.rho;
  const double gamma = w.scale.gamma;

  RecurrentGrads out;
  Matrix d_u(rows, gh);
  Matrix d_a(rows, gh);
  Matrix dh_carry(batch, hd);
  Matrix dc_carry(batch, hd);
  if (d_c_last != nullptr) {
    if (!lstm || d_c_last->rows() != batch || d_c_last->cols() != hd) {
      throw DimensionError("recurrent layer " + w.name + ": bad cell-state gradient");
    }
    dc_carry = *d_c_last;
  }
  Vector d_bias(lstm ? gh : 0, 0.0);
  Vector dpre(gh);
  Vector d(hd);
  Matrix dh_prev(batch, hd);

  for (std::size_t q = cache.steps; q-- > 0;) {
    const std::size_t t = cache.reverse ? cache.steps - 1 - q : q;
    const std::size_t r0 = t * batch;
    std::vector<std::uint8_t> held(batch, 0);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t r = r0 + b;
      const bool is_active = cache.active.empty() || cache.active[r] != 0;
      const double* dhr = d_h.data() + r * hd;
      for (std::size_t i = 0; i < hd; ++i) d[i] = dhr[i] + dh_carry(b, i);
      if (!is_active) {
        held[b] = 1;
        std::copy(d.begin(), d.end(), dh_prev.row(b).begin());
        continue;  // dc_carry passes through unchanged
      }
      const double* a = cache.a.data() + r * gh;
      const double* u = cache.u.data() + r * gh;
      if (!lstm) {
        const double* h = cache.h.data() + r * hd;
        for (std::size_t i = 0; i < hd; ++i) dpre[i] = d[i] * (1.0 - h[i] * h[i]);
      } else {
        const double* g = cache.gates.data() + r * gh;
        const double* tc = cache.tanh_c.data() + r * hd;
        const double* cp = cache.c_prev.data() + r * hd;
        for (std::size_t i = 0; i < hd; ++i) {
          const double ig = g[i];
          const double fg = g[hd + i];
          const double cg = g[2 * hd + i];
          const double og = g[3 * hd + i];
          const double d_o = d[i] * tc[i];
          const double dc = dc_carry(b, i) + d[i] * og * (1.0 - tc[i] * tc[i]);
          const double d_i = dc * cg;
          const double d_g = dc * ig;
          const double d_f = dc * cp[i];
          dc_carry(b, i) = dc * fg;
          dpre[i] = d_i * ig * (1.0 - ig);
          dpre[hd + i] = d_f * fg * (1.0 - fg);
          dpre[2 * hd + i] = d_g * (1.0 - cg * cg);
          dpre[3 * hd + i] = d_o * og * (1.0 - og);
        }
      }
      double* du = d_u.data() + r * gh;
      double* da = d_a.data() + r * gh;
      for (std::size_t j = 0; j < gh; ++j) {
        out.d_rho += dpre[j] * a[j];
        out.d_gamma += dpre[j] * u[j];
        du[j] = gamma * dpre[j];
        da[j] = rho * dpre[j];
      }
      if (lstm) {
        for (std::size_t j = 0; j < gh; ++j) d_bias[j] += dpre[j];
      }
    }
    // dh_prev = (rho * dpre) W_res for active rows; held rows pass d through.
    Matrix recur(batch, hd);
    gemm_acc(d_a.data() + r0 * gh, w.w_res->data(), recur.data(), batch, gh, hd);
    for (std::size_t b = 0; b < batch; ++b) {
      if (held[b]) continue;
      std::copy(recur.row(b).begin(), recur.row(b).end(), dh_prev.row(b).begin());
    }
    dh_carry = dh_prev;
  }

  if (request.initial_state) {
    out.d_h0 = dh_carry;
    if (lstm) out.d_c0 = dc_carry;
  }
  if (request.input) {
    out.d_x = Matrix(rows, cache.input);
    gemm_acc(d_u.data(), w.w_in->data(), out.d_x.data(), rows, gh, cache.input);
  }
  if (request.weights) {
    const Matrix d_u_t = transpose(d_u);
    const Matrix d_a_t = transpose(d_a);
    out.d_w_in = Matrix(gh, cache.input);
    gemm_acc(d_u_t.data(), cache.x.data(), out.d_w_in.data(), gh, rows, cache.input);
    out.d_w_res = Matrix(gh, hd);
    gemm_acc(d_a_t.data(), cache.h_prev.data(), out.d_w_res.data(), gh, rows, hd);
    if (lstm) out.d_bias = Matrix(gh, 1, std::move(d_bias));
  }
  if (!request.scaling) {
    out.d_rho = 0.0;
    out.d_gamma = 0.0;
  }
  return out;
}

void recurrent_step_rows(const RecurrentWeights& w, const Matrix& w_res_t, const Matrix& u,
                         const Matrix& h_prev, const Matrix& c_prev, Matrix& h_out,
                         Matrix& c_out) {
  check_weights(w);
  const std::size_t hd = w.hidden();
  const std::size_t gh = w.gates() * hd;
  const std::size_t rows = h_prev.rows();
  Matrix a(rows, gh);
  gemm_acc(h_prev.data(), w_res_t.data(), a.data(), rows, hd, gh);
  h_out = Matrix(rows, hd);
  if (w.cell == CellType::lstm) {
    c_out = Matrix(rows, hd);
    Matrix gates(rows, gh);
    Matrix tanh_c(rows, hd);
    cell_rows(w, rows, a.data(), u.data(), c_prev.data(), h_out.data(), c_out.data(),
              gates.data(), tanh_c.data(), 0);
  } else {
    cell_rows(w, rows, a.data(), u.data(), nullptr, h_out.data(), nullptr, nullptr, nullptr, 0);
  }
}

namespace {

EsnStepResult single_step(const RecurrentWeights& w, const EsnLayerState& state,
                          std::span<const double> x) {
  const std::size_t hd = w.hidden();
  if (x.size() != w.input()) {
    throw DimensionError("layer " + w.name + ": input length " + std::to_string(x.size()) +
                         " but W_in has " + std::to_string(w.input()) + " columns");
  }
  if (state.h.size() != hd) {
    throw DimensionError("layer " + w.name + ": state length " + std::to_string(state.h.size()) +
                         " but hidden size is " + std::to_string(hd));
  }
  const bool lstm = w.cell == CellType::lstm;
  Matrix xm(1, x.size(), Vector(x.begin(), x.end()));
  Matrix h0(1, hd, state.h);
  Matrix c0(1, hd, lstm ? (state.c.empty() ? Vector(hd, 0.0) : state.c) : Vector(hd, 0.0));
  EsnStepResult res;
  res.cache.seq = recurrent_forward(w, xm, 1, {}, false, &h0, &c0);
  res.state.h.assign(res.cache.seq.h.values().begin(), res.cache.seq.h.values().end());
  if (lstm) res.state.c.assign(res.cache.seq.c.values().begin(), res.cache.seq.c.values().end());
  res.output = res.state.h;
  return res;
}

EsnStepGrads single_backward(const RecurrentWeights& w, const EsnStepCache& cache,
                             std::span<const double> d_h, std::span<const double> d_c) {
  const std::size_t hd = w.hidden();
  if (cache.seq.steps != 1 || cache.seq.batch != 1 || d_h.size() != hd) {
    throw std::invalid_argument("layer " + w.name + ": step cache does not match gradient");
  }
  Matrix dh(1, hd, Vector(d_h.begin(), d_h.end()));
  Matrix dc;
  const Matrix* dc_ptr = nullptr;
  if (!d_c.empty()) {
    if (d_c.size() != hd) throw DimensionError("layer " + w.name + ": cell gradient length");
    dc = Matrix(1, hd, Vector(d_c.begin(), d_c.end()));
    dc_ptr = &dc;
  }
  RecurrentGradRequest req;
  req.input = true;
  req.scaling = true;
  req.weights = false;
  req.initial_state = true;
  RecurrentGrads g = recurrent_backward(w, cache.seq, dh, req, dc_ptr);
  EsnStepGrads out;
  out.d_h_prev.assign(g.d_h0.values().begin(), g.d_h0.values().end());
  if (w.cell == CellType::lstm) out.d_c_prev.assign(g.d_c0.values().begin(), g.d_c0.values().end());
  out.d_x.assign(g.d_x.values().begin(), g.d_x.values().end());
  out.d_rho = g.d_rho;
  out.d_gamma = g.d_gamma;
  return out;
}

}  // namespace

EsnStepResult esn_step(const EsnLayerState& state, std::span<const double> x,
                       const Matrix& w_res, const Matrix& w_in, ScalingFactors s,
                       const std::string& layer) {
  RecurrentWeights w{CellType::simple_rnn, &w_res, &w_in, nullptr, s, layer};
  return single_step(w, state, x);
}

EsnStepGrads esn_step_backward(const EsnStepCache& cache, const Matrix& w_res,
                               const Matrix& w_in, ScalingFactors s,
                               std::span<const double> d_h) {
  RecurrentWeights w{CellType::simple_rnn, &w_res, &w_in, nullptr, s, "esn"};
  return single_backward(w, cache, d_h, {});
}

EsnStepResult esn_lstm_step(const EsnLayerState& state, std::span<const double> x,
                            const Matrix& w_res, const Matrix& w_in,
                            std::span<const double> bias, ScalingFactors s,
                            const std::string& layer) {
  const Matrix b = Matrix::column(bias);
  RecurrentWeights w{CellType::lstm, &w_res, &w_in, &b, s, layer};
  return single_step(w, state, x);
}

EsnStepGrads esn_lstm_step_backward(const EsnStepCache& cache, const Matrix& w_res,
                                    const Matrix& w_in, std::span<const double> bias,
                                    ScalingFactors s, std::span<const double> d_h,
                                    std::span<const double> d_c) {
  const Matrix b = Matrix::column(bias);
  RecurrentWeights w{CellType::lstm, &w_res, &w_in, &b, s, "esn_lstm"};
  return single_backward(w, cache, d_h, d_c);
}

Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix* b) {
  if (x.cols() != w.cols()) {
    throw DimensionError("affine: input " + x.shape_string() + " vs weight " + w.shape_string());
  }
  const Matrix w_t = transpose(w);
  Matrix y(x.rows(), w.rows());
  gemm_acc(x.data(), w_t.data(), y.data(), x.rows(), x.cols(), w.rows());
  if (b != nullptr) {
    if (b->size() != w.rows()) throw DimensionError("affine: bias length mismatch");
    for (std::size_t r = 0; r < y.rows(); ++r) {
      auto row = y.row(r);
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += b->data()[j];
    }
  }
  return y;
}

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& d_y, bool want_dx,
                            bool want_params, bool has_bias) {
  if (d_y.rows() != x.rows() || d_y.cols() != w.rows()) {
    throw DimensionError("affine backward: gradient " + d_y.shape_string() + " for input " +
                         x.shape_string() + " and weight " + w.shape_string());
  }
  AffineGrads g;
  if (want_dx) {
    g.d_x = Matrix(x.rows(), x.cols());
    gemm_acc(d_y.data(), w.data(), g.d_x.data(), d_y.rows(), d_y.cols(), w.cols());
  }
  if (want_params) {
    const Matrix d_y_t = transpose(d_y);
    g.d_w = Matrix(w.rows(), w.cols());
    gemm_acc(d_y_t.data(), x.data(), g.d_w.data(), w.rows(), x.rows(), w.cols());
    if (has_bias) {
      g.d_b = Matrix(w.rows(), 1);
      for (std::size_t r = 0; r < d_y.rows(); ++r) {
        for (std::size_t j = 0; j < d_y.cols(); ++j) g.d_b.data()[j] += d_y(r, j);
      }
    }
  }
  return g;
}

Matrix embed(const Matrix& table, std::span<const TokenId> ids) {
  Matrix out(ids.size(), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const TokenId id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(table.rows()));
    }
    auto src = table.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

void embed_backward(const Matrix& d_out, std::span<const TokenId> ids, Matrix& d_table) {
  if (d_out.rows() != ids.size() || d_out.cols() != d_table.cols()) {
    throw DimensionError("embed backward: gradient " + d_out.shape_string() + " for " +
                         std::to_string(ids.size()) + " ids into " + d_table.shape_string());
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto dst = d_table.row(static_cast<std::size_t>(ids[i]));
    auto src = d_out.row(i);
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
  }
}

Matrix project_logits(const Matrix& hidden, const Matrix& weight, const Matrix& bias) {
  return affine_forward(hidden, weight, &bias);
}

ProjectionGrads project_logits_backward(const Matrix& hidden, const Matrix& weight,
                                        const Matrix& d_logits) {
  AffineGrads g = affine_backward(hidden, weight, d_logits, true, true, true);
  return {std::move(g.d_x), std::move(g.d_w), std::move(g.d_b)};
}

void require_finite(const Matrix& m, const std::string& where) {
  if (!m.all_finite()) throw NumericalError("non-finite values in " + where);
}

}  // namespace esnmt
