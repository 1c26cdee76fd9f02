#include "esnmt/attention.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "esnmt/layers.hpp"

namespace esnmt {

namespace {

void check_params(const AttentionParams& p, std::size_t hidden) {
  if (p.query == nullptr || p.key == nullptr || p.score == nullptr) {
    throw std::invalid_argument("attention: missing parameters");
  }
  const std::size_t a = p.query->rows();
  if (p.query->cols() != hidden || p.key->rows() != a || p.key->cols() != hidden ||
      p.score->size() != a) {
    throw DimensionError("attention: query " + p.query->shape_string() + ", key " +
                         p.key->shape_string() + ", score " + p.score->shape_string() +
                         " inconsistent with hidden size " + std::to_string(hidden));
  }
}

// Scores, softmax and context for one query row. `hidden_out` (S x A) may be
// null on the decode path.
void attend_row(const double* qp, const Matrix& keys, const Matrix& memory, std::size_t b,
                std::size_t batch, std::size_t steps, std::span<const std::uint8_t> valid,
                const double* v, double* hidden_out, double* weights, double* context) {
  const std::size_t a_dim = keys.cols();
  const std::size_t h_dim = memory.cols();
  double best = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t r = s * batch + b;
    if (!valid.empty() && valid[r] == 0) {
      weights[s] = 0.0;
      continue;
    }
    const double* k = keys.data() + r * a_dim;
    double e = 0.0;
    for (std::size_t j = 0; j < a_dim; ++j) {
      const double z = std::tanh(qp[j] + k[j]);
      if (hidden_out != nullptr) hidden_out[s * a_dim + j] = z;
      e += v[j] * z;
    }
    weights[s] = e;
    if (!any || e > best) best = e;
    any = true;
  }
  if (!any) throw std::invalid_argument("attention: every source position is masked");
  double total = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t r = s * batch + b;
    if (!valid.empty() && valid[r] == 0) continue;
    weights[s] = std::exp(weights[s] - best);
    total += weights[s];
  }
  for (std::size_t j = 0; j < h_dim; ++j) context[j] = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t r = s * batch + b;
    if (!valid.empty() && valid[r] == 0) continue;
    weights[s] /= total;
    const double w = weights[s];
    const double* m = memory.data() + r * h_dim;
    for (std::size_t j = 0; j < h_dim; ++j) context[j] += w * m[j];
  }
}

void check_memory(const Matrix& memory, std::size_t batch, std::span<const std::uint8_t> valid) {
  if (batch == 0 || memory.rows() == 0 || memory.rows() % batch != 0) {
    throw DimensionError("attention: memory " + memory.shape_string() +
                         " incompatible with batch " + std::to_string(batch));
  }
  if (!valid.empty() && valid.size() != memory.rows()) {
    throw DimensionError("attention: mask length " + std::to_string(valid.size()) +
                         " != memory length " + std::to_string(memory.rows()));
  }
}

}  // namespace

Matrix attention_keys(const AttentionParams& p, const Matrix& memory) {
  check_params(p, memory.cols());
  return affine_forward(memory, *p.key, nullptr);
}

AttentionResult attention_forward(const AttentionParams& p, const Matrix& queries,
                                  const Matrix& memory, std::size_t batch,
                                  std::span<const std::uint8_t> src_valid) {
  check_params(p, memory.cols());
  check_memory(memory, batch, src_valid);
  if (queries.cols() != memory.cols() || queries.rows() % batch != 0) {
    throw DimensionError("attention: queries " + queries.shape_string() + " vs memory " +
                         memory.shape_string());
  }
  const std::size_t steps = memory.rows() / batch;
  const std::size_t a_dim = p.query->rows();

  AttentionResult out;
  AttentionCache& c = out.cache;
  c.query_steps = queries.rows() / batch;
  c.memory_steps = steps;
  c.batch = batch;
  c.queries = queries;
  c.memory = memory;
  c.src_valid.assign(src_valid.begin(), src_valid.end());
  c.q_proj = affine_forward(queries, *p.query, nullptr);
  c.keys = affine_forward(memory, *p.key, nullptr);
  c.hidden = Matrix(queries.rows() * steps, a_dim);
  c.weights = Matrix(queries.rows(), steps);
  out.context = Matrix(queries.rows(), memory.cols());
  for (std::size_t r = 0; r < queries.rows(); ++r) {
    attend_row(c.q_proj.data() + r * a_dim, c.keys, memory, r % batch, batch, steps, src_valid,
               p.score->data(), c.hidden.data() + r * steps * a_dim, c.weights.data() + r * steps,
               out.context.data() + r * memory.cols());
  }
  return out;
}

Matrix attention_step(const AttentionParams& p, const Matrix& queries, const Matrix& keys,
                      const Matrix& memory, std::size_t batch,
                      std::span<const std::uint8_t> src_valid, Matrix* weights) {
  check_params(p, memory.cols());
  check_memory(memory, batch, src_valid);
  if (queries.rows() != batch) throw DimensionError("attention_step: one query row per sequence");
  const std::size_t steps = memory.rows() / batch;
  const std::size_t a_dim = p.query->rows();
  const Matrix q_proj = affine_forward(queries, *p.query, nullptr);
  Matrix w(batch, steps);
  Matrix context(batch, memory.cols());
  for (std::size_t b = 0; b < batch; ++b) {
    attend_row(q_proj.data() + b * a_dim, keys, memory, b, batch, steps, src_valid,
               p.score->data(), nullptr, w.data() + b * steps, context.data() + b * memory.cols());
  }
  if (weights != nullptr) *weights = std::move(w);
  return context;
}

AttentionGrads attention_backward(const AttentionParams& p, const AttentionCache& c,
                                  const Matrix& d_context, bool want_params) {
  check_params(p, c.memory.cols());
  const std::size_t rows = c.queries.rows();
  const std::size_t steps = c.memory_steps;
  const std::size_t batch = c.batch;
  const std::size_t a_dim = p.query->rows();
  const std::size_t h_dim = c.memory.cols();
  if (d_context.rows() != rows || d_context.cols() != h_dim) {
    throw DimensionError("attention backward: gradient " + d_context.shape_string() +
                         " does not match context of " + std::to_string(rows) + " rows");
  }
  const double* v = p.score->data();

  AttentionGrads g;
  g.d_memory = Matrix(c.memory.rows(), h_dim);
  Matrix d_qp(rows, a_dim);
  Matrix d_keys(c.memory.rows(), a_dim);
  Matrix d_v(a_dim, 1);
  Vector d_alpha(steps);

  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t b = r % batch;
    const double* alpha = c.weights.data() + r * steps;
    const double* dctx = d_context.data() + r * h_dim;
    double weighted = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t mr = s * batch + b;
      if (!c.src_valid.empty() && c.src_valid[mr] == 0) {
        d_alpha[s] = 0.0;
        continue;
      }
      const double* m = c.memory.data() + mr * h_dim;
      double* dm = g.d_memory.data() + mr * h_dim;
      double acc = 0.0;
      for (std::size_t j = 0; j < h_dim; ++j) {
        acc += dctx[j] * m[j];
        dm[j] += alpha[s] * dctx[j];
      }
      d_alpha[s] = acc;
      weighted += alpha[s] * acc;
    }
    double* dq = d_qp.data() + r * a_dim;
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t mr = s * batch + b;
      if (!c.src_valid.empty() && c.src_valid[mr] == 0) continue;
      const double de = alpha[s] * (d_alpha[s] - weighted);
      const double* z = c.hidden.data() + (r * steps + s) * a_dim;
      double* dk = d_keys.data() + mr * a_dim;
      for (std::size_t j = 0; j < a_dim; ++j) {
        d_v.data()[j] += de * z[j];
        const double dz = de * v[j] * (1.0 - z[j] * z[j]);
        dq[j] += dz;
        dk[j] += dz;
      }
    }
  }

  AffineGrads gq = affine_backward(c.queries, *p.query, d_qp, true, want_params, false);
  AffineGrads gk = affine_backward(c.memory, *p.key, d_keys, true, want_params, false);
  g.d_queries = std::move(gq.d_x);
  for (std::size_t i = 0; i < g.d_memory.size(); ++i) g.d_memory.data()[i] += gk.d_x.data()[i];
  if (want_params) {
    g.d_query_w = std::move(gq.d_w);
    g.d_key_w = std::move(gk.d_w);
    g.d_score = std::move(d_v);
  }
  return g;
}

Vector attend(const AttentionParams& p, std::span<const double> query, const Matrix& memory,
              std::span<const std::uint8_t> mask, Vector* weights) {
  if (memory.rows() == 0) throw std::invalid_argument("attention: empty memory");
  if (!mask.empty() && mask.size() != memory.rows()) {
    throw DimensionError("attention: mask length " + std::to_string(mask.size()) +
                         " != memory length " + std::to_string(memory.rows()));
  }
  if (query.size() != memory.cols()) {
    throw DimensionError("attention: query length " + std::to_string(query.size()) +
                         " != memory width " + std::to_string(memory.cols()));
  }
  const Matrix q(1, query.size(), Vector(query.begin(), query.end()));
  const Matrix keys = attention_keys(p, memory);
  Matrix w;
  const Matrix ctx = attention_step(p, q, keys, memory, 1, mask, &w);
  if (weights != nullptr) weights->assign(w.values().begin(), w.values().end());
  return Vector(ctx.values().begin(), ctx.values().end());
}

}  // namespace esnmt
