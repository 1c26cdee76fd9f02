#include "esnmt/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace esnmt {

LossResult smoothed_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  double epsilon, TokenId pad) {
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("label smoothing must lie in [0, 1), got " +
                                std::to_string(epsilon));
  }
  if (targets.size() != logits.rows()) {
    throw DimensionError("loss: " + std::to_string(targets.size()) + " targets for logits " +
                         logits.shape_string());
  }
  const std::size_t v = logits.cols();
  const double inv_v = 1.0 / static_cast<double>(v);
  const double log_v = std::log(static_cast<double>(v));

  LossResult out;
  for (TokenId t : targets) out.tokens += t != pad;
  if (out.tokens == 0) throw std::invalid_argument("loss: every target position is padding");
  out.d_logits = Matrix(logits.rows(), v);
  const double scale = 1.0 / static_cast<double>(out.tokens);

  double total = 0.0;
  Vector logp(v);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const TokenId y = targets[r];
    if (y == pad) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= v) {
      throw std::out_of_range("loss: target id " + std::to_string(y) + " outside vocabulary");
    }
    auto row = logits.row(r);
    double m = row[0];
    for (double x : row) m = std::max(m, x);
    double sum = 0.0;
    for (double x : row) sum += std::exp(x - m);
    const double lse = m + std::log(sum);
    double mean_logp = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      logp[j] = row[j] - lse;
      mean_logp += logp[j];
    }
    mean_logp *= inv_v;
    const double nll = -logp[static_cast<std::size_t>(y)];
    total += (1.0 - epsilon) * nll + epsilon * (-log_v - mean_logp);
    auto d = out.d_logits.row(r);
    for (std::size_t j = 0; j < v; ++j) {
      const double q = epsilon * inv_v + (j == static_cast<std::size_t>(y) ? 1.0 - epsilon : 0.0);
      d[j] = (std::exp(logp[j]) - q) * scale;
    }
  }
  out.loss = total * scale;
  return out;
}

}  // namespace esnmt
