#include "esnmt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace esnmt {

std::uint64_t AdamState::allocated_entries() const {
  std::uint64_t n = 0;
  for (const auto& [name, x] : m) n += x.size();
  for (const auto& [name, x] : v) n += x.size();
  return n;
}

void apply_update(ParameterStore& params, const GradientSet& grads, AdamState& state, double lr,
                  const AdamConfig& config) {
  const auto trainable = params.trainable_names();
  for (const auto& name : trainable) {
    if (!grads.count(name)) throw std::invalid_argument("apply_update: no gradient for " + name);
  }
  if (grads.size() != trainable.size()) {
    for (const auto& [name, g] : grads) {
      if (!params.contains(name) || !params.at(params.index(name)).trainable) {
        throw std::invalid_argument("apply_update: gradient for non-trainable tensor " + name);
      }
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, g] : grads) {
    Matrix& p = params.value(name);
    require_same_shape(p, g, "apply_update");
    auto [mit, m_new] = state.m.try_emplace(name, p.rows(), p.cols());
    auto [vit, v_new] = state.v.try_emplace(name, p.rows(), p.cols());
    double* m = mit->second.data();
    double* v = vit->second.data();
    double* x = p.data();
    const double* d = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * d[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * d[i] * d[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      x[i] -= lr * (mhat / (std::sqrt(vhat) + config.epsilon) + config.weight_decay * x[i]);
    }
  }
}

double clip_gradients(GradientSet& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw std::invalid_argument("clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double s = max_norm / norm;
    for (auto& [name, g] : grads) g.scale(s);
  }
  return norm;
}

double scheduled_learning_rate(double base, std::uint64_t warmup, std::uint64_t step) {
  if (step == 0) step = 1;
  if (warmup == 0) return base;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(warmup);
  return step <= warmup ? base * s / w : base * std::sqrt(w / s);
}

}  // namespace esnmt
