#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "esnmt/params.hpp"

namespace esnmt {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Decoupled: p -= lr * weight_decay * p alongside the moment step.
  double weight_decay = 0.0;
};

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;

  std::uint64_t allocated_entries() const;
};

// grads must hold exactly the trainable tensors of `params`.
void apply_update(ParameterStore& params, const GradientSet& grads, AdamState& state, double lr,
                  const AdamConfig& config);

// Rescales so the global norm is at most max_norm; returns the norm before clipping.
double clip_gradients(GradientSet& grads, double max_norm);

// Linear warmup to `base` over `warmup` steps, then base * sqrt(warmup / step).
double scheduled_learning_rate(double base, std::uint64_t warmup, std::uint64_t step);

}  // namespace esnmt
