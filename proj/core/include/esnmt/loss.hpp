#pragma once

#include <span>

#include "esnmt/layers.hpp"
#include "esnmt/tensor.hpp"

namespace esnmt {

struct LossResult {
  double loss = 0.0;
  Matrix d_logits;  // gradient of `loss` w.r.t. the logits
  std::size_t tokens = 0;
};

// Mean over non-pad positions of (1 - eps) * NLL + eps * KL(uniform || p).
LossResult smoothed_cross_entropy(const Matrix& logits, std::span<const TokenId> targets,
                                  double epsilon, TokenId pad = kPadId);

}  // namespace esnmt
