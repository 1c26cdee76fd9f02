#pragma once

#include <cstdint>
#include <span>

#include "esnmt/tensor.hpp"

namespace esnmt {

// Additive attention: score(q, m) = v . tanh(W_q q + W_k m).
struct AttentionParams {
  const Matrix* query = nullptr;  // A x H
  const Matrix* key = nullptr;    // A x H
  const Matrix* score = nullptr;  // A x 1
};

// Queries are time-major rows t * batch + b (T steps), memory rows s * batch + b
// (S steps). src_valid has S * batch flags; 0 marks padding.
struct AttentionCache {
  std::size_t query_steps = 0;
  std::size_t memory_steps = 0;
  std::size_t batch = 0;
  Matrix queries;    // T*B x H
  Matrix memory;     // S*B x H
  Matrix q_proj;     // T*B x A
  Matrix keys;       // S*B x A
  Matrix hidden;     // (T*B*S) x A, tanh(q_proj + key); row (t*B+b)*S + s
  Matrix weights;    // T*B x S
  std::vector<std::uint8_t> src_valid;
};

struct AttentionResult {
  Matrix context;  // T*B x H
  AttentionCache cache;
};

AttentionResult attention_forward(const AttentionParams& p, const Matrix& queries,
                                  const Matrix& memory, std::size_t batch,
                                  std::span<const std::uint8_t> src_valid);

struct AttentionGrads {
  Matrix d_queries;
  Matrix d_memory;
  Matrix d_query_w;
  Matrix d_key_w;
  Matrix d_score;
};

AttentionGrads attention_backward(const AttentionParams& p, const AttentionCache& cache,
                                  const Matrix& d_context, bool want_params);

// Decode path: keys are computed once per source batch and reused every step.
Matrix attention_keys(const AttentionParams& p, const Matrix& memory);
// One decoder step for `batch` query rows; writes B x S weights when non-null.
Matrix attention_step(const AttentionParams& p, const Matrix& queries, const Matrix& keys,
                      const Matrix& memory, std::size_t batch,
                      std::span<const std::uint8_t> src_valid, Matrix* weights = nullptr);

// Single query against an S x H memory; mask has S entries. Returns the
// context and fills `weights` with S values.
Vector attend(const AttentionParams& p, std::span<const double> query, const Matrix& memory,
              std::span<const std::uint8_t> mask, Vector* weights = nullptr);

}  // namespace esnmt
