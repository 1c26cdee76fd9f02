#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "esnmt/architecture.hpp"
#include "esnmt/tensor.hpp"

namespace esnmt {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kBosId = 1;
inline constexpr TokenId kEosId = 2;
inline constexpr TokenId kUnkId = 3;

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Learnable per-layer scales of the reservoir (rho) and input matrix (gamma).
struct ScalingFactors {
  double rho = 1.0;
  double gamma = 10.0;
};

// ---------------------------------------------------------------------------
// Batched sequence kernels.
//
// Sequences are stored time-major: row t * batch + b holds step t of sequence
// b. A recurrent layer computes, for every step in processing order,
//
//   pre = rho * (W_res h_prev) + gamma * (W_in x_t) [+ bias]
//
// followed by tanh (simple cell) or the LSTM gate equations. Positions whose
// `active` flag is 0 hold the previous state unchanged, which lets a reverse
// pass start at each sequence's own last token under right padding.
// ---------------------------------------------------------------------------

struct RecurrentWeights {
  CellType cell = CellType::simple_rnn;
  const Matrix* w_res = nullptr;  // G*H x H
  const Matrix* w_in = nullptr;   // G*H x K
  const Matrix* bias = nullptr;   // G*H x 1, LSTM only
  ScalingFactors scale;
  std::string name;  // used in error messages

  std::size_t hidden() const { return w_res->cols(); }
  std::size_t input() const { return w_in->cols(); }
  std::size_t gates() const { return gate_count(cell); }
};

struct RecurrentCache {
  CellType cell = CellType::simple_rnn;
  std::size_t steps = 0;
  std::size_t batch = 0;
  std::size_t hidden = 0;
  std::size_t input = 0;
  bool reverse = false;
  std::vector<std::uint8_t> active;  // steps*batch, empty = all active
  Matrix x;       // steps*batch x K
  Matrix u;       // W_in x, unscaled
  Matrix a;       // W_res h_prev, unscaled
  Matrix h;       // output state per step
  Matrix h_prev;  // state entering each step
  Matrix c;       // LSTM cell state per step
  Matrix c_prev;
  Matrix gates;   // LSTM post-activation gates [i f g o]
  Matrix tanh_c;
};

struct RecurrentGradRequest {
  bool input = true;
  bool scaling = true;
  bool weights = false;
  bool initial_state = false;
};

struct RecurrentGrads {
  Matrix d_x;
  double d_rho = 0.0;
  double d_gamma = 0.0;
  Matrix d_w_res;
  Matrix d_w_in;
  Matrix d_bias;
  Matrix d_h0;
  Matrix d_c0;
};

// h0/c0 (batch x H) default to zeros.
RecurrentCache recurrent_forward(const RecurrentWeights& w, const Matrix& x, std::size_t batch,
                                 std::span<const std::uint8_t> active, bool reverse,
                                 const Matrix* h0 = nullptr, const Matrix* c0 = nullptr);

// d_h: gradient w.r.t. every output row of the cache; d_c_last optionally adds
// an upstream gradient on the final LSTM cell state (single-step use).
RecurrentGrads recurrent_backward(const RecurrentWeights& w, const RecurrentCache& cache,
                                  const Matrix& d_h, const RecurrentGradRequest& request,
                                  const Matrix* d_c_last = nullptr);

// One step of a batch of rows (decode path). u holds W_in x for the rows.
// Writes the new h (and c) and returns nothing else; arithmetic is identical
// to recurrent_forward for a single step.
void recurrent_step_rows(const RecurrentWeights& w, const Matrix& w_res_t, const Matrix& u,
                         const Matrix& h_prev, const Matrix& c_prev, Matrix& h_out,
                         Matrix& c_out);

// ---------------------------------------------------------------------------
// Single-step API.
// ---------------------------------------------------------------------------

struct EsnLayerState {
  Vector h;
  Vector c;  // LSTM only
};

struct EsnStepCache {
  RecurrentCache seq;
};

struct EsnStepResult {
  EsnLayerState state;
  Vector output;
  EsnStepCache cache;
};

struct EsnStepGrads {
  Vector d_h_prev;
  Vector d_c_prev;  // LSTM only
  Vector d_x;
  double d_rho = 0.0;
  double d_gamma = 0.0;
};

// h_t = tanh(rho * W_res h_prev + gamma * W_in x_t).
EsnStepResult esn_step(const EsnLayerState& state, std::span<const double> x,
                       const Matrix& w_res, const Matrix& w_in, ScalingFactors s,
                       const std::string& layer = "esn");

// Gradients for (h_prev, x_t, rho, gamma) only; W_res and W_in get none.
EsnStepGrads esn_step_backward(const EsnStepCache& cache, const Matrix& w_res,
                               const Matrix& w_in, ScalingFactors s,
                               std::span<const double> d_h);

// LSTM gates with every recurrent block scaled by rho and every input block by
// gamma. bias has 4H entries in gate order [input, forget, candidate, output].
EsnStepResult esn_lstm_step(const EsnLayerState& state, std::span<const double> x,
                            const Matrix& w_res, const Matrix& w_in,
                            std::span<const double> bias, ScalingFactors s,
                            const std::string& layer = "esn_lstm");

EsnStepGrads esn_lstm_step_backward(const EsnStepCache& cache, const Matrix& w_res,
                                    const Matrix& w_in, std::span<const double> bias,
                                    ScalingFactors s, std::span<const double> d_h,
                                    std::span<const double> d_c = {});

// ---------------------------------------------------------------------------
// Dense pieces.
// ---------------------------------------------------------------------------

// y = x W^T (+ b); x is N x K, w is M x K, b is M x 1.
Matrix affine_forward(const Matrix& x, const Matrix& w, const Matrix* b);

struct AffineGrads {
  Matrix d_x;
  Matrix d_w;
  Matrix d_b;
};

AffineGrads affine_backward(const Matrix& x, const Matrix& w, const Matrix& d_y, bool want_dx,
                            bool want_params, bool has_bias);

Matrix embed(const Matrix& table, std::span<const TokenId> ids);
// d_table += scatter of d_out rows onto ids.
void embed_backward(const Matrix& d_out, std::span<const TokenId> ids, Matrix& d_table);

Matrix project_logits(const Matrix& hidden, const Matrix& weight, const Matrix& bias);

struct ProjectionGrads {
  Matrix d_hidden;
  Matrix d_weight;
  Matrix d_bias;
};

ProjectionGrads project_logits_backward(const Matrix& hidden, const Matrix& weight,
                                        const Matrix& d_logits);

void require_finite(const Matrix& m, const std::string& where);

}  // namespace esnmt
