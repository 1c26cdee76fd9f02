#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "esnmt/layers.hpp"
#include "esnmt/reservoir.hpp"
#include "esnmt/rng.hpp"

namespace esnmt {
namespace {

double central_diff(const std::function<double()>& f, double& x, double eps = 1e-6) {
  const double old = x;
  x = old + eps;
  const double up = f();
  x = old - eps;
  const double down = f();
  x = old;
  return (up - down) / (2.0 * eps);
}

TEST(EsnStep, HandComputedTwoByTwo) {
  const Matrix w_res{{0.5, -0.25}, {0.1, 0.2}};
  const Matrix w_in{{1.0, 0.0, -1.0}, {0.5, 0.5, 0.5}};
  EsnLayerState s{{0.2, -0.4}, {}};
  const Vector x{0.1, 0.2, 0.3};
  const auto r = esn_step(s, x, w_res, w_in, {0.9, 2.0});
  EXPECT_NEAR(r.output[0], std::tanh(0.9 * (0.1 + 0.1) + 2.0 * (0.1 - 0.3)), 1e-15);
  EXPECT_NEAR(r.output[1], std::tanh(0.9 * (0.02 - 0.08) + 2.0 * 0.3), 1e-15);
  EXPECT_EQ(r.output, r.state.h);
}

TEST(EsnStep, ZeroRhoIsMemoryless) {
  Rng rng(1, "t");
  const Matrix w_res = seeded_uniform(rng, 4, 4, -1, 1);
  const Matrix w_in = seeded_uniform(rng, 4, 3, -1, 1);
  const Vector x{0.3, -0.2, 0.9};
  const auto a = esn_step({{1, 1, 1, 1}, {}}, x, w_res, w_in, {0.0, 1.0});
  const auto b = esn_step({{-1, 0.5, 0, 2}, {}}, x, w_res, w_in, {0.0, 1.0});
  EXPECT_EQ(a.output, b.output);
}

TEST(EsnStep, GradientsMatchFiniteDifferences) {
  Rng rng(2, "t");
  const Matrix w_res = seeded_uniform(rng, 5, 5, -1, 1);
  const Matrix w_in = seeded_uniform(rng, 5, 3, -1, 1);
  Vector h{0.1, -0.3, 0.2, 0.4, -0.1};
  Vector x{0.2, -0.5, 0.3};
  ScalingFactors s{0.8, 1.3};
  const Vector w{0.3, -1.0, 0.5, 0.7, 0.2};
  auto loss = [&] {
    const auto r = esn_step({h, {}}, x, w_res, w_in, s);
    double l = 0;
    for (std::size_t i = 0; i < 5; ++i) l += w[i] * r.output[i];
    return l;
  };
  const auto r = esn_step({h, {}}, x, w_res, w_in, s);
  const auto g = esn_step_backward(r.cache, w_res, w_in, s, w);
  EXPECT_NEAR(g.d_rho, central_diff(loss, s.rho), 1e-8);
  EXPECT_NEAR(g.d_gamma, central_diff(loss, s.gamma), 1e-8);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g.d_h_prev[i], central_diff(loss, h[i]), 1e-8);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.d_x[i], central_diff(loss, x[i]), 1e-8);
}

TEST(EsnStep, GammaGradientVanishesAtZeroInput) {
  Rng rng(3, "t");
  const Matrix w_res = seeded_uniform(rng, 3, 3, -1, 1);
  const Matrix w_in = seeded_uniform(rng, 3, 2, -1, 1);
  const auto r = esn_step({{0.5, -0.5, 0.1}, {}}, Vector{0.0, 0.0}, w_res, w_in, {1.0, 10.0});
  const auto g = esn_step_backward(r.cache, w_res, w_in, {1.0, 10.0}, Vector{1.0, 1.0, 1.0});
  EXPECT_EQ(g.d_gamma, 0.0);
}

TEST(EsnStep, NonFiniteNamesTheLayer) {
  const Matrix w_res{{1.0}};
  const Matrix w_in{{1.0}};
  try {
    esn_step({{0.0}, {}}, Vector{1.0}, w_res, w_in, {1.0, std::numeric_limits<double>::infinity()},
             "decoder.2");
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("decoder.2"), std::string::npos);
  }
}

TEST(EsnLstmStep, GradientsMatchFiniteDifferences) {
  Rng rng(4, "t");
  const std::size_t hd = 3, k = 2;
  const Matrix w_res = seeded_uniform(rng, 4 * hd, hd, -1, 1);
  const Matrix w_in = seeded_uniform(rng, 4 * hd, k, -1, 1);
  Vector bias(4 * hd);
  for (auto& b : bias) b = rng.uniform(-0.5, 0.5);
  Vector h{0.1, -0.2, 0.3}, c{0.5, -0.1, 0.2}, x{0.4, -0.6};
  ScalingFactors s{0.9, 1.5};
  const Vector wh{0.2, -0.7, 1.1}, wc{0.4, 0.3, -0.5};
  auto loss = [&] {
    const auto r = esn_lstm_step({h, c}, x, w_res, w_in, bias, s);
    double l = 0;
    for (std::size_t i = 0; i < hd; ++i) l += wh[i] * r.state.h[i] + wc[i] * r.state.c[i];
    return l;
  };
  const auto r = esn_lstm_step({h, c}, x, w_res, w_in, bias, s);
  const auto g = esn_lstm_step_backward(r.cache, w_res, w_in, bias, s, wh, wc);
  EXPECT_NEAR(g.d_rho, central_diff(loss, s.rho), 1e-8);
  EXPECT_NEAR(g.d_gamma, central_diff(loss, s.gamma), 1e-8);
  for (std::size_t i = 0; i < hd; ++i) {
    EXPECT_NEAR(g.d_h_prev[i], central_diff(loss, h[i]), 1e-8);
    EXPECT_NEAR(g.d_c_prev[i], central_diff(loss, c[i]), 1e-8);
  }
  for (std::size_t i = 0; i < k; ++i) EXPECT_NEAR(g.d_x[i], central_diff(loss, x[i]), 1e-8);
}

// Sequence kernel with padding, reverse order and weight gradients.
class RecurrentSequence : public ::testing::TestWithParam<std::tuple<CellType, bool>> {};

TEST_P(RecurrentSequence, AllGradientsMatchFiniteDifferences) {
  const auto [cell, reverse] = GetParam();
  const std::size_t gates = gate_count(cell), hd = 3, k = 2, steps = 4, batch = 2;
  Rng rng(5, "seq");
  Matrix w_res = seeded_uniform(rng, gates * hd, hd, -1, 1);
  Matrix w_in = seeded_uniform(rng, gates * hd, k, -1, 1);
  Matrix bias = seeded_uniform(rng, gates * hd, 1, -0.5, 0.5);
  Matrix x = seeded_uniform(rng, steps * batch, k, -1, 1);
  const Matrix probe = seeded_uniform(rng, steps * batch, hd, -1, 1);
  std::vector<std::uint8_t> active(steps * batch, 1);
  active[3 * batch + 1] = 0;  // sequence 1 has length 3
  RecurrentWeights w{cell, &w_res, &w_in, cell == CellType::lstm ? &bias : nullptr, {0.7, 1.2},
                     "seq"};
  auto loss = [&] {
    const auto cache = recurrent_forward(w, x, batch, active, reverse);
    double l = 0;
    for (std::size_t i = 0; i < probe.size(); ++i) l += probe.data()[i] * cache.h.data()[i];
    return l;
  };
  const auto cache = recurrent_forward(w, x, batch, active, reverse);
  const auto g = recurrent_backward(w, cache, probe, {true, true, true, false});
  EXPECT_NEAR(g.d_rho, central_diff(loss, w.scale.rho), 1e-7);
  EXPECT_NEAR(g.d_gamma, central_diff(loss, w.scale.gamma), 1e-7);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(g.d_x.data()[i], central_diff(loss, x.data()[i]), 1e-7) << "x" << i;
  }
  for (std::size_t i = 0; i < w_res.size(); ++i) {
    EXPECT_NEAR(g.d_w_res.data()[i], central_diff(loss, w_res.data()[i]), 1e-7) << "res" << i;
  }
  for (std::size_t i = 0; i < w_in.size(); ++i) {
    EXPECT_NEAR(g.d_w_in.data()[i], central_diff(loss, w_in.data()[i]), 1e-7) << "in" << i;
  }
  if (cell == CellType::lstm) {
    for (std::size_t i = 0; i < bias.size(); ++i) {
      EXPECT_NEAR(g.d_bias.data()[i], central_diff(loss, bias.data()[i]), 1e-7) << "b" << i;
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Cells, RecurrentSequence,
                         ::testing::Combine(::testing::Values(CellType::simple_rnn, CellType::lstm),
                                            ::testing::Bool()));

TEST(RecurrentSequence, ReversePassHoldsStateOverPadding) {
  const Matrix w_res{{0.5}};
  const Matrix w_in{{1.0}};
  RecurrentWeights w{CellType::simple_rnn, &w_res, &w_in, nullptr, {1.0, 1.0}, "rev"};
  // Two sequences; the second has length 1, so its reverse pass starts at t=0.
  const Matrix x{{0.3}, {0.7}, {0.2}, {0.0}};
  const std::vector<std::uint8_t> active{1, 1, 1, 0};
  const auto c = recurrent_forward(w, x, 2, active, true);
  EXPECT_EQ(c.h(3, 0), 0.0);  // padding before the sequence starts holds h0
  EXPECT_NEAR(c.h(1, 0), std::tanh(0.7), 1e-15);
  const double last = std::tanh(0.2);
  EXPECT_NEAR(c.h(2, 0), last, 1e-15);
  EXPECT_NEAR(c.h(0, 0), std::tanh(0.5 * last + 0.3), 1e-15);
}

TEST(RecurrentSequence, ForwardMatchesSingleStepApi) {
  Rng rng(6, "steps");
  const Matrix w_res = seeded_uniform(rng, 4, 4, -1, 1);
  const Matrix w_in = seeded_uniform(rng, 4, 2, -1, 1);
  const Matrix x = seeded_uniform(rng, 5, 2, -1, 1);
  RecurrentWeights w{CellType::simple_rnn, &w_res, &w_in, nullptr, {0.9, 3.0}, "s"};
  const auto c = recurrent_forward(w, x, 1, {}, false);
  EsnLayerState s{Vector(4, 0.0), {}};
  for (std::size_t t = 0; t < 5; ++t) {
    s = esn_step(s, x.row(t), w_res, w_in, w.scale).state;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.h[i], c.h(t, i));
  }
}

// Two random initial states under the same 50-step input, rho = 0.9, gamma = 1.
TEST(EchoState, ContractsAtRhoPointNine) {
  ReservoirSpec spec;
  spec.hidden_dim = 64;
  spec.input_dim = 8;
  spec.seed = 99;
  const auto layer = generate_layer(spec, recurrent_layout(spec)[0]);
  const Matrix w_res = layer.w_res.to_dense();
  const Matrix w_in = layer.w_in.to_dense();
  Rng rng(99, "esp");
  EsnLayerState a{Vector(64), {}}, b{Vector(64), {}};
  for (auto& v : a.h) v = rng.uniform(-1, 1);
  for (auto& v : b.h) v = rng.uniform(-1, 1);
  auto dist = [](const Vector& p, const Vector& q) {
    double s = 0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - q[i]) * (p[i] - q[i]);
    return std::sqrt(s);
  };
  const double d0 = dist(a.h, b.h);
  for (int t = 0; t < 50; ++t) {
    Vector x(8);
    for (auto& v : x) v = rng.uniform(-1, 1);
    a = esn_step(a, x, w_res, w_in, {0.9, 1.0}).state;
    b = esn_step(b, x, w_res, w_in, {0.9, 1.0}).state;
  }
  EXPECT_LT(dist(a.h, b.h), 1e-3 * d0);
}

TEST(Dense, AffineAndProjectionGradients) {
  Rng rng(7, "dense");
  Matrix x = seeded_uniform(rng, 3, 4, -1, 1);
  Matrix w = seeded_uniform(rng, 2, 4, -1, 1);
  Matrix b = seeded_uniform(rng, 2, 1, -1, 1);
  const Matrix probe = seeded_uniform(rng, 3, 2, -1, 1);
  auto loss = [&] {
    const Matrix y = affine_forward(x, w, &b);
    double l = 0;
    for (std::size_t i = 0; i < y.size(); ++i) l += probe.data()[i] * y.data()[i];
    return l;
  };
  const auto g = affine_backward(x, w, probe, true, true, true);
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(g.d_x.data()[i], central_diff(loss, x.data()[i]), 1e-9);
  }
  for (std::size_t i = 0; i < w.size(); ++i) {
    EXPECT_NEAR(g.d_w.data()[i], central_diff(loss, w.data()[i]), 1e-9);
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_NEAR(g.d_b.data()[i], central_diff(loss, b.data()[i]), 1e-9);
  }
  const auto pg = project_logits_backward(x, w, probe);
  EXPECT_TRUE(bit_equal(project_logits(x, w, b), affine_forward(x, w, &b)));
  EXPECT_LT(max_abs_diff(pg.d_weight, g.d_w), 1e-15);
}

TEST(Dense, EmbedScatterAddsRepeatedIds) {
  const Matrix table{{0, 0}, {1, 2}, {3, 4}};
  const std::vector<TokenId> ids{2, 1, 2};
  const Matrix e = embed(table, ids);
  EXPECT_TRUE(bit_equal(e, Matrix{{3, 4}, {1, 2}, {3, 4}}));
  Matrix d(3, 2);
  embed_backward(Matrix{{1, 1}, {2, 2}, {10, 10}}, ids, d);
  EXPECT_TRUE(bit_equal(d, Matrix{{0, 0}, {2, 2}, {11, 11}}));
  EXPECT_THROW(embed(table, std::vector<TokenId>{3}), std::out_of_range);
}

}  // namespace
}  // namespace esnmt
