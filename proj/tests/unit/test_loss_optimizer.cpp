#include <gtest/gtest.h>

#include <cmath>

#include "esnmt/loss.hpp"
#include "esnmt/optimizer.hpp"

namespace esnmt {
namespace {

TEST(Loss, HandComputedSmoothedCrossEntropy) {
  // Row 0: logits (0, ln 2, 0) -> p = (1/4, 1/2, 1/4), target 1.
  // Row 1 is padding and ignored.
  const Matrix logits{{0.0, std::log(2.0), 0.0}, {5.0, -1.0, 2.0}};
  const std::vector<TokenId> targets{1, kPadId};
  const double eps = 0.1;
  const auto r = smoothed_cross_entropy(logits, targets, eps);
  const double nll = std::log(2.0);
  const double kl = (1.0 / 3.0) * (3.0 * std::log(1.0 / 3.0) - std::log(0.25) - std::log(0.5) -
                                   std::log(0.25));
  EXPECT_NEAR(r.loss, (1 - eps) * nll + eps * kl, 1e-15);
  EXPECT_EQ(r.tokens, 1u);
  EXPECT_NEAR(r.d_logits(0, 0), 0.25 - eps / 3, 1e-15);
  EXPECT_NEAR(r.d_logits(0, 1), 0.5 - (1 - eps) - eps / 3, 1e-15);
  EXPECT_EQ(r.d_logits(1, 0), 0.0);
}

TEST(Loss, NoSmoothingIsPlainNll) {
  const Matrix logits{{1.0, 2.0}, {0.5, 0.5}};
  const std::vector<TokenId> targets{0, 1};
  const auto r = smoothed_cross_entropy(logits, targets, 0.0, /*pad=*/-1);
  const double l0 = -(1.0 - std::log(std::exp(1.0) + std::exp(2.0)));
  EXPECT_NEAR(r.loss, (l0 + std::log(2.0)) / 2.0, 1e-15);
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  Matrix logits{{0.3, -1.2, 0.8, 0.1}, {2.0, 0.0, -0.5, 1.0}, {0.0, 0.1, 0.2, 0.3}};
  const std::vector<TokenId> targets{2, 1, 3};
  const auto r = smoothed_cross_entropy(logits, targets, 0.2);
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double old = logits.data()[i];
    logits.data()[i] = old + 1e-6;
    const double up = smoothed_cross_entropy(logits, targets, 0.2).loss;
    logits.data()[i] = old - 1e-6;
    const double down = smoothed_cross_entropy(logits, targets, 0.2).loss;
    logits.data()[i] = old;
    EXPECT_NEAR(r.d_logits.data()[i], (up - down) / 2e-6, 1e-9);
  }
}

TEST(Loss, RejectsBadInput) {
  const Matrix logits{{0.0, 1.0}};
  EXPECT_THROW(smoothed_cross_entropy(logits, std::vector<TokenId>{1}, 1.0), std::invalid_argument);
  EXPECT_THROW(smoothed_cross_entropy(logits, std::vector<TokenId>{kPadId}, 0.1),
               std::invalid_argument);
  EXPECT_THROW(smoothed_cross_entropy(logits, std::vector<TokenId>{5}, 0.1), std::out_of_range);
}

ParameterStore one_param(double x, bool second_frozen = false) {
  std::vector<Tensor> t;
  t.push_back({{"w", 1, 1}, Matrix(1, 1, x), true});
  if (second_frozen) t.push_back({{"frozen", 1, 1}, Matrix(1, 1, 3.0), false});
  return ParameterStore(std::move(t));
}

TEST(Adam, TwoStepsByHand) {
  ParameterStore p = one_param(1.0);
  AdamState st;
  const AdamConfig cfg{0.9, 0.999, 1e-8, 0.01};
  const double lr = 0.1;

  apply_update(p, {{"w", Matrix(1, 1, 0.5)}}, st, lr, cfg);
  // m = 0.05, v = 0.00025, mhat = 0.5, vhat = 0.25.
  double x = 1.0 - lr * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0);
  EXPECT_DOUBLE_EQ(p.value("w")(0, 0), x);

  apply_update(p, {{"w", Matrix(1, 1, -0.25)}}, st, lr, cfg);
  const double m = 0.9 * 0.05 + 0.1 * -0.25;
  const double v = 0.999 * 0.00025 + 0.001 * 0.0625;
  const double mhat = m / (1 - 0.81);
  const double vhat = v / (1 - 0.999 * 0.999);
  x = x - lr * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * x);
  EXPECT_NEAR(p.value("w")(0, 0), x, 1e-15);
  EXPECT_EQ(st.step, 2u);
  EXPECT_EQ(st.allocated_entries(), 2u);
}

TEST(Adam, RefusesGradientsOfFrozenOrMissingTensors) {
  ParameterStore p = one_param(1.0, true);
  AdamState st;
  EXPECT_THROW(apply_update(p, {}, st, 0.1, {}), std::invalid_argument);
  EXPECT_THROW(apply_update(p, {{"w", Matrix(1, 1, 1.0)}, {"frozen", Matrix(1, 1, 1.0)}}, st, 0.1,
                            {}),
               std::invalid_argument);
  apply_update(p, {{"w", Matrix(1, 1, 1.0)}}, st, 0.1, {});
  EXPECT_EQ(p.value("frozen")(0, 0), 3.0);
  EXPECT_FALSE(st.m.count("frozen"));
}

TEST(Clip, ScalesToMaxNormOnlyWhenAbove) {
  GradientSet g{{"a", Matrix{{3.0}}}, {"b", Matrix{{4.0}}}};
  EXPECT_DOUBLE_EQ(clip_gradients(g, 10.0), 5.0);
  EXPECT_EQ(g["a"](0, 0), 3.0);
  EXPECT_DOUBLE_EQ(clip_gradients(g, 1.0), 5.0);
  EXPECT_NEAR(g["a"](0, 0), 0.6, 1e-15);
  EXPECT_NEAR(g["b"](0, 0), 0.8, 1e-15);
  EXPECT_NEAR(global_norm(g), 1.0, 1e-15);
  EXPECT_THROW(clip_gradients(g, 0.0), std::invalid_argument);
}

TEST(Schedule, WarmupThenInverseSqrt) {
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(1.0, 100, 50), 0.5);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(1.0, 100, 100), 1.0);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(1.0, 100, 400), 0.5);
  EXPECT_DOUBLE_EQ(scheduled_learning_rate(2.0, 0, 7), 2.0);
}

}  // namespace
}  // namespace esnmt
