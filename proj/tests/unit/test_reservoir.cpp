#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "esnmt/model.hpp"
#include "esnmt/reservoir.hpp"
#include "test_util.hpp"

namespace esnmt {
namespace {

double eigen_radius(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  }
  return Eigen::EigenSolver<Eigen::MatrixXd>(e, false).eigenvalues().cwiseAbs().maxCoeff();
}

ReservoirSpec spec(CellType cell, std::uint32_t h, double density = 0.75) {
  ReservoirSpec s;
  s.cell_type = cell;
  s.hidden_dim = h;
  s.input_dim = h / 2;
  s.num_encoder_layers = 2;
  s.num_decoder_layers = 2;
  s.density = density;
  s.seed = 123;
  return s;
}

TEST(Reservoir, LayoutOrder) {
  const auto slots = recurrent_layout(spec(CellType::simple_rnn, 8));
  std::vector<std::string> ids;
  for (const auto& s : slots) ids.push_back(s.id());
  EXPECT_EQ(ids, (std::vector<std::string>{"encoder.0.fwd", "encoder.0.bwd", "encoder.1",
                                           "decoder.0", "decoder.1"}));
  EXPECT_EQ(slots[2].input_dim, 8u);
  EXPECT_EQ(slots[3].input_dim, 4u);
  EXPECT_EQ(slots[4].input_dim, 16u);  // layer output joined with the context
}

TEST(Reservoir, SimpleRadiusIsNormalisedAndDensityExact) {
  const auto s = spec(CellType::simple_rnn, 64, 0.8);
  const auto set = generate_reservoirs(s);
  for (const auto& layer : set.layers) {
    EXPECT_NEAR(eigen_radius(layer.w_res.to_dense()), 1.0, 1e-6) << layer.slot.id();
    EXPECT_EQ(layer.w_res.nonzeros(), static_cast<std::size_t>(std::llround(0.8 * 64 * 64)));
    EXPECT_EQ(layer.w_in.nonzeros(),
              static_cast<std::size_t>(std::llround(0.8 * 64 * layer.slot.input_dim)));
    EXPECT_TRUE(layer.bias.empty());
    for (const auto& e : layer.w_in.entries()) {
      ASSERT_GE(e.value, -1.0);
      ASSERT_LT(e.value, 1.0);
    }
  }
}

TEST(Reservoir, LstmGateBlocksNormalisedSeparately) {
  auto s = spec(CellType::lstm, 32);
  s.radius_norm_target = 0.5;
  const auto layer = generate_layer(s, recurrent_layout(s)[0]);
  const Matrix dense = layer.w_res.to_dense();
  ASSERT_EQ(dense.rows(), 128u);
  for (std::size_t g = 0; g < 4; ++g) {
    EXPECT_NEAR(eigen_radius(gate_block(dense, g, 32)), 0.5, 1e-6) << g;
  }
  EXPECT_EQ(layer.bias.size(), 128u);
  EXPECT_EQ(layer.raw_radius.size(), 4u);
}

TEST(Reservoir, RegenerationIsBitIdentical) {
  const auto s = spec(CellType::lstm, 16);
  const auto a = generate_reservoirs(s);
  const auto b = generate_reservoirs(s);
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_TRUE(bit_equal(a.layers[i].w_res.to_dense(), b.layers[i].w_res.to_dense()));
    EXPECT_TRUE(bit_equal(a.layers[i].w_in.to_dense(), b.layers[i].w_in.to_dense()));
    EXPECT_EQ(a.layers[i].bias, b.layers[i].bias);
  }
  auto other = s;
  other.seed = 124;
  EXPECT_FALSE(bit_equal(a.layers[0].w_res.to_dense(),
                         generate_reservoirs(other).layers[0].w_res.to_dense()));
}

TEST(Reservoir, SlotsAreIndependentStreams) {
  const auto s = spec(CellType::simple_rnn, 16);
  const auto set = generate_reservoirs(s);
  EXPECT_FALSE(bit_equal(set.find("encoder.0.fwd").w_res.to_dense(),
                         set.find("encoder.0.bwd").w_res.to_dense()));
  EXPECT_THROW(set.find("encoder.9"), std::out_of_range);
}

TEST(Reservoir, PrunedBlockKeepsExactCount) {
  Rng v(1, "v"), p(1, "p");
  const Matrix m = draw_pruned_block(v, p, 10, 7, 0.75);
  std::size_t nz = 0;
  for (double x : m.values()) nz += x != 0.0;
  EXPECT_EQ(nz, 53u);  // round(0.75 * 70) = 52.5 -> 53
}

TEST(Reservoir, SpecValidation) {
  auto s = spec(CellType::simple_rnn, 8);
  s.density = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.density = 0.75;
  s.num_decoder_layers = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

// Hand count for 2+2 layers, width 8, vocab 10, attention 8, simple cells.
//   frozen: W_res 8x8 in 5 slots = 320; W_in 8x8 for encoder.0.fwd/bwd,
//   encoder.1, decoder.0 = 256, decoder.1 takes [h; context] -> 8x16 = 128.
//   trainable: embedding 10x8 = 80; rho, gamma per slot = 10; bidirectional
//   mix 8x16 + 8 = 136; attention query 64 + key 64 + score 8 = 136;
//   combine 8x16 + 8 = 136; output 10x8 + 10 = 90.
TEST(FrozenFraction, TinyConfigMatchesHandTally) {
  const auto cfg = testing::tiny_config();
  const auto tally = frozen_fraction(cfg.arch.reservoir, 10, 8);
  EXPECT_EQ(tally.frozen, 320u + 256u + 128u);
  EXPECT_EQ(tally.trainable, 80u + 10u + 136u + 136u + 136u + 90u);
  EXPECT_DOUBLE_EQ(tally.fraction(), 704.0 / 1292.0);

  const auto model = build_model(cfg);
  EXPECT_EQ(model.params().frozen_count(), tally.frozen);
  EXPECT_EQ(model.params().trainable_count(), tally.trainable);
}

TEST(FrozenFraction, TinyLstmTally) {
  const auto cfg = testing::tiny_config(CellType::lstm);
  const auto tally = frozen_fraction(cfg.arch.reservoir, 10, 8);
  // Four gate blocks per matrix plus a 32-entry bias per slot.
  EXPECT_EQ(tally.frozen, 4u * 704u + 5u * 32u);
  EXPECT_EQ(tally.trainable, 588u);
}

}  // namespace
}  // namespace esnmt
