#include <gtest/gtest.h>

#include <numeric>

#include "alrec/core/rng.hpp"
#include "alrec/dae/dae.hpp"

using namespace alrec;
using namespace alrec::dae;

namespace {

Matrix random_columns(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

/// Block means summed directly, one squared error at a time.
std::vector<double> block_means(const std::vector<double>& a, const std::vector<double>& b, std::size_t blocks) {
  const std::size_t len = a.size() / blocks;
  std::vector<double> out(blocks, 0.0);
  for (std::size_t j = 0; j < blocks; ++j) {
    for (std::size_t i = j * len; i < (j + 1) * len; ++i) out[j] += (a[i] - b[i]) * (a[i] - b[i]);
    out[j] /= static_cast<double>(len);
  }
  return out;
}

}  // namespace

TEST(Mse, Examples) {
  const std::vector<double> zero(4, 0.0), half(4, 0.5);
  EXPECT_EQ(mse(zero, zero), 0.0);
  EXPECT_DOUBLE_EQ(mse(zero, half), 0.25);
  EXPECT_THROW(mse(zero, std::vector<double>(3, 0.0)), ValidationError);
}

TEST(Pmse, PerfectReconstructionIsZero) {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  for (double v : pmse(s, s, 5).values) EXPECT_EQ(v, 0.0);
}

TEST(Pmse, HandComputedBlocks) {
  // Squared errors [1,3, 0,0, 2,2, 5,1, 4,4].
  const std::vector<double> e2{1, 3, 0, 0, 2, 2, 5, 1, 4, 4};
  std::vector<double> sample(10, 0.0), recon(10);
  for (std::size_t i = 0; i < 10; ++i) recon[i] = std::sqrt(e2[i]);
  const auto p = pmse(sample, recon, 5);
  const std::vector<double> expected{2.0, 0.0, 2.0, 3.0, 4.0};
  ASSERT_EQ(p.blocks(), 5u);
  for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(p.values[j], expected[j], 1e-15);
}

TEST(Pmse, SingleBlockIsMse) {
  Rng rng(1);
  std::vector<double> a(125), b(125);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform();
  EXPECT_DOUBLE_EQ(pmse(a, b, 1).values.front(), mse(a, b));
}

TEST(Pmse, IndivisibleLengthRejected) {
  const std::vector<double> s(10, 0.0);
  EXPECT_THROW(pmse(s, s, 3), ValidationError);
  EXPECT_THROW(pmse(s, s, 0), ValidationError);
}

TEST(Pmse, PartitionIdentityAndBlockOracle) {
  Rng rng(2);
  for (std::size_t n : {125u, 232u, 40u}) {
    for (std::size_t blocks : {1u, 5u, 8u}) {
      if (n % blocks != 0) continue;
      for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.uniform();
        for (auto& v : b) v = rng.uniform();
        const auto p = pmse(a, b, blocks);
        const double mean = std::accumulate(p.values.begin(), p.values.end(), 0.0) / static_cast<double>(blocks);
        EXPECT_NEAR(mean, mse(a, b), 1e-12);
        const auto oracle = block_means(a, b, blocks);
        for (std::size_t j = 0; j < blocks; ++j) EXPECT_NEAR(p.values[j], oracle[j], 1e-14);
      }
    }
  }
}

TEST(Pmse, BlockPermutationCovariance) {
  Rng rng(3);
  std::vector<double> a(40), b(40);
  for (auto& v : a) v = rng.uniform();
  for (auto& v : b) v = rng.uniform();
  const auto p = pmse(a, b, 5);
  // Swap blocks 1 and 3 (length 8) in both vectors.
  auto swap_blocks = [](std::vector<double> v) {
    std::swap_ranges(v.begin() + 8, v.begin() + 16, v.begin() + 24);
    return v;
  };
  const auto q = pmse(swap_blocks(a), swap_blocks(b), 5);
  EXPECT_EQ(q.values[0], p.values[0]);
  EXPECT_EQ(q.values[1], p.values[3]);
  EXPECT_EQ(q.values[3], p.values[1]);
  EXPECT_EQ(q.values[2], p.values[2]);
  EXPECT_EQ(q.values[4], p.values[4]);
}

TEST(Pmse, BatchMatchesSingle) {
  Rng rng(4);
  const Matrix x = random_columns(rng, 25, 7), y = random_columns(rng, 25, 7);
  const Matrix p = pmse_batch(x, y, 5);
  const auto m = mse_batch(x, y);
  for (Eigen::Index c = 0; c < 7; ++c) {
    const std::span<const double> xs(x.col(c).data(), 25), ys(y.col(c).data(), 25);
    const auto single = pmse(xs, ys, 5);
    for (Eigen::Index j = 0; j < 5; ++j) EXPECT_NEAR(p(j, c), single.values[static_cast<std::size_t>(j)], 1e-12);
    EXPECT_DOUBLE_EQ(m[static_cast<std::size_t>(c)], mse(xs, ys));
  }
}

TEST(Topology, MirroredWithOptionalExtraLayers) {
  const auto basic = dae_topology(125, DaeConfig{});
  std::vector<std::size_t> sizes;
  for (const auto& l : basic.layers) sizes.push_back(l.fan_out);
  EXPECT_EQ(sizes, (std::vector<std::size_t>{128, 64, 32, 16, 8, 16, 32, 64, 128, 125}));
  EXPECT_EQ(basic.layers.back().activation, nn::Activation::Sigmoid);
  const auto ext = dae_topology(232, DaeConfig::for_mode(trajectory::FeatureMode::Extended));
  EXPECT_EQ(ext.layers.front().fan_out, 256u);
  EXPECT_EQ(ext.layers[ext.layers.size() - 2].fan_out, 256u);
  EXPECT_EQ(ext.layers.back().fan_out, 232u);
}

TEST(Reconstruct, OutputInUnitIntervalAndFinite) {
  DaeConfig c;
  const auto model = nn::init_weights(dae_topology(125, c), 5);
  const auto out = reconstruct(model, std::vector<double>(125, 0.5));
  ASSERT_EQ(out.size(), 125u);
  for (double v : out) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  EXPECT_THROW(reconstruct(model, std::vector<double>(124, 0.5)), ValidationError);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  Rng rng(6);
  const Matrix x = random_columns(rng, 25, 50);
  DaeConfig c;
  c.hidden_sizes = {8, 4};
  c.epochs = 0;
  const auto r = train_dae(x, c, 9);
  EXPECT_TRUE(r.epoch_mse.empty());
  EXPECT_EQ(r.model.checksum(), nn::init_weights(dae_topology(25, c), 9).checksum());
}

TEST(Train, DeterministicAndLearns) {
  // Low-dimensional data: each column is a point on a 2-D manifold in R^20.
  Rng rng(7);
  Matrix x(20, 400);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double u = rng.uniform(), v = rng.uniform();
    for (Eigen::Index r = 0; r < 20; ++r) x(r, c) = 0.1 + 0.4 * (r % 2 == 0 ? u : v) + 0.02 * static_cast<double>(r % 5) * u;
  }
  DaeConfig c;
  c.hidden_sizes = {16, 8, 4};
  c.epochs = 60;
  c.batch_size = 32;
  c.learning_rate = 0.003;
  const auto a = train_dae(x, c, 1), b = train_dae(x, c, 1);
  EXPECT_EQ(a.model.checksum(), b.model.checksum());
  EXPECT_EQ(a.epoch_mse, b.epoch_mse);
  ASSERT_EQ(a.epoch_mse.size(), 60u);
  EXPECT_LE(a.epoch_mse.back(), 0.1 * a.epoch_mse.front());
}

TEST(Train, RejectsEmptyAndInvalid) {
  DaeConfig c;
  EXPECT_THROW(train_dae(Matrix(25, 0), c, 1), ValidationError);
  c.batch_size = 0;
  EXPECT_THROW(train_dae(Matrix::Zero(25, 4), c, 1), ValidationError);
}
