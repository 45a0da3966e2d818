#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "alrec/core/rng.hpp"
#include "alrec/nn/gradient_check.hpp"
#include "alrec/nn/init.hpp"
#include "alrec/nn/mlp.hpp"
#include "alrec/nn/model_io.hpp"
#include "alrec/nn/rmsprop.hpp"

using namespace alrec;
using namespace alrec::nn;

namespace {

DenseLayer make_layer(std::initializer_list<std::initializer_list<double>> w, std::initializer_list<double> b,
                      Activation a) {
  DenseLayer l;
  l.activation = a;
  l.weights.resize(static_cast<Eigen::Index>(w.size()), static_cast<Eigen::Index>(w.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : w) {
    Eigen::Index c = 0;
    for (double v : row) l.weights(r, c++) = v;
    ++r;
  }
  l.biases = Eigen::Map<const Vector>(std::data(b), static_cast<Eigen::Index>(b.size()));
  return l;
}

Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST(Forward, IdentityLayerPassesInputThrough) {
  MlpModel model({make_layer({{1, 0}, {0, 1}}, {0, 0}, Activation::Identity)});
  const std::vector<double> in{0.2, 0.7};
  EXPECT_EQ(forward(model, in), in);
}

TEST(Forward, ZeroSigmoidLayerGivesOneHalf) {
  MlpModel model({make_layer({{0, 0, 0}, {0, 0, 0}}, {0, 0}, Activation::Sigmoid)});
  for (double v : forward(model, std::vector<double>{3.0, -7.0, 100.0})) EXPECT_EQ(v, 0.5);
}

TEST(Forward, TwoLayerMatchesHandEvaluation) {
  // Hidden: relu([1,-2]*1 + [0.5,0.5]) = [1.5, 0]; output: sigmoid(2*1.5 + 3*0 - 1) = sigmoid(2).
  MlpModel model({make_layer({{1.0}, {-2.0}}, {0.5, 0.5}, Activation::ReLU),
                  make_layer({{2.0, 3.0}}, {-1.0}, Activation::Sigmoid)});
  const auto out = forward(model, std::vector<double>{1.0});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0], 0.8807970779778823, 1e-15);
}

TEST(Forward, RejectsBadInput) {
  MlpModel model({make_layer({{1, 0}, {0, 1}}, {0, 0}, Activation::Identity)});
  EXPECT_THROW(forward(model, std::vector<double>{1.0}), ValidationError);
  EXPECT_THROW(forward(model, std::vector<double>{1.0, std::nan("")}), ValidationError);
  EXPECT_THROW(forward(model, std::vector<double>{1.0, INFINITY}), ValidationError);
}

TEST(Model, RejectsMismatchedLayers) {
  EXPECT_THROW(MlpModel({make_layer({{1, 0}, {0, 1}}, {0, 0}, Activation::ReLU),
                         make_layer({{1, 0, 0}}, {0}, Activation::Sigmoid)}),
               ValidationError);
  EXPECT_THROW(MlpModel(std::vector<DenseLayer>{}), ValidationError);
}

TEST(Backward, ZeroErrorGivesZeroGradients) {
  MlpModel model({make_layer({{1, 0}, {0, 1}}, {0, 0}, Activation::Identity)});
  const std::vector<double> x{0.3, 0.9};
  const auto r = backward(model, x, x, LossKind::MeanSquaredError);
  EXPECT_EQ(r.loss, 0.0);
  EXPECT_TRUE(r.gradients.weights[0].isZero(0.0));
  EXPECT_TRUE(r.gradients.biases[0].isZero(0.0));
}

TEST(Backward, SingleWeightClosedForm) {
  // loss = (w*x - t)^2 with w=2, x=1, t=0 -> 4; d/dw = 2(wx - t)x = 4.
  MlpModel model({make_layer({{2.0}}, {0.0}, Activation::Identity)});
  const auto r = backward(model, std::vector<double>{1.0}, std::vector<double>{0.0}, LossKind::MeanSquaredError);
  EXPECT_DOUBLE_EQ(r.loss, 4.0);
  EXPECT_DOUBLE_EQ(r.gradients.weights[0](0, 0), 4.0);
  EXPECT_DOUBLE_EQ(r.gradients.biases[0](0), 4.0);
}

TEST(Backward, RandomNetMatchesFiniteDifferences) {
  Rng rng(7);
  const auto model = init_weights(Topology::dense({4, 6, 5, 3}, Activation::ReLU, Activation::Sigmoid), 11);
  const Matrix x = random_matrix(rng, 4, 3, -1, 1);
  const Matrix t = random_matrix(rng, 3, 3, 0, 1);
  EXPECT_LT(gradient_check(model, x, t, LossKind::MeanSquaredError), 1e-4);
}

TEST(Backward, BceRequiresSigmoidOutput) {
  MlpModel model({make_layer({{1.0}}, {0.0}, Activation::Identity)});
  EXPECT_THROW(backward(model, std::vector<double>{1.0}, std::vector<double>{1.0}, LossKind::BinaryCrossEntropy),
               ValidationError);
}

TEST(Backward, BceRejectsNonBinaryTargets) {
  MlpModel model({make_layer({{1.0}}, {0.0}, Activation::Sigmoid)});
  EXPECT_THROW(backward(model, std::vector<double>{1.0}, std::vector<double>{0.3}, LossKind::BinaryCrossEntropy),
               ValidationError);
}

TEST(Backward, ShapeMismatchRejected) {
  MlpModel model({make_layer({{1.0}}, {0.0}, Activation::Sigmoid)});
  EXPECT_THROW(
      backward(model, std::vector<double>{1.0}, std::vector<double>{1.0, 0.0}, LossKind::MeanSquaredError),
      ValidationError);
}

TEST(Loss, MseOfOutputAgainstItselfIsZero) {
  Rng rng(3);
  const Matrix y = random_matrix(rng, 5, 9, -3, 3);
  EXPECT_EQ(loss_and_gradient(LossKind::MeanSquaredError, y, y).first, 0.0);
}

TEST(Loss, BceNonNegativeAndZeroOnlyAtTargets) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix y = random_matrix(rng, 3, 4, 0, 1);
    Matrix t(3, 4);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform() < 0.5 ? 0.0 : 1.0;
    EXPECT_GE(loss_and_gradient(LossKind::BinaryCrossEntropy, y, t).first, 0.0);
  }
  Matrix t(1, 2);
  t << 0.0, 1.0;
  EXPECT_NEAR(loss_and_gradient(LossKind::BinaryCrossEntropy, t, t).first, 0.0, 1e-6);
  Matrix off(1, 2);
  off << 0.1, 0.9;
  EXPECT_GT(loss_and_gradient(LossKind::BinaryCrossEntropy, off, t).first, 0.05);
}

TEST(RmsProp, ZeroGradientDecaysAccumulatorOnly) {
  std::vector<double> p{1.0, -2.0}, g{0.0, 0.0}, acc{0.5, 0.2};
  rmsprop_update(p, g, acc, 0.9, 1e-8, 0.001);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
  EXPECT_DOUBLE_EQ(acc[0], 0.45);
  EXPECT_DOUBLE_EQ(acc[1], 0.18);
}

TEST(RmsProp, SingleParameterStep) {
  std::vector<double> p{1.0}, g{1.0}, acc{0.0};
  rmsprop_update(p, g, acc, 0.9, 1e-8, 0.001);
  EXPECT_NEAR(acc[0], 0.1, 1e-15);
  EXPECT_NEAR(p[0], 1.0 - 0.001 / (std::sqrt(0.1) + 1e-8), 1e-15);
  EXPECT_NEAR(p[0], 0.996838, 1e-6);
}

TEST(RmsProp, RepeatedGradientStepApproachesLearningRate) {
  // acc_n = 1 - 0.9^n -> 1, so the step tends to lr / (1 + eps).
  std::vector<double> p{0.0}, g{1.0}, acc{0.0};
  double prev = 0.0, step = 0.0;
  for (int i = 0; i < 400; ++i) {
    prev = p[0];
    rmsprop_update(p, g, acc, 0.9, 1e-8, 0.001);
    step = prev - p[0];
  }
  EXPECT_NEAR(step, 0.001 / (1.0 + 1e-8), 1e-12);
}

TEST(RmsProp, NonFiniteGradientRefusedWithIndex) {
  MlpModel model({make_layer({{1.0, 2.0}}, {0.0}, Activation::Identity)});
  auto state = RmsPropState::for_model(model, 0.01);
  auto grads = ParameterSet::zeros_like(model);
  grads.biases[0](0) = std::nan("");
  const auto before = model.checksum();
  try {
    rmsprop_step(model, grads, state);
    FAIL() << "expected refusal";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("parameter 2"), std::string::npos) << e.what();
  }
  EXPECT_EQ(model.checksum(), before);
}

TEST(RmsProp, ModelStepWithZeroGradientIsNoOp) {
  auto model = init_weights(Topology::dense({3, 4, 2}, Activation::ReLU, Activation::Sigmoid), 1);
  auto state = RmsPropState::for_model(model, 0.01);
  const auto before = model.checksum();
  rmsprop_step(model, ParameterSet::zeros_like(model), state);
  EXPECT_EQ(model.checksum(), before);
}

TEST(RmsProp, AccumulatorStaysNonNegative) {
  Rng rng(2);
  auto model = init_weights(Topology::dense({3, 4, 2}, Activation::ReLU, Activation::Sigmoid), 1);
  auto state = RmsPropState::for_model(model, 0.01);
  for (int i = 0; i < 50; ++i) {
    const auto r = backward_batch(model, random_matrix(rng, 3, 8, -1, 1), random_matrix(rng, 2, 8, 0, 1),
                                  LossKind::MeanSquaredError);
    rmsprop_step(model, r.gradients, state);
  }
  for (double v : flatten(state.mean_square)) EXPECT_GE(v, 0.0);
  EXPECT_TRUE(model.all_finite());
}

TEST(Init, DeterministicPerSeed) {
  const auto topo = Topology::dense({5, 16, 8, 1}, Activation::ReLU, Activation::Sigmoid);
  const auto a = init_weights(topo, 42);
  const auto b = init_weights(topo, 42);
  const auto c = init_weights(topo, 43);
  EXPECT_EQ(flatten({{a.layers()[0].weights}, {a.layers()[0].biases}}),
            flatten({{b.layers()[0].weights}, {b.layers()[0].biases}}));
  EXPECT_EQ(a.checksum(), b.checksum());
  EXPECT_NE(a.checksum(), c.checksum());
  for (const auto& l : a.layers()) EXPECT_TRUE(l.biases.isZero(0.0));
}

TEST(Init, HeScalingForReluLayer) {
  const auto model = init_weights(Topology::dense({128, 80, 1}, Activation::ReLU, Activation::Sigmoid), 9);
  const Matrix& w = model.layers()[0].weights;  // 10240 samples
  const double mean = w.mean();
  const double sd = std::sqrt((w.array() - mean).square().sum() / static_cast<double>(w.size() - 1));
  EXPECT_NEAR(sd, std::sqrt(2.0 / 128.0), 0.2 * std::sqrt(2.0 / 128.0));
}

TEST(Init, GlorotScalingForSigmoidLayer) {
  const auto model = init_weights(Topology::dense({100, 100}, Activation::ReLU, Activation::Sigmoid), 9);
  const Matrix& w = model.layers()[0].weights;
  const double sd = std::sqrt(w.array().square().mean());
  EXPECT_NEAR(sd, std::sqrt(2.0 / 200.0), 0.1 * std::sqrt(2.0 / 200.0));
}

TEST(Init, ZeroSizedLayerRejected) {
  EXPECT_THROW(init_weights(Topology::dense({3, 0, 1}, Activation::ReLU, Activation::Sigmoid), 1),
               ValidationError);
}

TEST(GradientCheck, LinearIdentityModelIsExact) {
  MlpModel model({make_layer({{1, 0}, {0, 1}}, {0, 0}, Activation::Identity)});
  Matrix x(2, 1), t(2, 1);
  x << 0.4, -0.3;
  t << 0.1, 0.2;
  EXPECT_LT(gradient_check(model, x, t, LossKind::MeanSquaredError), 1e-8);
}

TEST(GradientCheck, ThreeLayerReluSigmoid) {
  Rng rng(21);
  const auto model = init_weights(Topology::dense({6, 8, 8, 2}, Activation::ReLU, Activation::Sigmoid), 4);
  Matrix t(2, 4);
  t << 1, 0, 0, 1, 0, 1, 1, 0;
  EXPECT_LT(gradient_check(model, random_matrix(rng, 6, 4, -1, 1), t, LossKind::BinaryCrossEntropy), 1e-4);
}

TEST(GradientCheck, DetectsCorruptedGradient) {
  Rng rng(22);
  const auto model = init_weights(Topology::dense({6, 8, 8, 2}, Activation::ReLU, Activation::Sigmoid), 4);
  const Matrix x = random_matrix(rng, 6, 4, -1, 1);
  const Matrix t = random_matrix(rng, 2, 4, 0, 1);
  auto r = backward_batch(model, x, t, LossKind::MeanSquaredError);
  for (auto& w : r.gradients.weights) w *= 2.0;
  for (auto& b : r.gradients.biases) b *= 2.0;
  EXPECT_GT(gradient_check(model, x, t, LossKind::MeanSquaredError, r.gradients), 0.3);
}

TEST(GradientCheck, InputGradientMatchesFiniteDifferences) {
  Rng rng(23);
  const auto model = init_weights(Topology::dense({5, 7, 1}, Activation::ReLU, Activation::Sigmoid), 8);
  Matrix x = random_matrix(rng, 5, 1, 0, 1);
  Matrix t = Matrix::Ones(1, 1);
  const auto r = backward_batch(model, x, t, LossKind::BinaryCrossEntropy);
  const double h = 1e-5;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Matrix up = x, down = x;
    up(i, 0) += h;
    down(i, 0) -= h;
    const double numeric = (loss_and_gradient(LossKind::BinaryCrossEntropy, forward_batch(model, up), t).first -
                            loss_and_gradient(LossKind::BinaryCrossEntropy, forward_batch(model, down), t).first) /
                           (2 * h);
    EXPECT_LT(relative_discrepancy(r.input_gradient(i, 0), numeric), 1e-4);
  }
}

TEST(ModelIo, RoundTripIsBitExact) {
  const auto model = init_weights(Topology::dense({5, 16, 8, 1}, Activation::ReLU, Activation::Sigmoid), 77);
  const std::string text = model_to_json(model, 77).dump();
  const auto loaded = model_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(loaded.seed, 77u);
  EXPECT_EQ(loaded.model.checksum(), model.checksum());
  const std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5};
  EXPECT_EQ(forward(loaded.model, x), forward(model, x));
}

TEST(ModelIo, RejectsMalformedDocuments) {
  const auto model = init_weights(Topology::dense({2, 2}, Activation::ReLU, Activation::Sigmoid), 1);
  auto doc = model_to_json(model, 1);
  doc["layers"][0]["weights"].erase(0);
  EXPECT_THROW(model_from_json(doc), IoError);
  auto doc2 = model_to_json(model, 1);
  doc2["version"] = 99;
  EXPECT_THROW(model_from_json(doc2), IoError);
}
