#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "alrec/core/error.hpp"
#include "alrec/core/hash.hpp"

namespace alrec::nn {

enum class Activation { ReLU, Sigmoid, Identity };
enum class LossKind { MeanSquaredError, BinaryCrossEntropy };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

inline Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  throw ValidationError("unknown activation '" + std::string(name) + "'");
}

/// Matrices are column-per-sample: a batch of B inputs is fan_in x B.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// BCE outputs are clamped to [kProbClamp, 1 - kProbClamp] before the log.
inline constexpr double kProbClamp = 1e-7;

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector biases;   // fan_out
  Activation activation = Activation::Identity;

  [[nodiscard]] Eigen::Index fan_in() const { return weights.cols(); }
  [[nodiscard]] Eigen::Index fan_out() const { return weights.rows(); }
  [[nodiscard]] std::size_t parameter_count() const {
    return static_cast<std::size_t>(weights.size() + biases.size());
  }
};

inline void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::ReLU:
      z = z.cwiseMax(0.0);
      break;
    case Activation::Sigmoid:
      z = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
      break;
    case Activation::Identity:
      break;
  }
}

/// Multiplies `grad` in place by the activation derivative, expressed through
/// the activation's output.
inline void scale_by_activation_derivative(Activation a, const Matrix& out, Matrix& grad) {
  switch (a) {
    case Activation::ReLU:
      grad = (out.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::Sigmoid:
      grad.array() *= out.array() * (1.0 - out.array());
      break;
    case Activation::Identity:
      break;
  }
}

class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

  [[nodiscard]] const std::vector<DenseLayer>& layers() const { return layers_; }
  [[nodiscard]] std::vector<DenseLayer>& mutable_layers() { return layers_; }
  [[nodiscard]] bool empty() const { return layers_.empty(); }

  [[nodiscard]] std::size_t input_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().fan_in());
  }
  [[nodiscard]] std::size_t output_size() const {
    return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.back().fan_out());
  }
  [[nodiscard]] Activation output_activation() const { return layers_.back().activation; }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.parameter_count();
    return n;
  }

  /// Sizes from input to output, e.g. {5, 128, 64, 1}.
  [[nodiscard]] std::vector<std::size_t> topology() const {
    std::vector<std::size_t> t;
    if (layers_.empty()) return t;
    t.push_back(input_size());
    for (const auto& l : layers_) t.push_back(static_cast<std::size_t>(l.fan_out()));
    return t;
  }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
      return l.weights.allFinite() && l.biases.allFinite();
    });
  }

  /// FNV-1a over every weight and bias, in layer order.
  [[nodiscard]] std::uint64_t checksum() const {
    Fnv1a h;
    for (const auto& l : layers_) {
      h.update(std::span<const double>(l.weights.data(), static_cast<std::size_t>(l.weights.size())));
      h.update(std::span<const double>(l.biases.data(), static_cast<std::size_t>(l.biases.size())));
    }
    return h.digest();
  }

  void validate() const {
    if (layers_.empty()) throw ValidationError("model has no layers");
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.fan_in() <= 0 || l.fan_out() <= 0) {
        throw ValidationError("layer " + std::to_string(k) + " has a zero dimension");
      }
      if (l.biases.size() != l.fan_out()) {
        throw ValidationError("layer " + std::to_string(k) + ": bias length " +
                              std::to_string(l.biases.size()) + " != fan_out " +
                              std::to_string(l.fan_out()));
      }
      if (k > 0 && l.fan_in() != layers_[k - 1].fan_out()) {
        throw ValidationError("layer " + std::to_string(k) + ": fan_in " + std::to_string(l.fan_in()) +
                              " does not match previous fan_out " +
                              std::to_string(layers_[k - 1].fan_out()));
      }
    }
  }

 private:
  std::vector<DenseLayer> layers_;
};

/// Per-layer activations of one forward pass; activations[0] is the input.
struct ForwardCache {
  std::vector<Matrix> activations;
  [[nodiscard]] const Matrix& output() const { return activations.back(); }
};

/// Parameter-shaped container, used for gradients and optimizer state.
struct ParameterSet {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static ParameterSet zeros_like(const MlpModel& model) {
    ParameterSet p;
    for (const auto& l : model.layers()) {
      p.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
      p.biases.push_back(Vector::Zero(l.biases.size()));
    }
    return p;
  }
  [[nodiscard]] bool all_finite() const {
    for (const auto& w : weights) if (!w.allFinite()) return false;
    for (const auto& b : biases) if (!b.allFinite()) return false;
    return true;
  }
};

using Gradients = ParameterSet;

struct BackwardResult {
  Gradients gradients;
  double loss = 0.0;
  Matrix input_gradient;  // dLoss/dInput, fan_in x B
};

namespace detail {
inline void check_input(const MlpModel& model, const Matrix& inputs) {
  if (model.empty()) throw ValidationError("forward on an empty model");
  if (static_cast<std::size_t>(inputs.rows()) != model.input_size()) {
    throw ValidationError("input has " + std::to_string(inputs.rows()) + " rows, model expects " +
                          std::to_string(model.input_size()));
  }
  if (!inputs.allFinite()) throw ValidationError("input contains non-finite values");
}
}  // namespace detail

inline ForwardCache forward_cached(const MlpModel& model, const Matrix& inputs) {
  detail::check_input(model, inputs);
  ForwardCache cache;
  cache.activations.reserve(model.layers().size() + 1);
  cache.activations.push_back(inputs);
  for (const auto& layer : model.layers()) {
    Matrix z = layer.weights * cache.activations.back();
    z.colwise() += layer.biases;
    apply_activation(layer.activation, z);
    cache.activations.push_back(std::move(z));
  }
  return cache;
}

inline Matrix forward_batch(const MlpModel& model, const Matrix& inputs) {
  detail::check_input(model, inputs);
  Matrix a = inputs;
  for (const auto& layer : model.layers()) {
    Matrix z = layer.weights * a;
    z.colwise() += layer.biases;
    apply_activation(layer.activation, z);
    a = std::move(z);
  }
  return a;
}

inline std::vector<double> forward(const MlpModel& model, std::span<const double> input) {
  const Eigen::Map<const Matrix> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  const Matrix y = forward_batch(model, x);
  return {y.data(), y.data() + y.size()};
}

/// Mean loss over all output elements of the batch, plus dLoss/dOutput.
inline std::pair<double, Matrix> loss_and_gradient(LossKind kind, const Matrix& outputs,
                                                   const Matrix& targets) {
  if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
    throw ValidationError("target shape " + std::to_string(targets.rows()) + "x" +
                          std::to_string(targets.cols()) + " does not match output shape " +
                          std::to_string(outputs.rows()) + "x" + std::to_string(outputs.cols()));
  }
  const auto count = static_cast<double>(outputs.size());
  if (kind == LossKind::MeanSquaredError) {
    const Matrix diff = outputs - targets;
    return {diff.squaredNorm() / count, (2.0 / count) * diff};
  }
  if (!((targets.array() == 0.0) || (targets.array() == 1.0)).all()) {
    throw ValidationError("binary cross-entropy targets must be 0 or 1");
  }
  double loss = 0.0;
  Matrix grad(outputs.rows(), outputs.cols());
  for (Eigen::Index i = 0; i < outputs.size(); ++i) {
    const double y = outputs.data()[i];
    const double t = targets.data()[i];
    const double yc = std::clamp(y, kProbClamp, 1.0 - kProbClamp);
    loss -= t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc);
    const bool clamped = y < kProbClamp || y > 1.0 - kProbClamp;
    grad.data()[i] = clamped ? 0.0 : (-t / yc + (1.0 - t) / (1.0 - yc)) / count;
  }
  return {loss / count, grad};
}

/// Backpropagates dLoss/dOutput through the cached pass. Returns parameter
/// gradients and writes dLoss/dInput when `input_gradient` is non-null.
inline Gradients backpropagate(const MlpModel& model, const ForwardCache& cache, Matrix output_gradient,
                               Matrix* input_gradient = nullptr) {
  const auto& layers = model.layers();
  Gradients grads;
  grads.weights.resize(layers.size());
  grads.biases.resize(layers.size());
  Matrix delta = std::move(output_gradient);
  for (std::size_t k = layers.size(); k-- > 0;) {
    scale_by_activation_derivative(layers[k].activation, cache.activations[k + 1], delta);
    grads.weights[k].noalias() = delta * cache.activations[k].transpose();
    grads.biases[k] = delta.rowwise().sum();
    if (k > 0 || input_gradient != nullptr) {
      Matrix upstream = layers[k].weights.transpose() * delta;
      delta = std::move(upstream);
    }
  }
  if (input_gradient != nullptr) *input_gradient = std::move(delta);
  return grads;
}

inline void check_loss_compatible(const MlpModel& model, LossKind loss) {
  if (loss == LossKind::BinaryCrossEntropy && model.output_activation() != Activation::Sigmoid) {
    throw ValidationError("binary cross-entropy requires a sigmoid output layer");
  }
}

inline BackwardResult backward_batch(const MlpModel& model, const Matrix& inputs, const Matrix& targets,
                                     LossKind loss) {
  check_loss_compatible(model, loss);
  const ForwardCache cache = forward_cached(model, inputs);
  auto [value, grad] = loss_and_gradient(loss, cache.output(), targets);
  BackwardResult result;
  result.loss = value;
  result.gradients = backpropagate(model, cache, std::move(grad), &result.input_gradient);
  return result;
}

inline BackwardResult backward(const MlpModel& model, std::span<const double> input,
                               std::span<const double> target, LossKind loss) {
  const Eigen::Map<const Matrix> x(input.data(), static_cast<Eigen::Index>(input.size()), 1);
  const Eigen::Map<const Matrix> t(target.data(), static_cast<Eigen::Index>(target.size()), 1);
  return backward_batch(model, x, t, loss);
}

/// Builds a fan_in x B matrix from equal-length rows.
inline Matrix columns_from(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(rows.front().size()), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows.front().size()) throw ValidationError("rows have differing lengths");
    m.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const Vector>(rows[j].data(), static_cast<Eigen::Index>(rows[j].size()));
  }
  return m;
}

}  // namespace alrec::nn
