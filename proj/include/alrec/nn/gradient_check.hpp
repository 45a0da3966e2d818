#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>

#include "alrec/nn/mlp.hpp"

namespace alrec::nn {

/// Visits every parameter as a mutable reference, weights before biases,
/// layer by layer.
template <typename Fn>
void for_each_parameter(MlpModel& model, Fn&& fn) {
  for (auto& layer : model.mutable_layers()) {
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) fn(layer.weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) fn(layer.biases.data()[i]);
  }
}

inline std::vector<double> flatten(const ParameterSet& p) {
  std::vector<double> flat;
  for (std::size_t k = 0; k < p.weights.size(); ++k) {
    flat.insert(flat.end(), p.weights[k].data(), p.weights[k].data() + p.weights[k].size());
    flat.insert(flat.end(), p.biases[k].data(), p.biases[k].data() + p.biases[k].size());
  }
  return flat;
}

inline double relative_discrepancy(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / scale;
}

/// Max relative discrepancy between `analytic` gradients and central
/// differences of the loss, step h.
inline double gradient_check(const MlpModel& model, const Matrix& inputs, const Matrix& targets, LossKind loss,
                             const Gradients& analytic, double h = 1e-5) {
  const std::vector<double> flat = flatten(analytic);
  MlpModel probe = model;
  std::size_t index = 0;
  double worst = 0.0;
  auto loss_at = [&]() {
    return loss_and_gradient(loss, forward_batch(probe, inputs), targets).first;
  };
  for_each_parameter(probe, [&](double& p) {
    const double saved = p;
    p = saved + h;
    const double up = loss_at();
    p = saved - h;
    const double down = loss_at();
    p = saved;
    const double numeric = (up - down) / (2.0 * h);
    worst = std::max(worst, relative_discrepancy(flat[index], numeric));
    ++index;
  });
  return worst;
}

/// Checks the model's own backward pass.
inline double gradient_check(const MlpModel& model, const Matrix& inputs, const Matrix& targets, LossKind loss,
                             double h = 1e-5) {
  const BackwardResult result = backward_batch(model, inputs, targets, loss);
  return gradient_check(model, inputs, targets, loss, result.gradients, h);
}

}  // namespace alrec::nn
