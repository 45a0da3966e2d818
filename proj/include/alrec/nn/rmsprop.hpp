#pragma once

#include <cmath>
#include <span>
#include <string>

#include "alrec/core/error.hpp"
#include "alrec/nn/mlp.hpp"

namespace alrec::nn {

struct RmsPropState {
  ParameterSet mean_square;
  double decay = 0.9;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;

  static RmsPropState for_model(const MlpModel& model, double learning_rate, double decay = 0.9,
                                double epsilon = 1e-8) {
    if (!(learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
    if (!(decay > 0.0 && decay < 1.0)) throw ValidationError("RMSProp decay must lie in (0,1)");
    if (!(epsilon > 0.0)) throw ValidationError("RMSProp epsilon must be positive");
    return {ParameterSet::zeros_like(model), decay, epsilon, learning_rate};
  }
};

/// Flat RMSProp update:
///   acc <- decay*acc + (1-decay)*g^2;  p <- p - lr*g/(sqrt(acc)+eps).
/// Refuses the whole step when any gradient is non-finite; `index_offset`
/// shifts the reported parameter index.
inline void rmsprop_update(std::span<double> params, std::span<const double> grads, std::span<double> acc,
                           double decay, double epsilon, double learning_rate, std::size_t index_offset = 0) {
  if (params.size() != grads.size() || params.size() != acc.size()) {
    throw ValidationError("RMSProp: parameter, gradient and accumulator sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw ValidationError("RMSProp: non-finite gradient at parameter " + std::to_string(index_offset + i));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    acc[i] = decay * acc[i] + (1.0 - decay) * grads[i] * grads[i];
    params[i] -= learning_rate * grads[i] / (std::sqrt(acc[i]) + epsilon);
  }
}

/// Applies one RMSProp step to every layer. Gradients are checked in full
/// before any parameter moves.
inline void rmsprop_step(MlpModel& model, const Gradients& grads, RmsPropState& state) {
  auto& layers = model.mutable_layers();
  if (grads.weights.size() != layers.size() || state.mean_square.weights.size() != layers.size()) {
    throw ValidationError("RMSProp: layer count mismatch");
  }
  std::size_t offset = 0;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& gw = grads.weights[k];
    const auto& gb = grads.biases[k];
    if (gw.rows() != layers[k].weights.rows() || gw.cols() != layers[k].weights.cols() ||
        gb.size() != layers[k].biases.size() ||
        state.mean_square.weights[k].size() != gw.size() || state.mean_square.biases[k].size() != gb.size()) {
      throw ValidationError("RMSProp: shape mismatch in layer " + std::to_string(k));
    }
    for (Eigen::Index i = 0; i < gw.size(); ++i) {
      if (!std::isfinite(gw.data()[i])) {
        throw ValidationError("RMSProp: non-finite gradient at parameter " +
                              std::to_string(offset + static_cast<std::size_t>(i)));
      }
    }
    offset += static_cast<std::size_t>(gw.size());
    for (Eigen::Index i = 0; i < gb.size(); ++i) {
      if (!std::isfinite(gb.data()[i])) {
        throw ValidationError("RMSProp: non-finite gradient at parameter " +
                              std::to_string(offset + static_cast<std::size_t>(i)));
      }
    }
    offset += static_cast<std::size_t>(gb.size());
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    auto& w = layers[k].weights;
    auto& b = layers[k].biases;
    auto& aw = state.mean_square.weights[k];
    auto& ab = state.mean_square.biases[k];
    aw.array() = state.decay * aw.array() + (1.0 - state.decay) * grads.weights[k].array().square();
    w.array() -= state.learning_rate * grads.weights[k].array() / (aw.array().sqrt() + state.epsilon);
    ab.array() = state.decay * ab.array() + (1.0 - state.decay) * grads.biases[k].array().square();
    b.array() -= state.learning_rate * grads.biases[k].array() / (ab.array().sqrt() + state.epsilon);
  }
}

}  // namespace alrec::nn
