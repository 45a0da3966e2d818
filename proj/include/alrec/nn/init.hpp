#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "alrec/core/error.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/nn/mlp.hpp"

namespace alrec::nn {

struct LayerSpec {
  std::size_t fan_out = 0;
  Activation activation = Activation::ReLU;
};

struct Topology {
  std::size_t input_size = 0;
  std::vector<LayerSpec> layers;

  /// Hidden layers use `hidden`, the last layer uses `output`.
  static Topology dense(const std::vector<std::size_t>& sizes, Activation hidden, Activation output) {
    if (sizes.size() < 2) throw ValidationError("topology needs at least an input and an output size");
    Topology t;
    t.input_size = sizes.front();
    for (std::size_t i = 1; i < sizes.size(); ++i) {
      t.layers.push_back({sizes[i], i + 1 == sizes.size() ? output : hidden});
    }
    return t;
  }
};

/// Zero-mean Gaussian weights: std = sqrt(2/fan_in) for ReLU layers,
/// sqrt(2/(fan_in+fan_out)) otherwise. Biases start at zero.
inline MlpModel init_weights(const Topology& topology, std::uint64_t seed) {
  if (topology.input_size == 0 || topology.layers.empty()) {
    throw ValidationError("topology must have a positive input size and at least one layer");
  }
  Rng rng = Rng::substream(seed, "init");
  std::vector<DenseLayer> layers;
  std::size_t fan_in = topology.input_size;
  for (std::size_t k = 0; k < topology.layers.size(); ++k) {
    const auto& spec = topology.layers[k];
    if (spec.fan_out == 0) throw ValidationError("layer " + std::to_string(k) + " has zero units");
    const double stddev = spec.activation == Activation::ReLU
                              ? std::sqrt(2.0 / static_cast<double>(fan_in))
                              : std::sqrt(2.0 / static_cast<double>(fan_in + spec.fan_out));
    DenseLayer layer;
    layer.activation = spec.activation;
    layer.weights.resize(static_cast<Eigen::Index>(spec.fan_out), static_cast<Eigen::Index>(fan_in));
    // Row-major draw order so the stream does not depend on Eigen's storage.
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.normal(0.0, stddev);
    }
    layer.biases = Vector::Zero(static_cast<Eigen::Index>(spec.fan_out));
    layers.push_back(std::move(layer));
    fan_in = spec.fan_out;
  }
  return MlpModel(std::move(layers));
}

}  // namespace alrec::nn
