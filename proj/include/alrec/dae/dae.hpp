#pragma once

#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/nn/init.hpp"
#include "alrec/nn/mlp.hpp"
#include "alrec/nn/rmsprop.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::dae {

using nn::Matrix;

struct DaeConfig {
  /// Encoder sizes from the first hidden layer to the bottleneck; the decoder
  /// mirrors them.
  std::vector<std::size_t> hidden_sizes{128, 64, 32, 16, 8};
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.001;
  /// Adds a 256-unit layer next to the input and next to the output.
  bool extended_extra_layer = false;

  [[nodiscard]] std::size_t bottleneck() const { return hidden_sizes.back(); }

  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (hidden_sizes.empty()) errors.emplace_back("dae.hidden_sizes must not be empty");
    for (auto h : hidden_sizes) {
      if (h == 0) errors.emplace_back("dae.hidden_sizes entries must be positive");
    }
    if (batch_size == 0) errors.emplace_back("dae.batch_size must be positive");
    if (!(learning_rate > 0.0)) errors.emplace_back("dae.learning_rate must be positive");
    return errors;
  }

  static DaeConfig for_mode(trajectory::FeatureMode mode) {
    DaeConfig c;
    c.extended_extra_layer = mode == trajectory::FeatureMode::Extended;
    return c;
  }
};

inline void to_json(nlohmann::json& j, const DaeConfig& c) {
  j = {{"hidden_sizes", c.hidden_sizes},
       {"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"extended_extra_layer", c.extended_extra_layer}};
}
inline void from_json(const nlohmann::json& j, DaeConfig& c) {
  c.hidden_sizes = j.value("hidden_sizes", c.hidden_sizes);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.extended_extra_layer = j.value("extended_extra_layer", c.extended_extra_layer);
}

/// N -> [256] -> 128 -> ... -> 8 -> ... -> 128 -> [256] -> N, ReLU hidden,
/// sigmoid output.
inline nn::Topology dae_topology(std::size_t input_size, const DaeConfig& config) {
  std::vector<std::size_t> sizes{input_size};
  if (config.extended_extra_layer) sizes.push_back(256);
  sizes.insert(sizes.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  sizes.insert(sizes.end(), config.hidden_sizes.rbegin() + 1, config.hidden_sizes.rend());
  if (config.extended_extra_layer) sizes.push_back(256);
  sizes.push_back(input_size);
  return nn::Topology::dense(sizes, nn::Activation::ReLU, nn::Activation::Sigmoid);
}

struct DaeTrainingResult {
  nn::MlpModel model;
  /// Mean per-sample MSE seen during each epoch (before each batch update).
  std::vector<double> epoch_mse;
};

/// Trains on normalized samples, one column per sample. Batches come from a
/// fresh shuffle of the whole set each epoch.
inline DaeTrainingResult train_dae(const Matrix& samples, const DaeConfig& config, std::uint64_t seed) {
  if (samples.cols() == 0) throw ValidationError("cannot train the autoencoder on an empty set");
  if (auto errors = config.validate(); !errors.empty()) throw ValidationError(errors.front());
  if (!samples.allFinite()) throw ValidationError("training samples contain non-finite values");

  DaeTrainingResult result;
  result.model = nn::init_weights(dae_topology(static_cast<std::size_t>(samples.rows()), config), seed);
  auto optimizer = nn::RmsPropState::for_model(result.model, config.learning_rate);
  Rng rng = Rng::substream(seed, "batching");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples.cols()));
  std::iota(order.begin(), order.end(), 0);
  Matrix batch;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    double weighted_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, order.size() - start);
      batch.resize(samples.rows(), static_cast<Eigen::Index>(count));
      for (std::size_t j = 0; j < count; ++j) batch.col(static_cast<Eigen::Index>(j)) = samples.col(order[start + j]);
      const auto step = nn::backward_batch(result.model, batch, batch, nn::LossKind::MeanSquaredError);
      nn::rmsprop_step(result.model, step.gradients, optimizer);
      weighted_loss += step.loss * static_cast<double>(count);
    }
    result.epoch_mse.push_back(weighted_loss / static_cast<double>(order.size()));
  }
  return result;
}

inline DaeTrainingResult train_dae(std::span<const trajectory::TrajectorySample> samples, const DaeConfig& config,
                                   std::uint64_t seed) {
  if (samples.empty()) throw ValidationError("cannot train the autoencoder on an empty set");
  Matrix m(static_cast<Eigen::Index>(samples.front().size()), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    if (samples[j].size() != samples.front().size()) throw ValidationError("training samples differ in length");
    m.col(static_cast<Eigen::Index>(j)) =
        Eigen::Map<const nn::Vector>(samples[j].values.data(), static_cast<Eigen::Index>(samples[j].size()));
  }
  return train_dae(m, config, seed);
}

inline Matrix reconstruct_batch(const nn::MlpModel& model, const Matrix& samples) {
  return nn::forward_batch(model, samples);
}

inline std::vector<double> reconstruct(const nn::MlpModel& model, std::span<const double> sample) {
  return nn::forward(model, sample);
}

inline double mse(std::span<const double> sample, std::span<const double> reconstruction) {
  if (sample.size() != reconstruction.size()) {
    throw ValidationError("mse: lengths " + std::to_string(sample.size()) + " and " +
                          std::to_string(reconstruction.size()) + " differ");
  }
  if (sample.empty()) throw ValidationError("mse of empty vectors");
  double sum = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double d = sample[i] - reconstruction[i];
    sum += d * d;
  }
  return sum / static_cast<double>(sample.size());
}

/// Partial mean squared errors over M contiguous blocks of L = N / M.
struct PmseVector {
  std::vector<double> values;
  [[nodiscard]] std::size_t blocks() const { return values.size(); }
};

inline void check_blocks(std::size_t n, std::size_t blocks) {
  if (blocks == 0) throw ValidationError("PMSE block count must be positive");
  if (n % blocks != 0) {
    throw ValidationError("sample length " + std::to_string(n) + " is not divisible by M = " + std::to_string(blocks));
  }
}

inline PmseVector pmse(std::span<const double> sample, std::span<const double> reconstruction, std::size_t blocks) {
  if (sample.size() != reconstruction.size()) throw ValidationError("pmse: sample and reconstruction lengths differ");
  check_blocks(sample.size(), blocks);
  const std::size_t block_len = sample.size() / blocks;
  PmseVector out;
  out.values.resize(blocks, 0.0);
  for (std::size_t j = 0; j < blocks; ++j) {
    double sum = 0.0;
    for (std::size_t i = j * block_len; i < (j + 1) * block_len; ++i) {
      const double d = sample[i] - reconstruction[i];
      sum += d * d;
    }
    out.values[j] = sum / static_cast<double>(block_len);
  }
  return out;
}

/// Column-wise PMSE: M x S for N x S inputs.
inline Matrix pmse_batch(const Matrix& samples, const Matrix& reconstructions, std::size_t blocks) {
  if (samples.rows() != reconstructions.rows() || samples.cols() != reconstructions.cols()) {
    throw ValidationError("pmse: sample and reconstruction shapes differ");
  }
  check_blocks(static_cast<std::size_t>(samples.rows()), blocks);
  const auto block_len = samples.rows() / static_cast<Eigen::Index>(blocks);
  const Matrix sq = (samples - reconstructions).array().square().matrix();
  Matrix out(static_cast<Eigen::Index>(blocks), samples.cols());
  for (Eigen::Index c = 0; c < samples.cols(); ++c) {
    for (Eigen::Index j = 0; j < out.rows(); ++j) {
      out(j, c) = sq.col(c).segment(j * block_len, block_len).sum() / static_cast<double>(block_len);
    }
  }
  return out;
}

/// Per-sample MSE for N x S inputs.
inline std::vector<double> mse_batch(const Matrix& samples, const Matrix& reconstructions) {
  const Eigen::VectorXd per = (samples - reconstructions).array().square().colwise().mean();
  return {per.data(), per.data() + per.size()};
}

}  // namespace alrec::dae
