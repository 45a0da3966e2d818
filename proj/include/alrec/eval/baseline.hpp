#pragma once

#include <cmath>
#include <span>

#include "alrec/core/error.hpp"
#include "alrec/dae/dae.hpp"

namespace alrec::eval {

/// Manual-threshold autoencoder detector: a window is abnormal when its
/// reconstruction MSE exceeds mean + k_sigma * std of the training MSEs
/// (population std).
struct ThresholdBaseline {
  double threshold = 0.0;
  double k_sigma = 3.0;

  [[nodiscard]] bool is_abnormal(double mse) const { return mse > threshold; }
};

inline double threshold_from_mses(std::span<const double> mses, double k_sigma) {
  if (mses.empty()) throw ValidationError("threshold baseline needs at least one training MSE");
  if (!(k_sigma > 0.0)) throw ValidationError("k_sigma must be positive");
  double mean = 0.0;
  for (double v : mses) mean += v;
  mean /= static_cast<double>(mses.size());
  double var = 0.0;
  for (double v : mses) var += (v - mean) * (v - mean);
  var /= static_cast<double>(mses.size());
  return mean + k_sigma * std::sqrt(var);
}

/// Fits the threshold on normalized training windows (one column each).
inline ThresholdBaseline baseline_fit_threshold(const nn::MlpModel& dae_model, const nn::Matrix& training_samples,
                                                double k_sigma = 3.0) {
  if (training_samples.cols() == 0) throw ValidationError("threshold baseline needs training samples");
  const auto mses = dae::mse_batch(training_samples, dae::reconstruct_batch(dae_model, training_samples));
  return {threshold_from_mses(mses, k_sigma), k_sigma};
}

}  // namespace alrec::eval
