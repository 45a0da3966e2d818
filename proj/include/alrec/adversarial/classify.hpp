#pragma once

#include <span>
#include <string>
#include <vector>

#include "alrec/core/error.hpp"
#include "alrec/dae/dae.hpp"
#include "alrec/nn/mlp.hpp"
#include "alrec/trajectory/scaler.hpp"
#include "alrec/trajectory/types.hpp"
#include "alrec/trajectory/windows.hpp"

namespace alrec::adversarial {

enum class VerdictKind { Normal, Abnormal };

inline std::string_view to_string(VerdictKind v) { return v == VerdictKind::Normal ? "normal" : "abnormal"; }

struct Verdict {
  VerdictKind kind = VerdictKind::Abnormal;
  double score = 0.0;  // D output; real (normal) near 1

  [[nodiscard]] bool abnormal() const { return kind == VerdictKind::Abnormal; }
};

/// Normal iff score > threshold; a tie is abnormal.
inline Verdict verdict_from_score(double score, double threshold = 0.5) {
  return {score > threshold ? VerdictKind::Normal : VerdictKind::Abnormal, score};
}

/// Abnormal iff abnormal / total >= threshold.
inline VerdictKind behavioural_verdict(std::size_t abnormal, std::size_t total, double threshold) {
  if (total == 0) throw NoSamplesError("no samples to aggregate");
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ValidationError("behavioural threshold must lie in (0, 1]");
  if (abnormal > total) throw ValidationError("more abnormal samples than samples");
  const double fraction = static_cast<double>(abnormal) / static_cast<double>(total);
  return fraction >= threshold ? VerdictKind::Abnormal : VerdictKind::Normal;
}

/// Frozen models needed at test time. Only D decides; the autoencoder and
/// scaler turn a raw window into its PMSE vector.
struct Classifier {
  const nn::MlpModel& discriminator;
  const nn::MlpModel& dae_model;
  const trajectory::Scaler& scaler;
  double decision_threshold = 0.5;

  [[nodiscard]] std::size_t blocks() const { return discriminator.input_size(); }

  void check_models() const {
    if (!scaler.fitted()) throw ValidationError("scaler has not been fitted");
    if (dae_model.input_size() != scaler.size() || dae_model.output_size() != scaler.size()) {
      throw MismatchError("autoencoder size " + std::to_string(dae_model.input_size()) + " does not match scaler size " +
                          std::to_string(scaler.size()));
    }
    if (discriminator.output_size() != 1) throw MismatchError("discriminator must have a single output");
    if (blocks() == 0 || scaler.size() % blocks() != 0) {
      throw MismatchError("sample length " + std::to_string(scaler.size()) + " is not divisible by M = " +
                          std::to_string(blocks()));
    }
  }

  void check_sample(const trajectory::TrajectorySample& s) const {
    if (s.mode != scaler.mode()) {
      throw MismatchError("sample is in " + std::string(trajectory::to_string(s.mode)) + " mode, models expect " +
                          std::string(trajectory::to_string(scaler.mode())));
    }
    if (s.size() != scaler.size()) {
      throw MismatchError("sample length " + std::to_string(s.size()) + " does not match model input " +
                          std::to_string(scaler.size()));
    }
  }

  /// D scores for raw samples, in input order.
  [[nodiscard]] std::vector<double> scores(std::span<const trajectory::TrajectorySample> samples) const {
    check_models();
    if (samples.empty()) return {};
    for (const auto& s : samples) check_sample(s);
    const nn::Matrix x = scaler.apply_columns(samples);
    const nn::Matrix phi = dae::pmse_batch(x, dae::reconstruct_batch(dae_model, x), blocks());
    const nn::Matrix out = nn::forward_batch(discriminator, phi);
    return {out.data(), out.data() + out.size()};
  }

  [[nodiscard]] Verdict classify_sample(const trajectory::TrajectorySample& sample) const {
    return verdict_from_score(scores(std::span(&sample, 1)).front(), decision_threshold);
  }
};

inline Verdict classify_sample(const nn::MlpModel& discriminator, const nn::MlpModel& dae_model,
                               const trajectory::Scaler& scaler, const trajectory::TrajectorySample& sample,
                               double decision_threshold = 0.5) {
  return Classifier{discriminator, dae_model, scaler, decision_threshold}.classify_sample(sample);
}

struct TrajectoryVerdict {
  VerdictKind kind = VerdictKind::Abnormal;
  std::vector<Verdict> samples;
  std::size_t abnormal_samples = 0;

  [[nodiscard]] double abnormal_fraction() const {
    return samples.empty() ? 0.0 : static_cast<double>(abnormal_samples) / static_cast<double>(samples.size());
  }
};

/// Aggregates per-sample verdicts with the behavioural rule.
inline TrajectoryVerdict aggregate(std::vector<Verdict> samples, double behavioural_threshold) {
  TrajectoryVerdict out;
  for (const auto& v : samples) out.abnormal_samples += v.abnormal() ? 1 : 0;
  out.kind = behavioural_verdict(out.abnormal_samples, samples.size(), behavioural_threshold);
  out.samples = std::move(samples);
  return out;
}

inline TrajectoryVerdict classify_trajectory(const nn::MlpModel& discriminator, const nn::MlpModel& dae_model,
                                             const trajectory::Scaler& scaler,
                                             const trajectory::CompleteTrajectory& traj, double behavioural_threshold,
                                             std::size_t m, std::size_t stride, double decision_threshold = 0.5) {
  if (!(behavioural_threshold > 0.0 && behavioural_threshold <= 1.0)) {
    throw ValidationError("behavioural threshold must lie in (0, 1]");
  }
  const auto windows = trajectory::extract_windows(traj, m, stride, scaler.mode());
  if (windows.empty()) {
    throw NoSamplesError("trajectory '" + traj.object_id + "' has " + std::to_string(traj.size()) +
                         " points, fewer than m = " + std::to_string(m) + "; no samples to classify");
  }
  const Classifier c{discriminator, dae_model, scaler, decision_threshold};
  std::vector<Verdict> verdicts;
  for (double s : c.scores(windows)) verdicts.push_back(verdict_from_score(s, decision_threshold));
  return aggregate(std::move(verdicts), behavioural_threshold);
}

}  // namespace alrec::adversarial
