#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::trajectory {

/// Per-dimension min-max normalization fitted on normal training windows.
/// Orientation dimensions use the fixed range [-pi, pi]. Constant
/// dimensions map to 0.5; everything is clamped into [0, 1].
class Scaler {
 public:
  Scaler() = default;

  [[nodiscard]] bool fitted() const { return !min_.empty(); }
  [[nodiscard]] std::size_t size() const { return min_.size(); }
  [[nodiscard]] FeatureMode mode() const { return mode_; }
  [[nodiscard]] std::size_t points() const { return points_; }
  [[nodiscard]] const std::vector<double>& min() const { return min_; }
  [[nodiscard]] const std::vector<double>& max() const { return max_; }

  static Scaler fit(std::span<const TrajectorySample> samples) {
    if (samples.empty()) throw ValidationError("cannot fit a scaler on zero samples");
    Scaler s;
    s.mode_ = samples.front().mode;
    s.points_ = samples.front().points;
    const std::size_t n = samples.front().size();
    s.min_.assign(samples.front().values.begin(), samples.front().values.end());
    s.max_ = s.min_;
    for (const auto& sample : samples) {
      if (sample.size() != n || sample.mode != s.mode_) {
        throw ValidationError("scaler fit: samples differ in length or feature mode");
      }
      for (std::size_t d = 0; d < n; ++d) {
        s.min_[d] = std::min(s.min_[d], sample.values[d]);
        s.max_[d] = std::max(s.max_[d], sample.values[d]);
      }
    }
    if (s.mode_ == FeatureMode::Extended) {
      const std::size_t stride = features_per_point(s.mode_);
      for (std::size_t i = 0; i < s.points_; ++i) {
        s.min_[1 + i * stride + 6] = kOrientationMin;
        s.max_[1 + i * stride + 6] = kOrientationMax;
      }
    }
    return s;
  }

  /// Direct construction, mostly for tests and deserialization.
  static Scaler from_ranges(std::vector<double> min, std::vector<double> max, FeatureMode mode, std::size_t points) {
    if (min.size() != max.size() || min.empty()) throw ValidationError("scaler ranges must be non-empty and equal length");
    for (std::size_t d = 0; d < min.size(); ++d) {
      if (!(max[d] >= min[d])) throw ValidationError("scaler max < min at dimension " + std::to_string(d));
    }
    Scaler s;
    s.min_ = std::move(min);
    s.max_ = std::move(max);
    s.mode_ = mode;
    s.points_ = points;
    return s;
  }

  [[nodiscard]] double apply_dimension(std::size_t d, double v) const {
    const double range = max_[d] - min_[d];
    if (range == 0.0) return 0.5;
    return std::clamp((v - min_[d]) / range, 0.0, 1.0);
  }

  [[nodiscard]] TrajectorySample apply(const TrajectorySample& sample) const {
    check(sample.size());
    TrajectorySample out = sample;
    for (std::size_t d = 0; d < out.values.size(); ++d) out.values[d] = apply_dimension(d, sample.values[d]);
    return out;
  }

  /// Normalizes many samples into an N x S matrix (one column per sample).
  [[nodiscard]] Eigen::MatrixXd apply_columns(std::span<const TrajectorySample> samples) const {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j) {
      check(samples[j].size());
      for (std::size_t d = 0; d < size(); ++d) {
        m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(j)) = apply_dimension(d, samples[j].values[d]);
      }
    }
    return m;
  }

  [[nodiscard]] nlohmann::json to_json() const {
    return {{"format", "alrec-scaler"},
            {"version", 1},
            {"feature_mode", to_string(mode_)},
            {"points", points_},
            {"min", min_},
            {"max", max_}};
  }

  static Scaler from_json(const nlohmann::json& doc) {
    try {
      if (doc.at("format").get<std::string>() != "alrec-scaler") throw IoError("not an alrec-scaler document");
      return from_ranges(doc.at("min").get<std::vector<double>>(), doc.at("max").get<std::vector<double>>(),
                         feature_mode_from_string(doc.at("feature_mode").get<std::string>()),
                         doc.at("points").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("malformed scaler document: ") + e.what());
    }
  }

 private:
  void check(std::size_t n) const {
    if (!fitted()) throw ValidationError("scaler has not been fitted");
    if (n != size()) {
      throw MismatchError("sample length " + std::to_string(n) + " does not match scaler size " +
                          std::to_string(size()));
    }
  }

  std::vector<double> min_;
  std::vector<double> max_;
  FeatureMode mode_ = FeatureMode::Basic;
  std::size_t points_ = 0;
};

inline Scaler fit_scaler(std::span<const TrajectorySample> samples) { return Scaler::fit(samples); }
inline TrajectorySample apply_scaler(const Scaler& scaler, const TrajectorySample& sample) {
  return scaler.apply(sample);
}

}  // namespace alrec::trajectory
