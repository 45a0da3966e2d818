#pragma once

#include <vector>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::trajectory {

/// Jittered copies of a trajectory. Each copy is shifted by one Gaussian
/// offset (std `offset_scale` px in x and y), has its displacement from the
/// first point scaled by 1 + N(0, speed_scale^2), and then gets independent
/// per-point Gaussian noise (std `point_noise` px) on every position.
/// Velocities are recomputed from the resulting positions.
struct AugmentConfig {
  std::size_t copies = 4;
  double point_noise = 0.0;
  double offset_scale = 4.0;
  double speed_scale = 0.1;

  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> e;
    if (!(point_noise >= 0.0)) e.emplace_back("augment.point_noise must be non-negative");
    if (!(offset_scale >= 0.0)) e.emplace_back("augment.offset_scale must be non-negative");
    if (!(speed_scale >= 0.0 && speed_scale < 0.5)) e.emplace_back("augment.speed_scale must lie in [0, 0.5)");
    return e;
  }
};

inline void to_json(nlohmann::json& j, const AugmentConfig& c) {
  j = {{"copies", c.copies},
       {"point_noise", c.point_noise},
       {"offset_scale", c.offset_scale},
       {"speed_scale", c.speed_scale}};
}
inline void from_json(const nlohmann::json& j, AugmentConfig& c) {
  c.copies = j.value("copies", c.copies);
  c.point_noise = j.value("point_noise", c.point_noise);
  c.offset_scale = j.value("offset_scale", c.offset_scale);
  c.speed_scale = j.value("speed_scale", c.speed_scale);
}

inline std::vector<CompleteTrajectory> augment(const CompleteTrajectory& traj, const AugmentConfig& config, Rng& rng) {
  if (auto errors = config.validate(); !errors.empty()) throw ValidationError(errors.front());
  std::vector<CompleteTrajectory> out;
  out.reserve(config.copies);
  for (std::size_t c = 0; c < config.copies; ++c) {
    CompleteTrajectory copy = traj;
    const bool coherent = config.offset_scale > 0.0 || config.speed_scale > 0.0;
    if (coherent && !copy.points.empty()) {
      const double dx = rng.normal(0.0, config.offset_scale);
      const double dy = rng.normal(0.0, config.offset_scale);
      const double scale = 1.0 + rng.normal(0.0, config.speed_scale);
      const double x0 = traj.points.front().x;
      const double y0 = traj.points.front().y;
      for (auto& p : copy.points) {
        p.x = x0 + scale * (p.x - x0) + dx;
        p.y = y0 + scale * (p.y - y0) + dy;
      }
    }
    if (config.point_noise > 0.0) {
      for (auto& p : copy.points) {
        p.x += rng.normal(0.0, config.point_noise);
        p.y += rng.normal(0.0, config.point_noise);
      }
    }
    if (coherent || config.point_noise > 0.0) recompute_velocities(copy.points);
    out.push_back(std::move(copy));
  }
  return out;
}

/// Per-point noise only: zero-mean Gaussian (std = noise_scale px) on every
/// position.
inline std::vector<CompleteTrajectory> augment(const CompleteTrajectory& traj, std::size_t copies,
                                               double noise_scale, Rng& rng) {
  if (!(noise_scale >= 0.0)) throw ValidationError("noise scale must be non-negative");
  return augment(traj, AugmentConfig{copies, noise_scale, 0.0, 0.0}, rng);
}

}  // namespace alrec::trajectory
