#pragma once

#include <span>
#include <string>
#include <vector>

#include "alrec/core/error.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::trajectory {

/// Flattens consecutive points into one sample prefixed by the class code.
inline TrajectorySample flatten_points(RoadUser road_user, std::span<const TrackPoint> points, FeatureMode mode) {
  TrajectorySample s;
  s.mode = mode;
  s.points = points.size();
  s.values.reserve(sample_length(mode, points.size()));
  s.values.push_back(encode_road_user(road_user));
  for (const auto& p : points) {
    s.values.insert(s.values.end(), {p.x, p.y, p.vx, p.vy});
    if (mode == FeatureMode::Extended) s.values.insert(s.values.end(), {p.height, p.width, p.orientation});
  }
  return s;
}

struct UnflattenedSample {
  RoadUser road_user;
  std::vector<TrackPoint> points;  // frame indices are not stored in a sample
};

inline UnflattenedSample unflatten_sample(const TrajectorySample& s) {
  const std::size_t stride = features_per_point(s.mode);
  if (s.values.size() != sample_length(s.mode, s.points)) {
    throw ValidationError("sample length " + std::to_string(s.values.size()) + " does not match " +
                          std::to_string(s.points) + " points in " + std::string(to_string(s.mode)) + " mode");
  }
  UnflattenedSample out{decode_road_user(s.values[0]), {}};
  out.points.reserve(s.points);
  for (std::size_t i = 0; i < s.points; ++i) {
    const double* v = s.values.data() + 1 + i * stride;
    TrackPoint p;
    p.x = v[0];
    p.y = v[1];
    p.vx = v[2];
    p.vy = v[3];
    if (s.mode == FeatureMode::Extended) {
      p.height = v[4];
      p.width = v[5];
      p.orientation = v[6];
    }
    out.points.push_back(p);
  }
  return out;
}

/// Number of windows a trajectory of `length` points yields.
inline std::size_t window_count(std::size_t length, std::size_t m, std::size_t stride) {
  return length < m ? 0 : (length - m) / stride + 1;
}

/// Slides a window of m points with the given stride. Trajectories shorter
/// than m yield nothing and append a note to `warnings` when supplied.
inline std::vector<TrajectorySample> extract_windows(const CompleteTrajectory& traj, std::size_t m,
                                                     std::size_t stride, FeatureMode mode = FeatureMode::Basic,
                                                     std::vector<std::string>* warnings = nullptr) {
  if (m < 2) throw ValidationError("window size m must be at least 2");
  if (stride < 1) throw ValidationError("window stride must be at least 1");
  if (mode == FeatureMode::Extended && !traj.has_shape) {
    throw MismatchError("trajectory '" + traj.object_id + "' has no box shape; extended windows need h, w, o");
  }
  const std::size_t n = window_count(traj.size(), m, stride);
  if (n == 0 && warnings != nullptr) {
    warnings->push_back("trajectory '" + traj.object_id + "' has " + std::to_string(traj.size()) +
                        " points, fewer than m = " + std::to_string(m) + "; no samples");
  }
  std::vector<TrajectorySample> out;
  out.reserve(n);
  const std::span<const TrackPoint> points(traj.points);
  for (std::size_t k = 0; k < n; ++k) out.push_back(flatten_points(traj.road_user, points.subspan(k * stride, m), mode));
  return out;
}

}  // namespace alrec::trajectory
