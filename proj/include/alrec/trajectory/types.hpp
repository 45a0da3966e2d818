#pragma once

#include <cctype>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alrec/core/error.hpp"

namespace alrec::trajectory {

enum class RoadUser { Pedestrian, Car, Bike, Other };
enum class TrajectoryLabel { Normal, Abnormal, Unlabelled };

/// Basic windows carry (x, y, vx, vy) per point; Extended adds
/// (h, w, o) from the bounding box.
enum class FeatureMode { Basic, Extended };

inline constexpr std::size_t features_per_point(FeatureMode mode) {
  return mode == FeatureMode::Basic ? 4 : 7;
}
inline constexpr std::size_t sample_length(FeatureMode mode, std::size_t points) {
  return 1 + features_per_point(mode) * points;
}

/// Ordinal embedding of the class label u in [0, 1].
inline constexpr double encode_road_user(RoadUser u) {
  switch (u) {
    case RoadUser::Pedestrian: return 0.0;
    case RoadUser::Car: return 0.5;
    case RoadUser::Bike: return 1.0;
    case RoadUser::Other: return 0.25;
  }
  return 0.25;
}

inline RoadUser decode_road_user(double code) {
  if (code == 0.0) return RoadUser::Pedestrian;
  if (code == 0.5) return RoadUser::Car;
  if (code == 1.0) return RoadUser::Bike;
  if (code == 0.25) return RoadUser::Other;
  throw ValidationError("value " + std::to_string(code) + " is not a class-label code");
}

inline std::string_view to_string(RoadUser u) {
  switch (u) {
    case RoadUser::Pedestrian: return "pedestrian";
    case RoadUser::Car: return "car";
    case RoadUser::Bike: return "bike";
    case RoadUser::Other: return "other";
  }
  return "other";
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline RoadUser road_user_from_string(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "pedestrian") return RoadUser::Pedestrian;
  if (n == "car") return RoadUser::Car;
  if (n == "bike") return RoadUser::Bike;
  if (n == "other") return RoadUser::Other;
  throw ValidationError("unknown road-user class '" + std::string(name) + "'");
}

inline std::string_view to_string(TrajectoryLabel l) {
  switch (l) {
    case TrajectoryLabel::Normal: return "normal";
    case TrajectoryLabel::Abnormal: return "abnormal";
    case TrajectoryLabel::Unlabelled: return "unlabelled";
  }
  return "unlabelled";
}

inline TrajectoryLabel label_from_string(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "normal") return TrajectoryLabel::Normal;
  if (n == "abnormal") return TrajectoryLabel::Abnormal;
  if (n == "unlabelled" || n == "unlabeled" || n.empty()) return TrajectoryLabel::Unlabelled;
  throw ValidationError("unknown trajectory label '" + std::string(name) + "'");
}

inline std::string_view to_string(FeatureMode m) { return m == FeatureMode::Basic ? "basic" : "extended"; }

inline FeatureMode feature_mode_from_string(std::string_view name) {
  const std::string n = lowercase(name);
  if (n == "basic") return FeatureMode::Basic;
  if (n == "extended") return FeatureMode::Extended;
  throw ValidationError("unknown feature mode '" + std::string(name) + "' (expected basic or extended)");
}

struct Detection {
  std::int64_t frame = 0;
  std::string object_id;
  RoadUser road_user = RoadUser::Other;
  double center_x = 0.0;
  double center_y = 0.0;
  std::optional<double> box_width;
  std::optional<double> box_height;
  std::optional<double> orientation;  // radians
  std::optional<TrajectoryLabel> label;
};

struct TrackPoint {
  std::int64_t frame = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double height = 0.0;
  double width = 0.0;
  double orientation = 0.0;

  friend bool operator==(const TrackPoint&, const TrackPoint&) = default;
};

struct CompleteTrajectory {
  std::string object_id;
  RoadUser road_user = RoadUser::Other;
  std::vector<TrackPoint> points;
  TrajectoryLabel label = TrajectoryLabel::Unlabelled;
  /// True when every point carries box height, width and orientation.
  bool has_shape = false;
  /// Free-form tag for synthetic abnormal agents ("wrong_way", ...).
  std::string abnormality;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  friend bool operator==(const CompleteTrajectory&, const CompleteTrajectory&) = default;
};

/// One flattened window: [u, x1, y1, vx1, vy1, (h1, w1, o1,) ..., xm, ...].
/// Raw samples hold pixel units; normalized samples lie in [0, 1].
struct TrajectorySample {
  std::vector<double> values;
  FeatureMode mode = FeatureMode::Basic;
  std::size_t points = 0;

  [[nodiscard]] std::size_t size() const { return values.size(); }
  friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

/// Recomputes vx, vy as backward differences per frame; the first point
/// copies the second point's velocity.
inline void recompute_velocities(std::vector<TrackPoint>& points) {
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto dt = static_cast<double>(points[i].frame - points[i - 1].frame);
    points[i].vx = (points[i].x - points[i - 1].x) / dt;
    points[i].vy = (points[i].y - points[i - 1].y) / dt;
  }
  if (points.size() >= 2) {
    points[0].vx = points[1].vx;
    points[0].vy = points[1].vy;
  }
}

/// Maps orientation in radians from [-pi, pi] onto [0, 1].
inline constexpr double kOrientationMin = -std::numbers::pi;
inline constexpr double kOrientationMax = std::numbers::pi;

}  // namespace alrec::trajectory
