#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/trajectory/corpus_io.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::eval {

using trajectory::CompleteTrajectory;
using trajectory::RoadUser;

enum class SurfaceKind { Road, Sidewalk, BikePath };
enum class Abnormality { WrongWay, OffPath, WrongSurface };

inline std::string_view to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::Road: return "road";
    case SurfaceKind::Sidewalk: return "sidewalk";
    case SurfaceKind::BikePath: return "bike_path";
  }
  return "road";
}
inline SurfaceKind surface_kind_from_string(std::string_view s) {
  if (s == "road") return SurfaceKind::Road;
  if (s == "sidewalk") return SurfaceKind::Sidewalk;
  if (s == "bike_path") return SurfaceKind::BikePath;
  throw ValidationError("unknown surface kind '" + std::string(s) + "'");
}
inline std::string_view to_string(Abnormality a) {
  switch (a) {
    case Abnormality::WrongWay: return "wrong_way";
    case Abnormality::OffPath: return "off_path";
    case Abnormality::WrongSurface: return "class_on_wrong_surface";
  }
  return "wrong_way";
}

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// A straight strip of half-width `half_width` around the segment start->end.
/// One-way strips are travelled from start to end only.
struct Surface {
  std::string name;
  SurfaceKind kind = SurfaceKind::Road;
  Vec2 start;
  Vec2 end;
  double half_width = 10.0;
  bool one_way = false;
  std::vector<RoadUser> allowed;

  [[nodiscard]] bool allows(RoadUser u) const { return std::find(allowed.begin(), allowed.end(), u) != allowed.end(); }
  [[nodiscard]] double length() const { return std::hypot(end.x - start.x, end.y - start.y); }
};

struct SpeedRange {
  double min = 1.0;
  double max = 2.0;
};

struct AgentCounts {
  std::size_t pedestrian = 0;
  std::size_t car = 0;
  std::size_t bike = 0;
  [[nodiscard]] std::size_t total() const { return pedestrian + car + bike; }
};

struct SceneSpec {
  double frame_width = 640.0;
  double frame_height = 480.0;
  std::vector<Surface> surfaces;
  AgentCounts normal;
  AgentCounts abnormal;
  std::map<RoadUser, SpeedRange> speed;
  /// Relative weights of the abnormality kinds; kinds that cannot apply to
  /// a class (e.g. wrong_way for a class with no one-way surface) are skipped.
  std::map<Abnormality, double> abnormality_mix;
  /// Time each agent stays in view, in frames (cut short at the border).
  double min_duration = 500.0;
  double max_duration = 700.0;
  /// Peak lateral sway in pixels (a slow sinusoid, capped so agents stay
  /// on their strip) and the stationary std of the relative speed, which
  /// wanders slowly from frame to frame.
  double lateral_sway = 0.0;
  double speed_jitter = 0.03;
  /// Emit box height, width and orientation (enables extended features).
  bool emit_shape = true;
  std::uint64_t seed = 1;

  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> errors;
    if (!(frame_width > 0 && frame_height > 0)) errors.emplace_back("scene: frame size must be positive");
    for (const auto& s : surfaces) {
      if (!(s.half_width > 0)) errors.push_back("scene: surface '" + s.name + "' needs a positive half_width");
      if (!(s.length() > 0)) errors.push_back("scene: surface '" + s.name + "' has zero length");
    }
    for (const auto& [u, r] : speed) {
      if (!(r.min > 0 && r.max >= r.min)) {
        errors.push_back("scene: speed range for " + std::string(trajectory::to_string(u)) + " is invalid");
      }
    }
    if (!(min_duration > 0 && max_duration >= min_duration)) errors.emplace_back("scene: duration range is invalid");
    if (lateral_sway < 0 || speed_jitter < 0) errors.emplace_back("scene: jitter must be non-negative");
    return errors;
  }
};

/// The default urban layout: two one-way car lanes, two sidewalks and a
/// two-way bike path, 40 normal and 12 abnormal agents.
inline SceneSpec default_scene_spec() {
  SceneSpec s;
  s.surfaces = {
      {"bike_path", SurfaceKind::BikePath, {0, 140}, {640, 140}, 9, false, {RoadUser::Bike}},
      {"north_sidewalk", SurfaceKind::Sidewalk, {0, 178}, {640, 178}, 11, false, {RoadUser::Pedestrian}},
      {"eastbound_lane", SurfaceKind::Road, {0, 222}, {640, 222}, 14, true, {RoadUser::Car}},
      {"westbound_lane", SurfaceKind::Road, {640, 262}, {0, 262}, 14, true, {RoadUser::Car}},
      {"south_sidewalk", SurfaceKind::Sidewalk, {0, 306}, {640, 306}, 11, false, {RoadUser::Pedestrian}},
  };
  s.normal = {16, 14, 10};
  s.abnormal = {4, 5, 3};
  s.speed = {{RoadUser::Pedestrian, {1.2, 1.8}}, {RoadUser::Car, {4.0, 7.0}}, {RoadUser::Bike, {2.0, 3.5}}};
  s.abnormality_mix = {{Abnormality::WrongWay, 1.0}, {Abnormality::OffPath, 1.0}, {Abnormality::WrongSurface, 1.0}};
  return s;
}

// ---- JSON --------------------------------------------------------------

inline void to_json(nlohmann::json& j, const SceneSpec& s) {
  nlohmann::json surfaces = nlohmann::json::array();
  for (const auto& sf : s.surfaces) {
    std::vector<std::string> allowed;
    for (auto u : sf.allowed) allowed.emplace_back(trajectory::to_string(u));
    surfaces.push_back({{"name", sf.name},
                        {"kind", to_string(sf.kind)},
                        {"start", {sf.start.x, sf.start.y}},
                        {"end", {sf.end.x, sf.end.y}},
                        {"half_width", sf.half_width},
                        {"one_way", sf.one_way},
                        {"allowed", allowed}});
  }
  auto counts = [](const AgentCounts& c) {
    return nlohmann::json{{"pedestrian", c.pedestrian}, {"car", c.car}, {"bike", c.bike}};
  };
  nlohmann::json speed = nlohmann::json::object();
  for (const auto& [u, r] : s.speed) speed[std::string(trajectory::to_string(u))] = {r.min, r.max};
  nlohmann::json mix = nlohmann::json::object();
  for (const auto& [a, w] : s.abnormality_mix) mix[std::string(to_string(a))] = w;
  j = {{"frame_size", {s.frame_width, s.frame_height}},
       {"surfaces", surfaces},
       {"normal_agents", counts(s.normal)},
       {"abnormal_agents", counts(s.abnormal)},
       {"speed", speed},
       {"abnormality_mix", mix},
       {"duration", {s.min_duration, s.max_duration}},
       {"lateral_sway", s.lateral_sway},
       {"speed_jitter", s.speed_jitter},
       {"emit_shape", s.emit_shape},
       {"seed", s.seed}};
}

/// Missing keys fall back to the default scene.
inline void from_json(const nlohmann::json& j, SceneSpec& s) {
  s = default_scene_spec();
  if (j.contains("frame_size")) {
    s.frame_width = j["frame_size"].at(0).get<double>();
    s.frame_height = j["frame_size"].at(1).get<double>();
  }
  if (j.contains("surfaces")) {
    s.surfaces.clear();
    for (const auto& js : j["surfaces"]) {
      Surface sf;
      sf.name = js.at("name").get<std::string>();
      sf.kind = surface_kind_from_string(js.at("kind").get<std::string>());
      sf.start = {js.at("start").at(0).get<double>(), js.at("start").at(1).get<double>()};
      sf.end = {js.at("end").at(0).get<double>(), js.at("end").at(1).get<double>()};
      sf.half_width = js.at("half_width").get<double>();
      sf.one_way = js.value("one_way", false);
      for (const auto& a : js.at("allowed")) sf.allowed.push_back(trajectory::road_user_from_string(a.get<std::string>()));
      s.surfaces.push_back(std::move(sf));
    }
  }
  auto read_counts = [&](const char* key, AgentCounts& c) {
    if (!j.contains(key)) return;
    const auto& jc = j[key];
    c.pedestrian = jc.value("pedestrian", std::size_t{0});
    c.car = jc.value("car", std::size_t{0});
    c.bike = jc.value("bike", std::size_t{0});
  };
  read_counts("normal_agents", s.normal);
  read_counts("abnormal_agents", s.abnormal);
  if (j.contains("speed")) {
    for (const auto& [name, r] : j["speed"].items()) {
      s.speed[trajectory::road_user_from_string(name)] = {r.at(0).get<double>(), r.at(1).get<double>()};
    }
  }
  if (j.contains("abnormality_mix")) {
    s.abnormality_mix.clear();
    for (const auto& [name, w] : j["abnormality_mix"].items()) {
      if (name == "wrong_way") s.abnormality_mix[Abnormality::WrongWay] = w.get<double>();
      else if (name == "off_path") s.abnormality_mix[Abnormality::OffPath] = w.get<double>();
      else if (name == "class_on_wrong_surface") s.abnormality_mix[Abnormality::WrongSurface] = w.get<double>();
      else throw ValidationError("unknown abnormality kind '" + name + "'");
    }
  }
  if (j.contains("duration")) {
    s.min_duration = j["duration"].at(0).get<double>();
    s.max_duration = j["duration"].at(1).get<double>();
  }
  s.lateral_sway = j.value("lateral_sway", s.lateral_sway);
  s.speed_jitter = j.value("speed_jitter", s.speed_jitter);
  s.emit_shape = j.value("emit_shape", s.emit_shape);
  s.seed = j.value("seed", s.seed);
}

// ---- generation ----------------------------------------------------------

namespace detail {

struct BoxSize {
  double width;
  double height;
};

inline BoxSize nominal_box(RoadUser u) {
  switch (u) {
    case RoadUser::Car: return {42.0, 20.0};
    case RoadUser::Pedestrian: return {10.0, 26.0};
    case RoadUser::Bike: return {22.0, 18.0};
    case RoadUser::Other: return {16.0, 16.0};
  }
  return {16.0, 16.0};
}

struct Path {
  Vec2 origin;  // on the centre line
  Vec2 heading;  // unit vector
  double lateral_offset = 0.0;
  double lateral_limit = 0.0;  // > 0 keeps the lateral offset inside a strip
};

inline Vec2 unit(Vec2 v) {
  const double n = std::hypot(v.x, v.y);
  return {v.x / n, v.y / n};
}

/// Frame-to-frame correlation of the speed factor.
inline constexpr double kPaceCorrelation = 0.995;

/// Walks `travel` pixels along `path` at `speed` px/frame with jitter, stopping
/// early at the frame border.
inline std::vector<trajectory::TrackPoint> walk(const Path& path, double speed, double travel, std::int64_t first_frame,
                                                RoadUser u, const SceneSpec& spec, Rng& rng) {
  const Vec2 normal{-path.heading.y, path.heading.x};
  const BoxSize box = nominal_box(u);
  const double box_scale = rng.uniform(0.9, 1.1);
  std::vector<trajectory::TrackPoint> pts;
  double along = 0.0;
  double lateral = path.lateral_offset;
  double sway = spec.lateral_sway;
  if (path.lateral_limit > 0.0) sway = std::min(sway, (path.lateral_limit - std::abs(path.lateral_offset)) / 2.0);
  const double period = rng.uniform(150.0, 400.0);
  const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  double pace = spec.speed_jitter * rng.normal();
  const double keep = std::sqrt(1.0 - kPaceCorrelation * kPaceCorrelation);
  std::int64_t frame = first_frame;
  while (along <= travel) {
    const double x = path.origin.x + along * path.heading.x + lateral * normal.x;
    const double y = path.origin.y + along * path.heading.y + lateral * normal.y;
    if (x < 0 || y < 0 || x > spec.frame_width || y > spec.frame_height) break;
    trajectory::TrackPoint p;
    p.frame = frame++;
    p.x = x;
    p.y = y;
    if (spec.emit_shape) {
      p.width = box.width * box_scale;
      p.height = box.height * box_scale;
      p.orientation = std::atan2(path.heading.y, path.heading.x);
    }
    pts.push_back(p);
    along += speed * std::max(0.2, 1.0 + pace);
    pace = kPaceCorrelation * pace + keep * spec.speed_jitter * rng.normal();
    const double t = static_cast<double>(frame - first_frame);
    lateral = path.lateral_offset + sway * (std::sin(2.0 * std::numbers::pi * t / period + phase) - std::sin(phase));
    if (path.lateral_limit > 0.0) lateral = std::clamp(lateral, -path.lateral_limit, path.lateral_limit);
  }
  trajectory::recompute_velocities(pts);
  return pts;
}

/// A path along the surface axis. `reverse` travels end->start. The lateral
/// offset stays at least `margin` inside the strip.
inline Path along_surface(const Surface& s, bool reverse, double travel, Rng& rng) {
  const Vec2 a = reverse ? s.end : s.start;
  const Vec2 b = reverse ? s.start : s.end;
  const Vec2 heading = unit({b.x - a.x, b.y - a.y});
  const double len = s.length();
  const double slack = std::max(0.0, len - travel);
  const double begin = rng.uniform(0.0, slack);
  const double limit = std::max(0.5, s.half_width - 3.0);
  const double offset = rng.uniform(-0.6 * limit, 0.6 * limit);
  return {{a.x + begin * heading.x, a.y + begin * heading.y}, heading, offset, limit};
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.uniform_index(items.size())];
}

}  // namespace detail

/// Deterministic labelled corpus for `spec`: normal agents follow an allowed
/// surface in an allowed direction; abnormal agents each instantiate one
/// abnormality kind and keep violating it for their whole track.
inline trajectory::Corpus synth_scene(const SceneSpec& spec) {
  if (auto errors = spec.validate(); !errors.empty()) throw ValidationError(errors.front());
  Rng rng = Rng::substream(spec.seed, "scene");
  trajectory::Corpus corpus;
  nlohmann::json spec_json = spec;
  corpus.provenance = {{"generator", "synth_scene"}, {"scene", spec_json}};

  auto speed_for = [&](RoadUser u) {
    auto it = spec.speed.find(u);
    if (it == spec.speed.end()) {
      throw ValidationError("scene: no speed range for " + std::string(trajectory::to_string(u)));
    }
    return rng.uniform(it->second.min, it->second.max);
  };
  auto allowed_surfaces = [&](RoadUser u, bool one_way_only) {
    std::vector<const Surface*> out;
    for (const auto& s : spec.surfaces) {
      if (s.allows(u) && (!one_way_only || s.one_way)) out.push_back(&s);
    }
    return out;
  };
  auto forbidden_surfaces = [&](RoadUser u) {
    std::vector<const Surface*> out;
    for (const auto& s : spec.surfaces) {
      if (!s.allows(u)) out.push_back(&s);
    }
    return out;
  };
  auto emit = [&](RoadUser u, std::vector<trajectory::TrackPoint> pts, bool abnormal, std::string kind,
                  std::size_t index) {
    CompleteTrajectory t;
    t.object_id = std::string(trajectory::to_string(u)) + (abnormal ? "_a" : "_n") + std::to_string(index);
    t.road_user = u;
    t.points = std::move(pts);
    t.label = abnormal ? trajectory::TrajectoryLabel::Abnormal : trajectory::TrajectoryLabel::Normal;
    t.has_shape = spec.emit_shape;
    t.abnormality = std::move(kind);
    if (t.points.size() < 2) throw ValidationError("scene: agent '" + t.object_id + "' left the frame immediately");
    corpus.trajectories.push_back(std::move(t));
  };

  const RoadUser classes[] = {RoadUser::Pedestrian, RoadUser::Car, RoadUser::Bike};
  auto count_of = [](const AgentCounts& c, RoadUser u) {
    return u == RoadUser::Pedestrian ? c.pedestrian : u == RoadUser::Car ? c.car : c.bike;
  };

  for (RoadUser u : classes) {
    const auto surfaces = allowed_surfaces(u, false);
    const std::size_t n = count_of(spec.normal, u);
    if (n > 0 && surfaces.empty()) {
      throw ValidationError("scene: no surface allows " + std::string(trajectory::to_string(u)));
    }
    for (std::size_t i = 0; i < n; ++i) {
      // Round-robin over surfaces and directions keeps every lane populated.
      const Surface& s = *surfaces[i % surfaces.size()];
      const bool reverse = !s.one_way && (i / surfaces.size()) % 2 == 1;
      const double speed = speed_for(u);
      const double travel = speed * rng.uniform(spec.min_duration, spec.max_duration);
      const auto path = detail::along_surface(s, reverse, travel, rng);
      const auto first = static_cast<std::int64_t>(rng.uniform_index(600));
      emit(u, detail::walk(path, speed, travel, first, u, spec, rng), false, "", i);
    }
  }

  for (RoadUser u : classes) {
    const std::size_t n = count_of(spec.abnormal, u);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::pair<Abnormality, double>> options;
      for (const auto& [kind, weight] : spec.abnormality_mix) {
        if (weight <= 0) continue;
        const bool applicable = kind == Abnormality::WrongWay   ? !allowed_surfaces(u, true).empty()
                                : kind == Abnormality::OffPath ? !allowed_surfaces(u, false).empty()
                                                               : !forbidden_surfaces(u).empty();
        if (applicable) options.emplace_back(kind, weight);
      }
      if (options.empty()) {
        throw ValidationError("scene: no abnormality kind applies to " + std::string(trajectory::to_string(u)));
      }
      double total = 0.0;
      for (const auto& o : options) total += o.second;
      double r = rng.uniform(0.0, total);
      Abnormality kind = options.back().first;
      for (const auto& o : options) {
        if (r < o.second) {
          kind = o.first;
          break;
        }
        r -= o.second;
      }

      const double speed = speed_for(u);
      const double travel = speed * rng.uniform(spec.min_duration, spec.max_duration);
      const auto first = static_cast<std::int64_t>(rng.uniform_index(600));
      detail::Path path;
      switch (kind) {
        case Abnormality::WrongWay:
          path = detail::along_surface(*detail::pick(allowed_surfaces(u, true), rng), true, travel, rng);
          break;
        case Abnormality::WrongSurface: {
          const Surface& s = *detail::pick(forbidden_surfaces(u), rng);
          path = detail::along_surface(s, s.one_way ? false : rng.uniform() < 0.5, travel, rng);
          break;
        }
        case Abnormality::OffPath: {
          // Leave an allowed surface diagonally, 30-60 degrees off its axis,
          // towards the centre of the frame.
          const Surface& s = *detail::pick(allowed_surfaces(u, false), rng);
          const bool reverse = !s.one_way && rng.uniform() < 0.5;
          auto base = detail::along_surface(s, reverse, travel, rng);
          const Vec2 normal{-base.heading.y, base.heading.x};
          const Vec2 centre{spec.frame_width / 2, spec.frame_height / 2};
          base.origin = {base.origin.x + base.lateral_offset * normal.x, base.origin.y + base.lateral_offset * normal.y};
          base.lateral_offset = 0.0;
          const double towards =
              (centre.x - base.origin.x) * normal.x + (centre.y - base.origin.y) * normal.y >= 0 ? 1.0 : -1.0;
          const double angle = rng.uniform(30.0, 60.0) * std::numbers::pi / 180.0;
          base.heading = detail::unit({std::cos(angle) * base.heading.x + towards * std::sin(angle) * normal.x,
                                       std::cos(angle) * base.heading.y + towards * std::sin(angle) * normal.y});
          base.lateral_limit = 0.0;
          path = base;
          break;
        }
      }
      emit(u, detail::walk(path, speed, travel, first, u, spec, rng), true, std::string(to_string(kind)), i);
    }
  }
  return corpus;
}

}  // namespace alrec::eval
