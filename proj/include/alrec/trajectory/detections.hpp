#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "alrec/core/error.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::trajectory {

/// Gaps of up to this many missing frames are linearly interpolated; longer
/// gaps split the track.
inline constexpr std::int64_t kMaxInterpolatedGap = 5;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_double(const std::string& cell, const char* column, std::size_t line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw IoError("line " + std::to_string(line) + ": column '" + column + "' is not a finite number: '" + cell + "'");
  }
  return v;
}

inline std::int64_t parse_frame(const std::string& cell, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || v < 0) {
    throw IoError("line " + std::to_string(line) + ": frame must be a non-negative integer, got '" + cell + "'");
  }
  return v;
}

inline TrackPoint to_point(const Detection& d) {
  TrackPoint p;
  p.frame = d.frame;
  p.x = d.center_x;
  p.y = d.center_y;
  p.height = d.box_height.value_or(0.0);
  p.width = d.box_width.value_or(0.0);
  p.orientation = d.orientation.value_or(0.0);
  return p;
}

inline TrackPoint lerp(const TrackPoint& a, const TrackPoint& b, std::int64_t frame) {
  const double t = static_cast<double>(frame - a.frame) / static_cast<double>(b.frame - a.frame);
  TrackPoint p;
  p.frame = frame;
  p.x = a.x + t * (b.x - a.x);
  p.y = a.y + t * (b.y - a.y);
  p.height = a.height + t * (b.height - a.height);
  p.width = a.width + t * (b.width - a.width);
  p.orientation = a.orientation + t * (b.orientation - a.orientation);
  return p;
}

}  // namespace detail

/// Parses the detection CSV. Required columns: frame, object_id, class, cx,
/// cy, w, h; optional: orientation, label. Cells for w, h, orientation may be
/// empty. Errors carry 1-based line numbers.
inline std::vector<Detection> parse_detections_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<Detection> out;
  std::map<std::string, std::size_t> column;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (column.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) column[lowercase(cells[i])] = i;
      for (const char* required : {"frame", "object_id", "class", "cx", "cy", "w", "h"}) {
        if (!column.contains(required)) {
          throw IoError("line " + std::to_string(line_no) + ": header lacks column '" + required + "'");
        }
      }
      continue;
    }
    if (cells.size() != column.size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(column.size()) +
                    " cells, found " + std::to_string(cells.size()));
    }
    auto cell = [&](const char* name) -> const std::string& { return cells[column.at(name)]; };
    auto optional_cell = [&](const char* name) -> std::optional<std::string> {
      auto it = column.find(name);
      if (it == column.end() || cells[it->second].empty()) return std::nullopt;
      return cells[it->second];
    };
    Detection d;
    d.frame = detail::parse_frame(cell("frame"), line_no);
    d.object_id = cell("object_id");
    if (d.object_id.empty()) throw IoError("line " + std::to_string(line_no) + ": empty object_id");
    try {
      d.road_user = road_user_from_string(cell("class"));
      if (auto l = optional_cell("label")) d.label = label_from_string(*l);
    } catch (const ValidationError& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    d.center_x = detail::parse_double(cell("cx"), "cx", line_no);
    d.center_y = detail::parse_double(cell("cy"), "cy", line_no);
    if (auto w = optional_cell("w")) d.box_width = detail::parse_double(*w, "w", line_no);
    if (auto h = optional_cell("h")) d.box_height = detail::parse_double(*h, "h", line_no);
    if ((d.box_width && *d.box_width <= 0.0) || (d.box_height && *d.box_height <= 0.0)) {
      throw IoError("line " + std::to_string(line_no) + ": box width and height must be positive");
    }
    if (auto o = optional_cell("orientation")) d.orientation = detail::parse_double(*o, "orientation", line_no);
    out.push_back(std::move(d));
  }
  return out;
}

/// Groups detections into complete trajectories: sorted by frame, short gaps
/// interpolated, long gaps split (pieces named "<id>#<k>"), velocities derived.
inline std::vector<CompleteTrajectory> assemble_trajectories(std::vector<Detection> detections,
                                                             std::vector<std::string>* warnings = nullptr) {
  std::map<std::string, std::vector<Detection>> by_object;
  for (auto& d : detections) by_object[d.object_id].push_back(std::move(d));

  std::vector<CompleteTrajectory> out;
  for (auto& [id, dets] : by_object) {
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.frame < b.frame; });
    for (std::size_t i = 1; i < dets.size(); ++i) {
      if (dets[i].frame == dets[i - 1].frame) {
        throw ValidationError("duplicate detection for object '" + id + "' at frame " + std::to_string(dets[i].frame));
      }
      if (dets[i].road_user != dets[i - 1].road_user) {
        throw ValidationError("object '" + id + "' changes class at frame " + std::to_string(dets[i].frame));
      }
    }
    const bool has_shape = std::all_of(dets.begin(), dets.end(), [](const Detection& d) {
      return d.box_width.has_value() && d.box_height.has_value() && d.orientation.has_value();
    });
    // Any abnormal row marks the whole object abnormal.
    TrajectoryLabel label = TrajectoryLabel::Unlabelled;
    for (const auto& d : dets) {
      if (!d.label || *d.label == TrajectoryLabel::Unlabelled) continue;
      if (*d.label == TrajectoryLabel::Abnormal || label == TrajectoryLabel::Unlabelled) label = *d.label;
    }

    std::vector<std::vector<TrackPoint>> pieces(1);
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const TrackPoint p = detail::to_point(dets[i]);
      if (i > 0) {
        const TrackPoint& prev = pieces.back().back();
        const std::int64_t missing = p.frame - prev.frame - 1;
        if (missing > kMaxInterpolatedGap) {
          pieces.emplace_back();
        } else {
          for (std::int64_t f = prev.frame + 1; f < p.frame; ++f) pieces.back().push_back(detail::lerp(prev, p, f));
        }
      }
      pieces.back().push_back(p);
    }

    for (std::size_t k = 0; k < pieces.size(); ++k) {
      const std::string name = pieces.size() == 1 ? id : id + "#" + std::to_string(k);
      if (pieces[k].size() < 2) {
        if (warnings != nullptr) warnings->push_back("track '" + name + "' has a single point; dropped");
        continue;
      }
      CompleteTrajectory t;
      t.object_id = name;
      t.road_user = dets.front().road_user;
      t.points = std::move(pieces[k]);
      t.label = label;
      t.has_shape = has_shape;
      recompute_velocities(t.points);
      out.push_back(std::move(t));
    }
  }
  return out;
}

inline std::vector<CompleteTrajectory> load_detections(std::istream& in, std::vector<std::string>* warnings = nullptr) {
  return assemble_trajectories(parse_detections_csv(in), warnings);
}

inline std::vector<CompleteTrajectory> load_detections(const std::filesystem::path& path,
                                                       std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open detection file '" + path.string() + "'");
  try {
    return load_detections(in, warnings);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace alrec::trajectory
