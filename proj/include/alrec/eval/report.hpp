#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace alrec::eval {

/// Sample-level rates for one model and one road-user type ("all" for the
/// whole test set).
struct RateRow {
  std::string model;
  std::string road_user;
  std::size_t size_normal = 0;
  std::size_t size_abnormal = 0;
  std::optional<double> nda;
  std::optional<double> ada;
};

/// Complete-trajectory results of one model at one behavioural threshold.
/// nda / ada here are per-trajectory recalls; ccr equals nda.
struct BehaviouralRow {
  std::string model;
  double threshold = 0.05;
  std::size_t normal_trajectories = 0;
  std::size_t abnormal_trajectories = 0;
  std::optional<double> dacc;
  std::optional<double> ccr;
  std::optional<double> ada;
};

struct EvalReport {
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json run_config = nlohmann::json::object();
  nlohmann::json training = nlohmann::json::object();
  std::vector<RateRow> samples;
  std::vector<BehaviouralRow> behavioural;
  std::vector<BehaviouralRow> sweep;
  std::vector<std::string> notes;

  [[nodiscard]] const RateRow* find_sample_row(std::string_view model, std::string_view road_user) const {
    for (const auto& r : samples) {
      if (r.model == model && r.road_user == road_user) return &r;
    }
    return nullptr;
  }
  [[nodiscard]] const BehaviouralRow* find_behavioural_row(std::string_view model) const {
    for (const auto& r : behavioural) {
      if (r.model == model) return &r;
    }
    return nullptr;
  }
};

namespace detail {

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

inline nlohmann::json behavioural_json(const BehaviouralRow& r) {
  return {{"model", r.model},
          {"threshold", r.threshold},
          {"normal_trajectories", r.normal_trajectories},
          {"abnormal_trajectories", r.abnormal_trajectories},
          {"dacc", opt(r.dacc)},
          {"ccr", opt(r.ccr)},
          {"ada", opt(r.ada)}};
}

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * 100.0);
  return buf;
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"model", s.model},
                       {"road_user", s.road_user},
                       {"size_normal", s.size_normal},
                       {"size_abnormal", s.size_abnormal},
                       {"nda", detail::opt(s.nda)},
                       {"ada", detail::opt(s.ada)}});
  }
  nlohmann::json behavioural = nlohmann::json::array();
  for (const auto& b : r.behavioural) behavioural.push_back(detail::behavioural_json(b));
  nlohmann::json sweep = nlohmann::json::array();
  for (const auto& b : r.sweep) sweep.push_back(detail::behavioural_json(b));
  return {{"format", "alrec-report"},
          {"version", 1},
          {"seed", r.seed},
          {"config_hash", r.config_hash},
          {"run_config", r.run_config},
          {"training", r.training},
          {"samples", std::move(samples)},
          {"behavioural", std::move(behavioural)},
          {"sweep", std::move(sweep)},
          {"notes", r.notes}};
}

/// Plain-text rendering of the report tables.
inline std::string render_table(const EvalReport& r) {
  std::ostringstream out;
  char line[256];
  out << "seed " << r.seed << ", config " << r.config_hash << "\n\n";
  out << "Sample-level detection (%)\n";
  std::snprintf(line, sizeof(line), "%-9s %-11s %9s %9s %9s %9s\n", "model", "road user", "normal", "abnormal", "NDA",
                "ADA");
  out << line;
  for (const auto& s : r.samples) {
    std::snprintf(line, sizeof(line), "%-9s %-11s %9zu %9zu %9s %9s\n", s.model.c_str(), s.road_user.c_str(),
                  s.size_normal, s.size_abnormal, detail::percent(s.nda).c_str(), detail::percent(s.ada).c_str());
    out << line;
  }
  auto behavioural_table = [&](const std::vector<BehaviouralRow>& rows) {
    std::snprintf(line, sizeof(line), "%-9s %9s %9s %9s %9s %9s %9s\n", "model", "threshold", "normal", "abnormal",
                  "DACC", "CCR", "ADA");
    out << line;
    for (const auto& b : rows) {
      std::snprintf(line, sizeof(line), "%-9s %8.0f%% %9zu %9zu %9s %9s %9s\n", b.model.c_str(), b.threshold * 100.0,
                    b.normal_trajectories, b.abnormal_trajectories, detail::percent(b.dacc).c_str(),
                    detail::percent(b.ccr).c_str(), detail::percent(b.ada).c_str());
      out << line;
    }
  };
  out << "\nComplete trajectories (%)\n";
  behavioural_table(r.behavioural);
  if (!r.sweep.empty()) {
    out << "\nBehavioural threshold sweep (%)\n";
    behavioural_table(r.sweep);
  }
  if (!r.notes.empty()) {
    out << "\nNotes\n";
    for (const auto& n : r.notes) out << "- " << n << "\n";
  }
  return out.str();
}

/// Trajectory-level NDA (= CCR) and ADA against the behavioural threshold,
/// one polyline per model and rate.
inline std::string render_sweep_svg(const EvalReport& r) {
  constexpr double kWidth = 640, kHeight = 400, kLeft = 60, kRight = 160, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  double t_min = 1.0, t_max = 0.0;
  for (const auto& b : r.sweep) {
    t_min = std::min(t_min, b.threshold);
    t_max = std::max(t_max, b.threshold);
  }
  if (!(t_max > t_min)) {
    t_min = 0.0;
    t_max = 1.0;
  }
  auto px = [&](double t) { return kLeft + (t - t_min) / (t_max - t_min) * plot_w; };
  auto py = [&](double v) { return kTop + (1.0 - v) * plot_h; };

  std::ostringstream svg;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" font-family=\"sans-serif\" "
                "font-size=\"12\">\n",
                kWidth, kHeight);
  svg << buf << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof(buf),
                "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
                kTop, plot_w, plot_h);
  svg << buf;
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"end\">%.2f</text>\n", kLeft - 6,
                  py(v) + 4, v);
    svg << buf;
  }
  for (const auto& b : r.sweep) {
    if (b.model != r.sweep.front().model) break;
    std::snprintf(buf, sizeof(buf), "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%.0f</text>\n",
                  px(b.threshold), kTop + plot_h + 16, b.threshold * 100.0);
    svg << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">behavioural threshold (%%)</text>\n",
                kLeft + plot_w / 2, kHeight - 10);
  svg << buf;

  struct Series {
    std::string model;
    bool ada;
    const char* colour;
    const char* dash;
  };
  const Series series[] = {{"alrec", false, "#1f77b4", ""},
                           {"alrec", true, "#d62728", ""},
                           {"baseline", false, "#1f77b4", "6,4"},
                           {"baseline", true, "#d62728", "6,4"}};
  int legend_row = 0;
  for (const auto& s : series) {
    std::string points;
    for (const auto& b : r.sweep) {
      const auto& v = s.ada ? b.ada : b.ccr;
      if (b.model != s.model || !v) continue;
      std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", px(b.threshold), py(*v));
      points += buf;
    }
    if (points.empty()) continue;
    svg << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"2\" stroke-dasharray=\"" << s.dash
        << "\" points=\"" << points << "\"/>\n";
    const double ly = kTop + 10 + 18 * legend_row++;
    std::snprintf(buf, sizeof(buf),
                  "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"%s\" stroke-width=\"2\" "
                  "stroke-dasharray=\"%s\"/><text x=\"%.1f\" y=\"%.1f\">%s %s</text>\n",
                  kLeft + plot_w + 10, ly, kLeft + plot_w + 34, ly, s.colour, s.dash, kLeft + plot_w + 40, ly + 4,
                  s.model.c_str(), s.ada ? "ADA" : "NDA");
    svg << buf;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace alrec::eval
