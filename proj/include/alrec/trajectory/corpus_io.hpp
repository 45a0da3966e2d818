#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/core/io.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::trajectory {

inline constexpr int kCorpusFormatVersion = 1;

/// A labelled set of complete trajectories plus free-form provenance (the
/// scene spec and seed for synthetic corpora, the source file for ingested).
struct Corpus {
  std::vector<CompleteTrajectory> trajectories;
  nlohmann::json provenance = nlohmann::json::object();

  /// Extended features are available only if every trajectory has them.
  [[nodiscard]] bool supports(FeatureMode mode) const {
    if (mode == FeatureMode::Basic) return true;
    for (const auto& t : trajectories) {
      if (!t.has_shape) return false;
    }
    return !trajectories.empty();
  }
  [[nodiscard]] bool fully_labelled() const {
    for (const auto& t : trajectories) {
      if (t.label == TrajectoryLabel::Unlabelled) return false;
    }
    return true;
  }
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline nlohmann::json trajectory_to_json(const CompleteTrajectory& t) {
  std::vector<std::int64_t> frames;
  std::vector<double> x, y, vx, vy, h, w, o;
  for (const auto& p : t.points) {
    frames.push_back(p.frame);
    x.push_back(p.x);
    y.push_back(p.y);
    vx.push_back(p.vx);
    vy.push_back(p.vy);
    h.push_back(p.height);
    w.push_back(p.width);
    o.push_back(p.orientation);
  }
  nlohmann::json j = {{"object_id", t.object_id},
                      {"class", to_string(t.road_user)},
                      {"label", to_string(t.label)},
                      {"abnormality", t.abnormality},
                      {"has_shape", t.has_shape},
                      {"frame", frames},
                      {"x", x},
                      {"y", y},
                      {"vx", vx},
                      {"vy", vy}};
  if (t.has_shape) {
    j["h"] = h;
    j["w"] = w;
    j["o"] = o;
  }
  return j;
}

inline CompleteTrajectory trajectory_from_json(const nlohmann::json& j) {
  CompleteTrajectory t;
  t.object_id = j.at("object_id").get<std::string>();
  t.road_user = road_user_from_string(j.at("class").get<std::string>());
  t.label = label_from_string(j.at("label").get<std::string>());
  t.abnormality = j.value("abnormality", "");
  t.has_shape = j.value("has_shape", false);
  const auto frames = j.at("frame").get<std::vector<std::int64_t>>();
  const auto x = j.at("x").get<std::vector<double>>();
  const auto y = j.at("y").get<std::vector<double>>();
  const auto vx = j.at("vx").get<std::vector<double>>();
  const auto vy = j.at("vy").get<std::vector<double>>();
  const std::size_t n = frames.size();
  if (x.size() != n || y.size() != n || vx.size() != n || vy.size() != n) {
    throw IoError("trajectory '" + t.object_id + "': column lengths differ");
  }
  std::vector<double> h(n), w(n), o(n);
  if (t.has_shape) {
    h = j.at("h").get<std::vector<double>>();
    w = j.at("w").get<std::vector<double>>();
    o = j.at("o").get<std::vector<double>>();
    if (h.size() != n || w.size() != n || o.size() != n) {
      throw IoError("trajectory '" + t.object_id + "': shape column lengths differ");
    }
  }
  if (n < 2) throw IoError("trajectory '" + t.object_id + "' has fewer than 2 points");
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0 && frames[i] <= frames[i - 1]) {
      throw IoError("trajectory '" + t.object_id + "': frames are not strictly increasing");
    }
    t.points.push_back({frames[i], x[i], y[i], vx[i], vy[i], h[i], w[i], o[i]});
  }
  return t;
}

inline nlohmann::json corpus_to_json(const Corpus& corpus) {
  nlohmann::json trajs = nlohmann::json::array();
  for (const auto& t : corpus.trajectories) trajs.push_back(trajectory_to_json(t));
  return {{"format", "alrec-corpus"},
          {"version", kCorpusFormatVersion},
          {"provenance", corpus.provenance},
          {"trajectories", std::move(trajs)}};
}

inline Corpus corpus_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "alrec-corpus") throw IoError("not an alrec-corpus document");
    if (doc.at("version").get<int>() != kCorpusFormatVersion) throw IoError("unsupported corpus format version");
    Corpus c;
    c.provenance = doc.value("provenance", nlohmann::json::object());
    for (const auto& j : doc.at("trajectories")) c.trajectories.push_back(trajectory_from_json(j));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed corpus document: ") + e.what());
  } catch (const ValidationError& e) {
    throw IoError(std::string("malformed corpus document: ") + e.what());
  }
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  write_text_file(path, dump_json(corpus_to_json(corpus)));
}

inline Corpus load_corpus(const std::filesystem::path& path) {
  try {
    return corpus_from_json(read_json_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace alrec::trajectory
