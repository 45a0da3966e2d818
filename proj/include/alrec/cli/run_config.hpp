#pragma once

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/adversarial/alrec.hpp"
#include "alrec/core/error.hpp"
#include "alrec/core/hash.hpp"
#include "alrec/core/io.hpp"
#include "alrec/dae/dae.hpp"
#include "alrec/eval/experiment.hpp"
#include "alrec/eval/scene.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::cli {

using trajectory::FeatureMode;

inline constexpr std::uint64_t kDefaultSeed = 1;

/// Behavioural thresholds 1%..20% used by --sweep-thresholds.
inline std::vector<double> default_sweep_thresholds() {
  std::vector<double> t;
  for (int p = 1; p <= 20; ++p) t.push_back(p / 100.0);
  return t;
}

/// Values given on the command line; unset fields leave lower-priority
/// sources in charge.
struct Overrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> m;
  std::optional<std::size_t> stride;
  std::optional<std::string> feature_mode;
  std::optional<double> behavioural_threshold;
  std::optional<std::size_t> emax;
  bool sweep_thresholds = false;
  bool plots = false;
};

/// Fully resolved configuration of one command.
struct RunConfig {
  std::uint64_t seed = kDefaultSeed;
  eval::PipelineConfig pipeline;
  dae::DaeConfig dae;
  adversarial::AlrecConfig alrec;
  eval::SceneSpec scene = eval::default_scene_spec();
  std::vector<double> sweep_thresholds;
  bool plots = false;

  [[nodiscard]] FeatureMode feature_mode() const { return pipeline.feature_mode; }

  /// Every problem, not just the first.
  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> e = pipeline.validate();
    for (auto& s : dae.validate()) e.push_back(std::move(s));
    for (auto& s : alrec.validate()) e.push_back(std::move(s));
    for (auto& s : scene.validate()) e.push_back(std::move(s));
    if (alrec.feature_mode != pipeline.feature_mode) e.emplace_back("alrec and pipeline feature modes disagree");
    if (alrec.seed != seed || scene.seed != seed) e.emplace_back("component seeds must equal the global seed");
    const std::size_t n = trajectory::sample_length(pipeline.feature_mode, pipeline.m);
    if (alrec.pmse_blocks > 0 && n % alrec.pmse_blocks != 0) {
      e.push_back("sample length N = " + std::to_string(n) + " (m = " + std::to_string(pipeline.m) + ", " +
                  std::string(trajectory::to_string(pipeline.feature_mode)) +
                  " mode) is not divisible by alrec.pmse_blocks M = " + std::to_string(alrec.pmse_blocks));
    }
    if (dae.extended_extra_layer != (pipeline.feature_mode == FeatureMode::Extended)) {
      e.emplace_back("dae.extended_extra_layer must be true exactly in extended mode");
    }
    for (double t : sweep_thresholds) {
      if (!(t > 0.0 && t <= 1.0)) e.push_back("sweep threshold " + std::to_string(t) + " must lie in (0, 1]");
    }
    return e;
  }

  void require_valid() const {
    const auto e = validate();
    if (e.empty()) return;
    std::string msg = "invalid configuration (" + std::to_string(e.size()) + " problem" + (e.size() == 1 ? "" : "s") + "):";
    for (const auto& s : e) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
};

/// The config-file layout: flag-mirroring keys at the top level plus one
/// section per component. Keys owned by a top-level flag are left out of the
/// sections, so this document loads back through `--config` unchanged.
inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json alrec = c.alrec;
  alrec.erase("feature_mode");
  alrec.erase("seed");
  alrec.erase("max_epochs");
  nlohmann::json scene = c.scene;
  scene.erase("seed");
  return {{"seed", c.seed},
          {"m", c.pipeline.m},
          {"stride", c.pipeline.stride},
          {"feature_mode", trajectory::to_string(c.pipeline.feature_mode)},
          {"behavioural_threshold", c.pipeline.behavioural_threshold},
          {"emax", c.alrec.max_epochs},
          {"sweep_thresholds", c.sweep_thresholds},
          {"plots", c.plots},
          {"pipeline",
           {{"augment", c.pipeline.augment},
            {"train_fraction", c.pipeline.train_fraction},
            {"baseline_k_sigma", c.pipeline.baseline_k_sigma}}},
          {"dae", c.dae},
          {"alrec", std::move(alrec)},
          {"scene", std::move(scene)}};
}

inline std::string config_hash(const RunConfig& c) { return content_hash(dump_json(to_json(c))); }

inline eval::ExperimentConfig experiment_config(const RunConfig& c) {
  return {c.seed, c.pipeline, c.dae, c.alrec, c.sweep_thresholds, to_json(c), config_hash(c)};
}

namespace detail {

inline const std::set<std::string> kTopKeys{"seed",  "m",        "stride", "feature_mode", "behavioural_threshold",
                                            "emax",  "sweep_thresholds", "plots",  "pipeline",
                                            "dae",   "alrec",    "scene"};
inline const std::set<std::string> kPipelineKeys{"augment", "train_fraction", "baseline_k_sigma"};
inline const std::set<std::string> kAugmentKeys{"copies", "point_noise", "offset_scale", "speed_scale"};
inline const std::set<std::string> kDaeKeys{"hidden_sizes", "epochs", "batch_size", "learning_rate",
                                            "extended_extra_layer"};
inline const std::set<std::string> kAlrecKeys{"pmse_blocks",        "noise_size",          "generator_hidden",
                                              "discriminator_hidden", "batch_size",        "discriminator_lr",
                                              "k_consecutive",      "real_accuracy_gate", "generator_stop_level",
                                              "decision_threshold", "rmsprop_decay",      "rmsprop_epsilon"};
inline const std::set<std::string> kSceneKeys{"frame_size",      "surfaces", "normal_agents", "abnormal_agents",
                                              "speed",           "abnormality_mix", "duration", "lateral_sway",
                                              "speed_jitter",    "emit_shape"};

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where,
                       std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(where + " must be an object");
    return;
  }
  for (const auto& [key, value] : j.items()) {
    if (allowed.contains(key)) continue;
    std::string msg = "unknown key '" + (where.empty() ? key : where + "." + key) + "'";
    if (where == "alrec" && key == "max_epochs") msg += " (set it with the top-level key 'emax')";
    if (key == "seed" || key == "feature_mode" || key == "m" || key == "stride" || key == "behavioural_threshold") {
      msg += " (set it with the top-level key '" + key + "')";
    }
    errors.push_back(std::move(msg));
  }
}

/// Runs `f`, turning JSON type errors into a message about `where`.
template <typename F>
void guarded(const std::string& where, std::vector<std::string>& errors, F&& f) {
  try {
    f();
  } catch (const nlohmann::json::exception& e) {
    errors.push_back(where + ": " + e.what());
  } catch (const ValidationError& e) {
    errors.push_back(where + ": " + e.what());
  }
}

inline std::optional<std::uint64_t> env_seed(std::vector<std::string>& errors) {
  const char* v = std::getenv("ALREC_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  try {
    std::size_t used = 0;
    const auto seed = std::stoull(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument("trailing characters");
    return seed;
  } catch (const std::exception&) {
    errors.push_back(std::string("ALREC_SEED='") + v + "' is not an unsigned integer");
    return std::nullopt;
  }
}

}  // namespace detail

/// Merges defaults <- config file <- flags. `scene_file` is a scene spec
/// given to `synth`; its seed ranks below the config file and above
/// ALREC_SEED. Problems are collected and reported together.
inline RunConfig resolve_run_config(const Overrides& flags, const nlohmann::json* scene_file = nullptr) {
  std::vector<std::string> errors;
  nlohmann::json file = nlohmann::json::object();
  if (flags.config_path) {
    file = read_json_file(*flags.config_path);
    detail::check_keys(file, detail::kTopKeys, "", errors);
    if (!file.is_object()) file = nlohmann::json::object();
  }

  FeatureMode mode = FeatureMode::Basic;
  detail::guarded("feature_mode", errors, [&] {
    if (flags.feature_mode) mode = trajectory::feature_mode_from_string(*flags.feature_mode);
    else if (file.contains("feature_mode")) mode = trajectory::feature_mode_from_string(file["feature_mode"].get<std::string>());
  });

  RunConfig c;
  c.pipeline.feature_mode = mode;
  c.dae = dae::DaeConfig::for_mode(mode);
  c.alrec = adversarial::AlrecConfig::for_mode(mode);

  if (file.contains("pipeline")) {
    const auto& p = file["pipeline"];
    detail::check_keys(p, detail::kPipelineKeys, "pipeline", errors);
    detail::guarded("pipeline", errors, [&] {
      if (p.contains("augment")) {
        detail::check_keys(p["augment"], detail::kAugmentKeys, "pipeline.augment", errors);
        c.pipeline.augment = p["augment"].get<trajectory::AugmentConfig>();
      }
      c.pipeline.train_fraction = p.value("train_fraction", c.pipeline.train_fraction);
      c.pipeline.baseline_k_sigma = p.value("baseline_k_sigma", c.pipeline.baseline_k_sigma);
    });
  }
  if (file.contains("dae")) {
    detail::check_keys(file["dae"], detail::kDaeKeys, "dae", errors);
    detail::guarded("dae", errors, [&] { from_json(file["dae"], c.dae); });
  }
  if (file.contains("alrec")) {
    detail::check_keys(file["alrec"], detail::kAlrecKeys, "alrec", errors);
    detail::guarded("alrec", errors, [&] { from_json(file["alrec"], c.alrec); });
    c.alrec.feature_mode = mode;
  }
  if (scene_file != nullptr) {
    auto keys = detail::kSceneKeys;
    keys.insert("seed");
    detail::check_keys(*scene_file, keys, "scene spec", errors);
    detail::guarded("scene spec", errors, [&] { c.scene = scene_file->get<eval::SceneSpec>(); });
  } else if (file.contains("scene")) {
    detail::check_keys(file["scene"], detail::kSceneKeys, "scene", errors);
    detail::guarded("scene", errors, [&] { c.scene = file["scene"].get<eval::SceneSpec>(); });
  }

  detail::guarded("config", errors, [&] {
    c.pipeline.m = file.value("m", c.pipeline.m);
    c.pipeline.stride = file.value("stride", c.pipeline.stride);
    c.pipeline.behavioural_threshold = file.value("behavioural_threshold", c.pipeline.behavioural_threshold);
    c.alrec.max_epochs = file.value("emax", c.alrec.max_epochs);
    c.plots = file.value("plots", false);
    if (file.contains("sweep_thresholds")) {
      const auto& s = file["sweep_thresholds"];
      c.sweep_thresholds = s.is_boolean() ? (s.get<bool>() ? default_sweep_thresholds() : std::vector<double>{})
                                          : s.get<std::vector<double>>();
    }
  });

  if (flags.m) c.pipeline.m = *flags.m;
  if (flags.stride) c.pipeline.stride = *flags.stride;
  if (flags.behavioural_threshold) c.pipeline.behavioural_threshold = *flags.behavioural_threshold;
  if (flags.emax) c.alrec.max_epochs = *flags.emax;
  if (flags.sweep_thresholds && c.sweep_thresholds.empty()) c.sweep_thresholds = default_sweep_thresholds();
  if (flags.plots) c.plots = true;

  std::optional<std::uint64_t> seed = flags.seed;
  detail::guarded("seed", errors, [&] {
    if (!seed && file.contains("seed")) seed = file["seed"].get<std::uint64_t>();
    if (!seed && scene_file != nullptr && scene_file->contains("seed")) seed = (*scene_file)["seed"].get<std::uint64_t>();
  });
  if (!seed) seed = detail::env_seed(errors);
  c.seed = seed.value_or(kDefaultSeed);
  c.alrec.seed = c.seed;
  c.scene.seed = c.seed;

  for (auto& e : c.validate()) errors.push_back(std::move(e));
  if (!errors.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(errors.size()) + " problem" +
                      (errors.size() == 1 ? "" : "s") + "):";
    for (const auto& s : errors) msg += "\n  - " + s;
    throw ValidationError(msg);
  }
  return c;
}

}  // namespace alrec::cli
