#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/adversarial/alrec.hpp"
#include "alrec/adversarial/bundle.hpp"
#include "alrec/adversarial/classify.hpp"
#include "alrec/core/error.hpp"
#include "alrec/core/hash.hpp"
#include "alrec/core/io.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/dae/dae.hpp"
#include "alrec/eval/baseline.hpp"
#include "alrec/eval/metrics.hpp"
#include "alrec/eval/report.hpp"
#include "alrec/trajectory/augment.hpp"
#include "alrec/trajectory/corpus_io.hpp"
#include "alrec/trajectory/scaler.hpp"
#include "alrec/trajectory/windows.hpp"

namespace alrec::eval {

using trajectory::CompleteTrajectory;
using trajectory::Corpus;
using trajectory::FeatureMode;
using trajectory::TrajectoryLabel;

struct PipelineConfig {
  std::size_t m = 31;
  std::size_t stride = 1;
  FeatureMode feature_mode = FeatureMode::Basic;
  trajectory::AugmentConfig augment;
  double train_fraction = 0.8;
  double behavioural_threshold = 0.05;
  double baseline_k_sigma = 3.0;

  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> e;
    if (m < 2) e.emplace_back("m must be at least 2");
    if (stride < 1) e.emplace_back("stride must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) e.emplace_back("train_fraction must lie in (0, 1)");
    if (!(behavioural_threshold > 0.0 && behavioural_threshold <= 1.0)) {
      e.emplace_back("behavioural_threshold must lie in (0, 1]");
    }
    if (!(baseline_k_sigma > 0.0)) e.emplace_back("baseline_k_sigma must be positive");
    for (auto& s : augment.validate()) e.push_back(std::move(s));
    return e;
  }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"m", c.m},
       {"stride", c.stride},
       {"feature_mode", trajectory::to_string(c.feature_mode)},
       {"augment", c.augment},
       {"train_fraction", c.train_fraction},
       {"behavioural_threshold", c.behavioural_threshold},
       {"baseline_k_sigma", c.baseline_k_sigma}};
}

// ---- split ---------------------------------------------------------------

/// Which whole trajectories train and which test. Normal trajectories are
/// split per road-user type; every abnormal trajectory is a test trajectory.
struct SplitManifest {
  std::string corpus_hash;
  std::uint64_t seed = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

inline nlohmann::json to_json(const SplitManifest& s) {
  return {{"format", "alrec-split"},
          {"corpus_hash", s.corpus_hash},
          {"seed", s.seed},
          {"train_ids", s.train_ids},
          {"test_ids", s.test_ids}};
}

inline SplitManifest split_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "alrec-split") throw IoError("not an alrec-split document");
    return {j.at("corpus_hash").get<std::string>(), j.at("seed").get<std::uint64_t>(),
            j.at("train_ids").get<std::vector<std::string>>(), j.at("test_ids").get<std::vector<std::string>>()};
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed split manifest: ") + e.what());
  }
}

inline std::string corpus_hash(const Corpus& corpus) {
  // Provenance is excluded so that re-labelled copies of the same tracks match.
  Corpus bare = corpus;
  bare.provenance = nlohmann::json::object();
  return content_hash(dump_json(trajectory::corpus_to_json(bare)));
}

inline SplitManifest split_corpus(const Corpus& corpus, double train_fraction, std::uint64_t seed) {
  if (!corpus.fully_labelled()) throw ValidationError("corpus has unlabelled trajectories; a split needs labels");
  SplitManifest s;
  s.corpus_hash = corpus_hash(corpus);
  s.seed = seed;
  Rng rng = Rng::substream(seed, "split");
  std::map<trajectory::RoadUser, std::vector<std::string>> normal_by_class;
  std::set<std::string> seen;
  for (const auto& t : corpus.trajectories) {
    if (!seen.insert(t.object_id).second) throw ValidationError("duplicate trajectory id '" + t.object_id + "'");
    if (t.label == TrajectoryLabel::Normal) normal_by_class[t.road_user].push_back(t.object_id);
  }
  std::set<std::string> train;
  for (auto& [u, ids] : normal_by_class) {
    rng.shuffle(std::span(ids));
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ids.size())));
    train.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, ids.size())));
  }
  for (const auto& t : corpus.trajectories) {
    (train.contains(t.object_id) ? s.train_ids : s.test_ids).push_back(t.object_id);
  }
  return s;
}

// ---- training --------------------------------------------------------------

struct TrainedModels {
  adversarial::ModelBundle bundle;
  adversarial::TrainingLog alrec_log;
  std::size_t training_windows = 0;
  // Wall-clock seconds; reported, never written into artifacts.
  double dae_seconds = 0.0;
  double alrec_seconds = 0.0;
};

inline std::vector<const CompleteTrajectory*> select(const Corpus& corpus, std::span<const std::string> ids) {
  std::map<std::string, const CompleteTrajectory*> by_id;
  for (const auto& t : corpus.trajectories) by_id[t.object_id] = &t;
  std::vector<const CompleteTrajectory*> out;
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw MismatchError("trajectory '" + id + "' is not in the corpus");
    out.push_back(it->second);
  }
  return out;
}

/// Trains the autoencoder, the threshold baseline and ALREC on the normal
/// training trajectories of `split`.
inline TrainedModels train_models(const Corpus& corpus, const SplitManifest& split, const PipelineConfig& pipeline,
                                  const dae::DaeConfig& dae_config, const adversarial::AlrecConfig& alrec_config,
                                  std::uint64_t seed, const nlohmann::json& run_config) {
  if (auto e = pipeline.validate(); !e.empty()) throw ValidationError(e.front());
  if (alrec_config.feature_mode != pipeline.feature_mode) {
    throw MismatchError("ALREC config is in " + std::string(trajectory::to_string(alrec_config.feature_mode)) +
                        " mode but the pipeline is in " + std::string(trajectory::to_string(pipeline.feature_mode)));
  }
  if (!corpus.supports(pipeline.feature_mode)) {
    throw MismatchError("extended feature mode needs box height, width and orientation on every trajectory; "
                        "this corpus has basic (position-only) trajectories");
  }
  Rng rng = Rng::substream(seed, "augmentation");
  std::vector<trajectory::TrajectorySample> windows;
  for (const auto* t : select(corpus, split.train_ids)) {
    if (t->label != TrajectoryLabel::Normal) throw ValidationError("training trajectory '" + t->object_id + "' is not normal");
    auto add = [&](const CompleteTrajectory& tr) {
      auto w = trajectory::extract_windows(tr, pipeline.m, pipeline.stride, pipeline.feature_mode);
      windows.insert(windows.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
    };
    add(*t);
    for (const auto& copy : trajectory::augment(*t, pipeline.augment, rng)) add(copy);
  }
  if (windows.empty()) throw NoSamplesError("the normal training trajectories yield no windows of m = " + std::to_string(pipeline.m));

  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); };
  TrainedModels out;
  out.training_windows = windows.size();
  auto& b = out.bundle;
  b.scaler = trajectory::Scaler::fit(windows);
  const nn::Matrix x = b.scaler.apply_columns(windows);
  auto start = Clock::now();
  auto dae_result = dae::train_dae(x, dae_config, seed);
  out.dae_seconds = seconds_since(start);
  b.dae_model = std::move(dae_result.model);
  b.dae_seed = seed;
  b.dae_epoch_mse = std::move(dae_result.epoch_mse);
  const auto baseline = baseline_fit_threshold(b.dae_model, x, pipeline.baseline_k_sigma);
  b.baseline_threshold = baseline.threshold;
  b.baseline_k_sigma = baseline.k_sigma;

  start = Clock::now();
  auto alrec = adversarial::train_alrec(b.dae_model, b.scaler, x, alrec_config);
  out.alrec_seconds = seconds_since(start);
  b.discriminator = std::move(alrec.discriminator);
  b.generator = std::move(alrec.generator);
  b.alrec_seed = alrec_config.seed;
  b.decision_threshold = alrec_config.decision_threshold;
  b.m = pipeline.m;
  b.stride = pipeline.stride;
  b.stop_reason = alrec.log.stop_reason;
  b.epochs_run = alrec.log.epochs.size();
  b.run_config = run_config;
  out.alrec_log = std::move(alrec.log);
  return out;
}

// ---- evaluation ------------------------------------------------------------

/// Per-window decisions of both models for one trajectory.
struct ScoredTrajectory {
  const CompleteTrajectory* trajectory = nullptr;
  std::vector<adversarial::Verdict> alrec;
  std::vector<double> mse;
  std::vector<bool> baseline_abnormal;
};

/// Scores every window of `t`. Both models see exactly the same windows.
inline ScoredTrajectory score_trajectory(const adversarial::ModelBundle& b, const CompleteTrajectory& t) {
  ScoredTrajectory s;
  s.trajectory = &t;
  const auto windows = trajectory::extract_windows(t, b.m, b.stride, b.feature_mode());
  if (windows.empty()) return s;
  const adversarial::Classifier c{b.discriminator, b.dae_model, b.scaler, b.decision_threshold};
  for (double score : c.scores(windows)) s.alrec.push_back(adversarial::verdict_from_score(score, b.decision_threshold));
  const nn::Matrix x = b.scaler.apply_columns(windows);
  s.mse = dae::mse_batch(x, dae::reconstruct_batch(b.dae_model, x));
  const ThresholdBaseline baseline{b.baseline_threshold, b.baseline_k_sigma};
  for (double v : s.mse) s.baseline_abnormal.push_back(baseline.is_abnormal(v));
  return s;
}

namespace detail {

/// Contiguous flags; std::vector<bool> cannot be viewed as a span.
class Flags {
 public:
  void push_back(bool v) {
    if (size_ == capacity_) {
      capacity_ = std::max<std::size_t>(64, 2 * capacity_);
      auto grown = std::make_unique<bool[]>(capacity_);
      std::copy_n(data_.get(), size_, grown.get());
      data_ = std::move(grown);
    }
    data_[size_++] = v;
  }
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::span<const bool> span() const { return {data_.get(), size_}; }

 private:
  std::unique_ptr<bool[]> data_;
  std::size_t size_ = 0;
  std::size_t capacity_ = 0;
};

inline std::size_t count_abnormal(const ScoredTrajectory& s, bool alrec) {
  if (alrec) {
    return static_cast<std::size_t>(
        std::count_if(s.alrec.begin(), s.alrec.end(), [](const adversarial::Verdict& v) { return v.abnormal(); }));
  }
  return static_cast<std::size_t>(std::count(s.baseline_abnormal.begin(), s.baseline_abnormal.end(), true));
}

inline BehaviouralRow behavioural_row(const std::vector<ScoredTrajectory>& scored, bool alrec, double threshold) {
  Flags predicted, truth;
  for (const auto& s : scored) {
    const std::size_t total = alrec ? s.alrec.size() : s.mse.size();
    if (total == 0) continue;
    predicted.push_back(adversarial::behavioural_verdict(count_abnormal(s, alrec), total, threshold) ==
                        adversarial::VerdictKind::Abnormal);
    truth.push_back(s.trajectory->label == TrajectoryLabel::Abnormal);
  }
  BehaviouralRow row;
  row.model = alrec ? "alrec" : "baseline";
  row.threshold = threshold;
  if (truth.size() == 0) return row;
  const auto rates = evaluate_behavioural(predicted.span(), truth.span());
  row.normal_trajectories = rates.counts.normal_total;
  row.abnormal_trajectories = rates.counts.abnormal_total;
  row.dacc = rates.dacc;
  row.ccr = rates.ccr;
  if (rates.counts.abnormal_total > 0) {
    row.ada = static_cast<double>(rates.counts.abnormal_correct) / static_cast<double>(rates.counts.abnormal_total);
  }
  return row;
}

inline RateRow sample_row(const std::vector<ScoredTrajectory>& scored, bool alrec,
                          std::optional<trajectory::RoadUser> road_user) {
  Flags predicted, truth;
  for (const auto& s : scored) {
    if (road_user && s.trajectory->road_user != *road_user) continue;
    const bool abnormal = s.trajectory->label == TrajectoryLabel::Abnormal;
    if (alrec) {
      for (const auto& v : s.alrec) {
        predicted.push_back(v.abnormal());
        truth.push_back(abnormal);
      }
    } else {
      for (bool v : s.baseline_abnormal) {
        predicted.push_back(v);
        truth.push_back(abnormal);
      }
    }
  }
  const auto rates = evaluate_samples(predicted.span(), truth.span());
  RateRow row;
  row.model = alrec ? "alrec" : "baseline";
  row.road_user = road_user ? std::string(trajectory::to_string(*road_user)) : "all";
  row.size_normal = rates.counts.normal_total;
  row.size_abnormal = rates.counts.abnormal_total;
  row.nda = rates.nda;
  row.ada = rates.ada;
  return row;
}

}  // namespace detail

/// Scores the labelled trajectories `test_ids` with both models and fills the
/// sample-level, complete-trajectory and (optional) sweep tables.
inline EvalReport evaluate_models(const adversarial::ModelBundle& bundle, const Corpus& corpus,
                                  std::span<const std::string> test_ids, double behavioural_threshold,
                                  std::span<const double> sweep_thresholds = {}) {
  if (!(behavioural_threshold > 0.0 && behavioural_threshold <= 1.0)) {
    throw ValidationError("behavioural threshold must lie in (0, 1]");
  }
  EvalReport report;
  std::vector<ScoredTrajectory> scored;
  std::size_t skipped = 0;
  for (const auto* t : select(corpus, test_ids)) {
    if (t->label == TrajectoryLabel::Unlabelled) {
      throw ValidationError("trajectory '" + t->object_id + "' is unlabelled; evaluation needs labels");
    }
    auto s = score_trajectory(bundle, *t);
    if (s.alrec.empty()) {
      ++skipped;
      continue;
    }
    scored.push_back(std::move(s));
  }
  if (scored.empty()) throw NoSamplesError("no test trajectory is long enough to yield a window");
  if (skipped > 0) {
    report.notes.push_back(std::to_string(skipped) + " test trajectories shorter than m = " + std::to_string(bundle.m) +
                           " were skipped");
  }

  std::set<trajectory::RoadUser> present;
  for (const auto& s : scored) present.insert(s.trajectory->road_user);
  for (bool alrec : {true, false}) {
    for (auto u : present) report.samples.push_back(detail::sample_row(scored, alrec, u));
    report.samples.push_back(detail::sample_row(scored, alrec, std::nullopt));
  }
  for (const auto& r : report.samples) {
    if (!r.ada && r.model == "alrec") {
      report.notes.push_back("ADA is undefined for " + r.road_user + ": no abnormal test samples");
    }
  }
  for (bool alrec : {true, false}) report.behavioural.push_back(detail::behavioural_row(scored, alrec, behavioural_threshold));
  for (bool alrec : {true, false}) {
    for (double t : sweep_thresholds) report.sweep.push_back(detail::behavioural_row(scored, alrec, t));
  }
  report.training = {{"stop_reason", adversarial::to_string(bundle.stop_reason)},
                     {"alrec_epochs", bundle.epochs_run},
                     {"dae_epochs", bundle.dae_epoch_mse.size()},
                     {"dae_final_mse", bundle.dae_epoch_mse.empty() ? nlohmann::json(nullptr)
                                                                    : nlohmann::json(bundle.dae_epoch_mse.back())},
                     {"baseline_threshold", bundle.baseline_threshold}};
  return report;
}

/// Everything one end-to-end run needs besides the corpus.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  PipelineConfig pipeline;
  dae::DaeConfig dae;
  adversarial::AlrecConfig alrec;
  std::vector<double> sweep_thresholds;
  nlohmann::json run_config = nlohmann::json::object();
  std::string config_hash;
};

struct ExperimentResult {
  SplitManifest split;
  TrainedModels models;
  EvalReport report;
};

inline ExperimentResult run_experiment(const Corpus& corpus, const ExperimentConfig& config) {
  ExperimentResult r;
  r.split = split_corpus(corpus, config.pipeline.train_fraction, config.seed);
  r.models = train_models(corpus, r.split, config.pipeline, config.dae, config.alrec, config.seed, config.run_config);
  r.report = evaluate_models(r.models.bundle, corpus, r.split.test_ids, config.pipeline.behavioural_threshold,
                             config.sweep_thresholds);
  r.report.seed = config.seed;
  r.report.run_config = config.run_config;
  r.report.config_hash = config.config_hash;
  return r;
}

}  // namespace alrec::eval
