#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/adversarial/bundle.hpp"
#include "alrec/adversarial/classify.hpp"
#include "alrec/cli/run_config.hpp"
#include "alrec/core/error.hpp"
#include "alrec/core/io.hpp"
#include "alrec/eval/experiment.hpp"
#include "alrec/eval/metrics.hpp"
#include "alrec/eval/report.hpp"
#include "alrec/eval/scene.hpp"
#include "alrec/trajectory/corpus_io.hpp"
#include "alrec/trajectory/detections.hpp"

namespace alrec::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
  kExitOk = 0,
  kExitAbnormal = 1,
  kExitValidation = 2,
  kExitIo = 3,
  kExitMismatch = 4,
  kExitNoSamples = 5,
  kExitInternal = 70,
};

inline constexpr const char* kSplitFile = "split.json";

/// Corpus JSON, or a detection CSV when the extension is .csv.
inline trajectory::Corpus load_input(const fs::path& path, std::vector<std::string>* warnings = nullptr) {
  if (path.extension() == ".csv") {
    trajectory::Corpus c;
    c.trajectories = trajectory::load_detections(path, warnings);
    c.provenance = {{"source", path.filename().string()}};
    return c;
  }
  return trajectory::load_corpus(path);
}

// ---- synth -----------------------------------------------------------------

inline int cmd_synth(const fs::path& spec_path, const fs::path& out_path, const Overrides& flags, std::ostream& out) {
  const auto spec_doc = read_json_file(spec_path);
  const RunConfig config = resolve_run_config(flags, &spec_doc);
  auto corpus = eval::synth_scene(config.scene);
  corpus.provenance["seed"] = config.seed;
  corpus.provenance["run_config"] = to_json(config);
  trajectory::save_corpus(corpus, out_path);
  std::size_t abnormal = 0;
  for (const auto& t : corpus.trajectories) abnormal += t.label == trajectory::TrajectoryLabel::Abnormal ? 1 : 0;
  out << "wrote " << corpus.trajectories.size() << " trajectories (" << corpus.trajectories.size() - abnormal
      << " normal, " << abnormal << " abnormal) to " << out_path.string() << "\n";
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

inline void check_corpus_mode(const trajectory::Corpus& corpus, FeatureMode mode) {
  if (!corpus.supports(mode)) {
    throw MismatchError("configuration asks for " + std::string(trajectory::to_string(mode)) +
                        " feature mode but the corpus has basic (position-only) trajectories; "
                        "use --feature-mode basic or a corpus with box shape and orientation");
  }
}

inline int cmd_train(const fs::path& corpus_path, const fs::path& out_dir, const Overrides& flags, std::ostream& out) {
  const RunConfig config = resolve_run_config(flags);
  const auto corpus = trajectory::load_corpus(corpus_path);
  check_corpus_mode(corpus, config.feature_mode());
  const auto split = eval::split_corpus(corpus, config.pipeline.train_fraction, config.seed);
  if (split.train_ids.empty()) throw ValidationError("corpus has no normal trajectories to train on");
  const auto json = to_json(config);
  auto trained = eval::train_models(corpus, split, config.pipeline, config.dae, config.alrec, config.seed, json);
  adversarial::save_bundle(out_dir, trained.bundle, &trained.alrec_log);
  write_text_file(out_dir / kSplitFile, dump_json(eval::to_json(split)));
  out << "stop_reason: " << adversarial::to_string(trained.bundle.stop_reason) << "\n";
  out << "alrec epochs: " << trained.bundle.epochs_run << "\n";
  out << "training windows: " << trained.training_windows << "\n";
  out << "dae seconds: " << trained.dae_seconds << "\n";
  out << "alrec seconds: " << trained.alrec_seconds << "\n";
  out << "dae first mse: " << (trained.bundle.dae_epoch_mse.empty() ? 0.0 : trained.bundle.dae_epoch_mse.front())
      << "\n";
  out << "dae final mse: " << (trained.bundle.dae_epoch_mse.empty() ? 0.0 : trained.bundle.dae_epoch_mse.back())
      << "\n";
  out << "models written to " << out_dir.string() << "\n";
  return kExitOk;
}

// ---- classify --------------------------------------------------------------

/// Flags that must agree with what the models were trained with.
inline void check_bundle_flags(const adversarial::ModelBundle& b, const Overrides& flags) {
  if (flags.m && *flags.m != b.m) {
    throw MismatchError("--m " + std::to_string(*flags.m) + " conflicts with the models' m = " + std::to_string(b.m));
  }
  if (flags.stride && *flags.stride != b.stride) {
    throw MismatchError("--stride " + std::to_string(*flags.stride) + " conflicts with the models' stride = " +
                        std::to_string(b.stride));
  }
  if (flags.feature_mode && trajectory::feature_mode_from_string(*flags.feature_mode) != b.feature_mode()) {
    throw MismatchError("--feature-mode " + *flags.feature_mode + " conflicts with the models' " +
                        std::string(trajectory::to_string(b.feature_mode())) + " mode");
  }
}

inline std::vector<std::string> heldout_ids(const fs::path& model_dir, const trajectory::Corpus& corpus) {
  const auto split = eval::split_from_json(read_json_file(model_dir / kSplitFile));
  if (split.corpus_hash != eval::corpus_hash(corpus)) {
    throw MismatchError("the input corpus is not the one the models were trained on (split records corpus hash " +
                        split.corpus_hash + ")");
  }
  return split.test_ids;
}

struct ClassifyOptions {
  bool heldout = false;
  std::optional<fs::path> output;
};

inline int cmd_classify(const fs::path& model_dir, const fs::path& input_path, const Overrides& flags,
                        const ClassifyOptions& options, std::ostream& out) {
  const RunConfig config = resolve_run_config(flags);
  const auto bundle = adversarial::load_bundle(model_dir);
  check_bundle_flags(bundle, flags);
  std::vector<std::string> warnings;
  const auto corpus = load_input(input_path, &warnings);
  check_corpus_mode(corpus, bundle.feature_mode());

  std::vector<const trajectory::CompleteTrajectory*> selected;
  if (options.heldout) {
    selected = eval::select(corpus, heldout_ids(model_dir, corpus));
  } else {
    for (const auto& t : corpus.trajectories) selected.push_back(&t);
  }
  const double threshold = config.pipeline.behavioural_threshold;

  nlohmann::json listing = nlohmann::json::array();
  eval::detail::Flags sample_pred, sample_truth, traj_pred, traj_truth;
  bool labelled = true;
  std::size_t classified = 0, abnormal_trajectories = 0;
  for (const auto* t : selected) {
    const auto scored = eval::score_trajectory(bundle, *t);
    nlohmann::json entry = {{"object_id", t->object_id},
                            {"road_user", trajectory::to_string(t->road_user)},
                            {"label", trajectory::to_string(t->label)},
                            {"points", t->size()}};
    if (scored.alrec.empty()) {
      entry["verdict"] = nullptr;
      entry["error"] = "no samples: " + std::to_string(t->size()) + " points, fewer than m = " + std::to_string(bundle.m);
      listing.push_back(std::move(entry));
      continue;
    }
    const auto verdict = adversarial::aggregate(scored.alrec, threshold);
    ++classified;
    if (verdict.kind == adversarial::VerdictKind::Abnormal) ++abnormal_trajectories;
    std::vector<double> scores;
    for (const auto& v : verdict.samples) scores.push_back(v.score);
    entry["verdict"] = adversarial::to_string(verdict.kind);
    entry["samples"] = verdict.samples.size();
    entry["abnormal_samples"] = verdict.abnormal_samples;
    entry["abnormal_fraction"] = verdict.abnormal_fraction();
    entry["scores"] = std::move(scores);
    listing.push_back(std::move(entry));

    if (t->label == trajectory::TrajectoryLabel::Unlabelled) {
      labelled = false;
      continue;
    }
    const bool truth = t->label == trajectory::TrajectoryLabel::Abnormal;
    for (const auto& v : verdict.samples) {
      sample_pred.push_back(v.abnormal());
      sample_truth.push_back(truth);
    }
    traj_pred.push_back(verdict.kind == adversarial::VerdictKind::Abnormal);
    traj_truth.push_back(truth);
  }
  if (classified == 0) {
    throw NoSamplesError(selected.size() == 1
                             ? "trajectory '" + selected.front()->object_id + "' has " +
                                   std::to_string(selected.front()->size()) + " points, fewer than m = " +
                                   std::to_string(bundle.m) + "; no samples to classify"
                             : "no input trajectory has at least m = " + std::to_string(bundle.m) +
                                   " points; no samples to classify");
  }

  nlohmann::json doc = {{"format", "alrec-verdicts"},
                        {"behavioural_threshold", threshold},
                        {"decision_threshold", bundle.decision_threshold},
                        {"m", bundle.m},
                        {"stride", bundle.stride},
                        {"seed", config.seed},
                        {"run_config", to_json(config)},
                        {"model_run_config", bundle.run_config},
                        {"warnings", warnings},
                        {"trajectories", std::move(listing)}};
  if (labelled) {
    const auto s = eval::evaluate_samples(sample_pred.span(), sample_truth.span());
    const auto b = eval::evaluate_behavioural(traj_pred.span(), traj_truth.span());
    doc["metrics"] = {{"nda", eval::detail::opt(s.nda)},
                      {"ada", eval::detail::opt(s.ada)},
                      {"dacc", b.dacc},
                      {"ccr", eval::detail::opt(b.ccr)}};
  }
  const std::string text = dump_json(doc);
  if (options.output) write_text_file(*options.output, text);
  else out << text;
  return abnormal_trajectories > 0 ? kExitAbnormal : kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateOptions {
  std::optional<fs::path> model_dir;
};

inline int cmd_evaluate(const fs::path& corpus_path, const fs::path& report_path, const Overrides& flags,
                        const EvaluateOptions& options, std::ostream& out) {
  RunConfig config = resolve_run_config(flags);
  if (config.plots && config.sweep_thresholds.empty()) config.sweep_thresholds = default_sweep_thresholds();
  const auto corpus = trajectory::load_corpus(corpus_path);
  if (!corpus.fully_labelled()) {
    throw ValidationError("corpus has unlabelled trajectories and cannot be evaluated; use 'classify' for verdicts");
  }
  eval::EvalReport report;
  if (options.model_dir) {
    const auto bundle = adversarial::load_bundle(*options.model_dir);
    check_bundle_flags(bundle, flags);
    check_corpus_mode(corpus, bundle.feature_mode());
    std::vector<std::string> test_ids;
    std::string note;
    const auto split_path = *options.model_dir / kSplitFile;
    if (fs::exists(split_path) &&
        eval::split_from_json(read_json_file(split_path)).corpus_hash == eval::corpus_hash(corpus)) {
      test_ids = heldout_ids(*options.model_dir, corpus);
      note = "test set: the held-out split recorded with the models";
    } else {
      for (const auto& t : corpus.trajectories) test_ids.push_back(t.object_id);
      note = "test set: every trajectory of the corpus (it is not the corpus the models were trained on)";
    }
    report = eval::evaluate_models(bundle, corpus, test_ids, config.pipeline.behavioural_threshold,
                                   config.sweep_thresholds);
    report.notes.insert(report.notes.begin(), note);
    report.training["model_config_hash"] = content_hash(dump_json(bundle.run_config));
  } else {
    check_corpus_mode(corpus, config.feature_mode());
    report = eval::run_experiment(corpus, experiment_config(config)).report;
  }
  report.seed = config.seed;
  report.run_config = to_json(config);
  report.config_hash = config_hash(config);

  write_text_file(report_path, dump_json(eval::to_json(report)));
  const std::string table = eval::render_table(report);
  fs::path table_path = report_path;
  table_path.replace_extension(".txt");
  write_text_file(table_path, table);
  if (config.plots) {
    fs::path svg_path = report_path;
    svg_path.replace_extension(".svg");
    write_text_file(svg_path, eval::render_sweep_svg(report));
  }
  out << table;
  return kExitOk;
}

}  // namespace alrec::cli
