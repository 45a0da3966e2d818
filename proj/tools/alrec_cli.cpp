#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "alrec/cli/commands.hpp"

namespace {

using namespace alrec;
using namespace alrec::cli;

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (top-level keys mirror the flags)");
  cmd->add_option("--seed", o.seed, "global seed (default: config, then ALREC_SEED, then 1)");
  cmd->add_option("--m", o.m, "points per window")->check(CLI::PositiveNumber);
  cmd->add_option("--stride", o.stride, "window stride")->check(CLI::PositiveNumber);
  cmd->add_option("--feature-mode", o.feature_mode, "basic or extended")
      ->check(CLI::IsMember({"basic", "extended"}, CLI::ignore_case));
  cmd->add_option("--behavioural-threshold", o.behavioural_threshold,
                  "abnormal-window fraction that makes a trajectory abnormal");
  cmd->add_option("--emax", o.emax, "maximum adversarial training epochs");
  cmd->add_flag("--sweep-thresholds", o.sweep_thresholds, "also evaluate behavioural thresholds 1%..20%");
  cmd->add_flag("--plots", o.plots, "write the threshold sweep as an SVG next to the report");
}

int run(int argc, char** argv) {
  CLI::App app{"Trajectory anomaly detection with an autoencoder and an adversarial reconstruction-error classifier"};
  app.require_subcommand(1);
  Overrides flags;

  std::string spec_path, out_path;
  auto* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus from a scene spec");
  synth->add_option("spec", spec_path, "scene spec (JSON)")->required();
  synth->add_option("-o,--out", out_path, "corpus file to write")->required();
  add_common_flags(synth, flags);

  std::string corpus_path, model_dir;
  auto* train = app.add_subcommand("train", "train the autoencoder, baseline and ALREC on a labelled corpus");
  train->add_option("corpus", corpus_path, "corpus file")->required();
  train->add_option("-o,--out", model_dir, "model directory to write")->required();
  add_common_flags(train, flags);

  std::string input_path;
  ClassifyOptions classify_options;
  std::string classify_out;
  auto* classify = app.add_subcommand("classify", "classify trajectories with trained models");
  classify->add_option("models", model_dir, "model directory")->required();
  classify->add_option("input", input_path, "corpus file or detection CSV")->required();
  classify->add_flag("--heldout", classify_options.heldout, "only the held-out split recorded at training time");
  classify->add_option("-o,--out", classify_out, "write the verdict listing here instead of stdout");
  add_common_flags(classify, flags);

  std::string report_path, evaluate_models;
  auto* evaluate = app.add_subcommand("evaluate", "evaluate ALREC and the threshold baseline on a labelled corpus");
  evaluate->add_option("corpus", corpus_path, "corpus file")->required();
  evaluate->add_option("-o,--report", report_path, "report file (JSON; a .txt table is written alongside)")
      ->required();
  evaluate->add_option("--models", evaluate_models, "reuse trained models instead of training");
  add_common_flags(evaluate, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (synth->parsed()) return cmd_synth(spec_path, out_path, flags, std::cout);
    if (train->parsed()) return cmd_train(corpus_path, model_dir, flags, std::cout);
    if (classify->parsed()) {
      if (!classify_out.empty()) classify_options.output = classify_out;
      return cmd_classify(model_dir, input_path, flags, classify_options, std::cout);
    }
    EvaluateOptions options;
    if (!evaluate_models.empty()) options.model_dir = evaluate_models;
    return cmd_evaluate(corpus_path, report_path, flags, options, std::cout);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const MismatchError& e) {
    std::cerr << "mismatch: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const NoSamplesError& e) {
    std::cerr << "no samples: " << e.what() << "\n";
    return kExitNoSamples;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
