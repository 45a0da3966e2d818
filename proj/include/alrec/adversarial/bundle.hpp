#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/adversarial/alrec.hpp"
#include "alrec/core/error.hpp"
#include "alrec/core/hash.hpp"
#include "alrec/core/io.hpp"
#include "alrec/nn/model_io.hpp"
#include "alrec/trajectory/scaler.hpp"

namespace alrec::adversarial {

inline constexpr int kBundleFormatVersion = 1;
inline constexpr const char* kDaeFile = "dae.json";
inline constexpr const char* kScalerFile = "scaler.json";
inline constexpr const char* kDiscriminatorFile = "discriminator.json";
inline constexpr const char* kTrainingLogFile = "training_log.jsonl";
inline constexpr const char* kRunConfigFile = "run_config.json";

/// Everything a trained model directory holds. The discriminator file records
/// content hashes of the autoencoder and scaler files it was trained
/// against; loading refuses a directory where they disagree.
struct ModelBundle {
  nn::MlpModel dae_model;
  std::uint64_t dae_seed = 0;
  std::vector<double> dae_epoch_mse;
  trajectory::Scaler scaler;
  nn::MlpModel discriminator;
  nn::MlpModel generator;
  std::uint64_t alrec_seed = 0;
  double decision_threshold = 0.5;
  std::size_t m = 31;
  std::size_t stride = 1;
  double baseline_threshold = 0.0;
  double baseline_k_sigma = 3.0;
  StopReason stop_reason = StopReason::EmaxReached;
  std::size_t epochs_run = 0;
  nlohmann::json run_config = nlohmann::json::object();

  [[nodiscard]] trajectory::FeatureMode feature_mode() const { return scaler.mode(); }
  [[nodiscard]] std::size_t pmse_blocks() const { return discriminator.input_size(); }
};

struct BundleFiles {
  std::string dae;
  std::string scaler;
  std::string discriminator;
};

/// Serializes the three model files; hashes chain scaler -> dae -> D.
inline BundleFiles bundle_files(const ModelBundle& b) {
  BundleFiles f;
  f.scaler = dump_json(b.scaler.to_json());
  const std::string scaler_hash = content_hash(f.scaler);
  f.dae = dump_json({{"format", "alrec-dae"},
                     {"version", kBundleFormatVersion},
                     {"feature_mode", trajectory::to_string(b.scaler.mode())},
                     {"m", b.m},
                     {"stride", b.stride},
                     {"scaler_hash", scaler_hash},
                     {"model", nn::model_to_json(b.dae_model, b.dae_seed)},
                     {"epoch_mse", b.dae_epoch_mse},
                     {"baseline", {{"threshold", b.baseline_threshold}, {"k_sigma", b.baseline_k_sigma}}},
                     {"run_config", b.run_config}});
  f.discriminator = dump_json({{"format", "alrec-discriminator"},
                               {"version", kBundleFormatVersion},
                               {"feature_mode", trajectory::to_string(b.scaler.mode())},
                               {"pmse_blocks", b.pmse_blocks()},
                               {"decision_threshold", b.decision_threshold},
                               {"dae_hash", content_hash(f.dae)},
                               {"scaler_hash", scaler_hash},
                               {"stop_reason", to_string(b.stop_reason)},
                               {"epochs_run", b.epochs_run},
                               {"discriminator", nn::model_to_json(b.discriminator, b.alrec_seed)},
                               {"generator", nn::model_to_json(b.generator, b.alrec_seed)},
                               {"run_config", b.run_config}});
  return f;
}

inline void save_bundle(const std::filesystem::path& dir, const ModelBundle& b, const TrainingLog* log = nullptr) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create model directory '" + dir.string() + "': " + ec.message());
  const auto files = bundle_files(b);
  write_text_file(dir / kScalerFile, files.scaler);
  write_text_file(dir / kDaeFile, files.dae);
  write_text_file(dir / kDiscriminatorFile, files.discriminator);
  write_text_file(dir / kRunConfigFile, dump_json(b.run_config));
  if (log != nullptr) write_text_file(dir / kTrainingLogFile, log->to_jsonl());
}

namespace detail {

inline StopReason stop_reason_from_string(const std::string& s) {
  if (s == "k_consecutive") return StopReason::KConsecutive;
  if (s == "emax_reached") return StopReason::EmaxReached;
  throw IoError("unknown stop reason '" + s + "'");
}

inline void expect_hash(const std::string& file, const std::string& actual, const std::string& recorded,
                        const std::string& recorder) {
  if (actual != recorded) {
    throw MismatchError(file + " has content hash " + actual + " but " + recorder + " records " + recorded +
                        "; the model files do not belong together (modified or mixed bundle)");
  }
}

}  // namespace detail

inline ModelBundle load_bundle(const std::filesystem::path& dir) {
  const std::string scaler_text = read_text_file(dir / kScalerFile);
  const std::string dae_text = read_text_file(dir / kDaeFile);
  const std::string d_text = read_text_file(dir / kDiscriminatorFile);
  const auto scaler_doc = parse_json(scaler_text, (dir / kScalerFile).string());
  const auto dae_doc = parse_json(dae_text, (dir / kDaeFile).string());
  const auto d_doc = parse_json(d_text, (dir / kDiscriminatorFile).string());

  ModelBundle b;
  try {
    if (dae_doc.at("format").get<std::string>() != "alrec-dae") throw IoError("dae.json is not an alrec-dae document");
    if (d_doc.at("format").get<std::string>() != "alrec-discriminator") {
      throw IoError("discriminator.json is not an alrec-discriminator document");
    }
    if (dae_doc.at("version").get<int>() != kBundleFormatVersion ||
        d_doc.at("version").get<int>() != kBundleFormatVersion) {
      throw IoError("unsupported bundle format version");
    }
    detail::expect_hash(kScalerFile, content_hash(scaler_text), d_doc.at("scaler_hash").get<std::string>(),
                        kDiscriminatorFile);
    detail::expect_hash(kScalerFile, content_hash(scaler_text), dae_doc.at("scaler_hash").get<std::string>(), kDaeFile);
    detail::expect_hash(kDaeFile, content_hash(dae_text), d_doc.at("dae_hash").get<std::string>(), kDiscriminatorFile);

    b.scaler = trajectory::Scaler::from_json(scaler_doc);
    auto dae = nn::model_from_json(dae_doc.at("model"));
    b.dae_model = std::move(dae.model);
    b.dae_seed = dae.seed;
    b.dae_epoch_mse = dae_doc.at("epoch_mse").get<std::vector<double>>();
    b.m = dae_doc.at("m").get<std::size_t>();
    b.stride = dae_doc.at("stride").get<std::size_t>();
    b.baseline_threshold = dae_doc.at("baseline").at("threshold").get<double>();
    b.baseline_k_sigma = dae_doc.at("baseline").at("k_sigma").get<double>();
    auto d = nn::model_from_json(d_doc.at("discriminator"));
    b.discriminator = std::move(d.model);
    b.alrec_seed = d.seed;
    b.generator = nn::model_from_json(d_doc.at("generator")).model;
    b.decision_threshold = d_doc.at("decision_threshold").get<double>();
    b.stop_reason = detail::stop_reason_from_string(d_doc.at("stop_reason").get<std::string>());
    b.epochs_run = d_doc.at("epochs_run").get<std::size_t>();
    b.run_config = d_doc.at("run_config");
  } catch (const nlohmann::json::exception& e) {
    throw IoError(dir.string() + ": malformed model bundle: " + e.what());
  }
  if (b.dae_model.input_size() != b.scaler.size()) {
    throw MismatchError("autoencoder input size does not match the scaler");
  }
  if (b.pmse_blocks() == 0 || b.scaler.size() % b.pmse_blocks() != 0) {
    throw MismatchError("discriminator input size does not divide the sample length");
  }
  return b;
}

}  // namespace alrec::adversarial
