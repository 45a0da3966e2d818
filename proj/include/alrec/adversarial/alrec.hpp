#pragma once

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "alrec/core/error.hpp"
#include "alrec/core/rng.hpp"
#include "alrec/dae/dae.hpp"
#include "alrec/nn/init.hpp"
#include "alrec/nn/mlp.hpp"
#include "alrec/nn/rmsprop.hpp"
#include "alrec/trajectory/scaler.hpp"
#include "alrec/trajectory/types.hpp"

namespace alrec::adversarial {

using nn::Matrix;
using nn::MlpModel;
using trajectory::FeatureMode;

struct AlrecConfig {
  FeatureMode feature_mode = FeatureMode::Basic;
  std::size_t pmse_blocks = 5;  // M: generator output and discriminator input
  std::size_t noise_size = 8;   // generator input
  std::vector<std::size_t> generator_hidden{128, 64, 32, 16};
  std::vector<std::size_t> discriminator_hidden{128, 64, 32, 16, 8};
  std::size_t batch_size = 128;
  std::size_t max_epochs = 200000;
  double discriminator_lr = 5e-6;
  std::size_t k_consecutive = 100;
  double real_accuracy_gate = 0.99;
  double generator_stop_level = 0.95;
  double decision_threshold = 0.5;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::uint64_t seed = 1;

  /// Extended mode: M = 8 and a 256-unit layer after the input of G and D.
  static AlrecConfig for_mode(FeatureMode mode) {
    AlrecConfig c;
    c.feature_mode = mode;
    if (mode == FeatureMode::Extended) {
      c.pmse_blocks = 8;
      c.generator_hidden.insert(c.generator_hidden.begin(), 256);
      c.discriminator_hidden.insert(c.discriminator_hidden.begin(), 256);
    }
    return c;
  }

  [[nodiscard]] double generator_lr_max() const { return discriminator_lr / 2.0; }
  [[nodiscard]] double generator_lr_min() const { return discriminator_lr / 4.0; }

  [[nodiscard]] nn::Topology generator_topology() const {
    std::vector<std::size_t> sizes{noise_size};
    sizes.insert(sizes.end(), generator_hidden.begin(), generator_hidden.end());
    sizes.push_back(pmse_blocks);
    return nn::Topology::dense(sizes, nn::Activation::ReLU, nn::Activation::Sigmoid);
  }
  [[nodiscard]] nn::Topology discriminator_topology() const {
    std::vector<std::size_t> sizes{pmse_blocks};
    sizes.insert(sizes.end(), discriminator_hidden.begin(), discriminator_hidden.end());
    sizes.push_back(1);
    return nn::Topology::dense(sizes, nn::Activation::ReLU, nn::Activation::Sigmoid);
  }

  [[nodiscard]] std::vector<std::string> validate() const {
    std::vector<std::string> e;
    if (pmse_blocks == 0) e.emplace_back("alrec.pmse_blocks must be positive");
    if (noise_size == 0) e.emplace_back("alrec.noise_size must be positive");
    if (batch_size == 0) e.emplace_back("alrec.batch_size must be positive");
    if (max_epochs == 0) e.emplace_back("alrec.max_epochs must be positive: no training possible with e_max = 0");
    if (!(discriminator_lr > 0.0)) e.emplace_back("alrec.discriminator_lr must be positive");
    if (k_consecutive == 0) e.emplace_back("alrec.k_consecutive must be positive");
    if (!(real_accuracy_gate >= 0.0 && real_accuracy_gate <= 1.0)) e.emplace_back("alrec.real_accuracy_gate must lie in [0,1]");
    if (!(generator_stop_level >= 0.0 && generator_stop_level <= 1.0)) e.emplace_back("alrec.generator_stop_level must lie in [0,1]");
    if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) e.emplace_back("alrec.decision_threshold must lie in (0,1)");
    if (!(rmsprop_decay > 0.0 && rmsprop_decay < 1.0)) e.emplace_back("alrec.rmsprop_decay must lie in (0,1)");
    if (!(rmsprop_epsilon > 0.0)) e.emplace_back("alrec.rmsprop_epsilon must be positive");
    for (auto h : generator_hidden) if (h == 0) e.emplace_back("alrec.generator_hidden entries must be positive");
    for (auto h : discriminator_hidden) if (h == 0) e.emplace_back("alrec.discriminator_hidden entries must be positive");
    return e;
  }
};

inline void to_json(nlohmann::json& j, const AlrecConfig& c) {
  j = {{"feature_mode", trajectory::to_string(c.feature_mode)},
       {"pmse_blocks", c.pmse_blocks},
       {"noise_size", c.noise_size},
       {"generator_hidden", c.generator_hidden},
       {"discriminator_hidden", c.discriminator_hidden},
       {"batch_size", c.batch_size},
       {"max_epochs", c.max_epochs},
       {"discriminator_lr", c.discriminator_lr},
       {"k_consecutive", c.k_consecutive},
       {"real_accuracy_gate", c.real_accuracy_gate},
       {"generator_stop_level", c.generator_stop_level},
       {"decision_threshold", c.decision_threshold},
       {"rmsprop_decay", c.rmsprop_decay},
       {"rmsprop_epsilon", c.rmsprop_epsilon},
       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, AlrecConfig& c) {
  if (j.contains("feature_mode")) c.feature_mode = trajectory::feature_mode_from_string(j["feature_mode"].get<std::string>());
  c.pmse_blocks = j.value("pmse_blocks", c.pmse_blocks);
  c.noise_size = j.value("noise_size", c.noise_size);
  c.generator_hidden = j.value("generator_hidden", c.generator_hidden);
  c.discriminator_hidden = j.value("discriminator_hidden", c.discriminator_hidden);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.discriminator_lr = j.value("discriminator_lr", c.discriminator_lr);
  c.k_consecutive = j.value("k_consecutive", c.k_consecutive);
  c.real_accuracy_gate = j.value("real_accuracy_gate", c.real_accuracy_gate);
  c.generator_stop_level = j.value("generator_stop_level", c.generator_stop_level);
  c.decision_threshold = j.value("decision_threshold", c.decision_threshold);
  c.rmsprop_decay = j.value("rmsprop_decay", c.rmsprop_decay);
  c.rmsprop_epsilon = j.value("rmsprop_epsilon", c.rmsprop_epsilon);
  c.seed = j.value("seed", c.seed);
}

// ---- accuracy, learning-rate schedule -------------------------------------

/// Hard decision: real iff score > threshold (a tie counts as fake).
inline bool is_real(double score, double threshold = 0.5) { return score > threshold; }

/// Fraction of scores whose hard decision matches `label_real`.
inline double accuracy_of_scores(std::span<const double> scores, bool label_real, double threshold = 0.5) {
  if (scores.empty()) throw ValidationError("accuracy of an empty input set");
  std::size_t hits = 0;
  for (double s : scores) hits += is_real(s, threshold) == label_real ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(scores.size());
}

/// Accuracy of D on inputs (M x B), all labelled real (true) or fake (false).
inline double accuracy(const MlpModel& discriminator, const Matrix& inputs, bool label_real, double threshold = 0.5) {
  if (inputs.cols() == 0) throw ValidationError("accuracy of an empty input set");
  const Matrix scores = nn::forward_batch(discriminator, inputs);
  return accuracy_of_scores(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), label_real,
                            threshold);
}

/// Generator learning rate from its fooling rate: linear from iota_d/2 at
/// alpha_G = 0 down to iota_d/4 at alpha_G = 1.
inline double adjust_generator_lr(double alpha_generator, double discriminator_lr) {
  if (!(alpha_generator >= 0.0 && alpha_generator <= 1.0)) {
    throw ValidationError("generator accuracy must lie in [0,1]");
  }
  return discriminator_lr / 2.0 - (discriminator_lr / 4.0) * alpha_generator;
}

// ---- generator ----------------------------------------------------------

inline Matrix generate(const MlpModel& generator, const Matrix& noise) {
  if (static_cast<std::size_t>(noise.rows()) != generator.input_size()) {
    throw ValidationError("noise has " + std::to_string(noise.rows()) + " rows, generator expects " +
                          std::to_string(generator.input_size()));
  }
  return nn::forward_batch(generator, noise);
}

inline std::vector<double> generate(const MlpModel& generator, std::span<const double> z) {
  if (z.size() != generator.input_size()) {
    throw ValidationError("noise vector has length " + std::to_string(z.size()) + ", generator expects " +
                          std::to_string(generator.input_size()));
  }
  return nn::forward(generator, z);
}

inline Matrix sample_noise(Rng& rng, std::size_t size, std::size_t batch) {
  Matrix z(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(batch));
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  return z;
}

// ---- training -----------------------------------------------------------

enum class StopReason { KConsecutive, EmaxReached };

inline std::string_view to_string(StopReason r) {
  return r == StopReason::KConsecutive ? "k_consecutive" : "emax_reached";
}

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double alpha_d_real = 0.0;
  bool gate_open = false;
  std::optional<double> alpha_d_fake_train;  // from the D-on-fake fit
  std::optional<double> alpha_g;             // on the regenerated batch
  /// D tested on the newest fake batch (1 - alpha_g when that was computed).
  double alpha_d_fake = 0.0;
  double alpha_d_global = 0.0;
  double iota_g = 0.0;
  std::size_t consecutive = 0;  // current run of alpha_g above the stop level
};

inline nlohmann::json to_json(const EpochRecord& r) {
  nlohmann::json j = {{"epoch", r.epoch},
                      {"alpha_d_real", r.alpha_d_real},
                      {"gate_open", r.gate_open},
                      {"alpha_d_fake", r.alpha_d_fake},
                      {"alpha_d_global", r.alpha_d_global},
                      {"iota_g", r.iota_g},
                      {"consecutive", r.consecutive}};
  j["alpha_d_fake_train"] = r.alpha_d_fake_train ? nlohmann::json(*r.alpha_d_fake_train) : nlohmann::json(nullptr);
  j["alpha_g"] = r.alpha_g ? nlohmann::json(*r.alpha_g) : nlohmann::json(nullptr);
  return j;
}

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::EmaxReached;

  /// One JSON object per line.
  [[nodiscard]] std::string to_jsonl() const {
    std::string out;
    for (const auto& r : epochs) out += to_json(r).dump() + "\n";
    return out;
  }
};

enum class TrainingPhase { EpochStart, AfterRealStep, AfterFakeStep, AfterGeneratorStep, EpochEnd };

/// Test seams. Overrides replace a measured accuracy before the algorithm
/// acts on it; the observer sees both networks at every phase boundary.
struct TrainerHooks {
  std::function<double(std::size_t epoch, double measured)> real_accuracy;
  std::function<double(std::size_t epoch, double measured)> generator_accuracy;
  std::function<void(TrainingPhase, std::size_t epoch, const MlpModel& discriminator, const MlpModel& generator)>
      observer;
};

/// One exclusive training session over a fixed table of real PMSE vectors
/// (M x S). Each `run_epoch` performs one pass of the adversarial loop.
class AdversarialTrainer {
 public:
  AdversarialTrainer(Matrix real_pmse, AlrecConfig config, TrainerHooks hooks = {})
      : config_(std::move(config)), hooks_(std::move(hooks)), real_(std::move(real_pmse)) {
    if (auto errors = config_.validate(); !errors.empty()) throw ValidationError(errors.front());
    if (real_.cols() == 0) throw ValidationError("no real PMSE vectors to train on");
    if (static_cast<std::size_t>(real_.rows()) != config_.pmse_blocks) {
      throw MismatchError("PMSE vectors have " + std::to_string(real_.rows()) + " entries, config expects M = " +
                          std::to_string(config_.pmse_blocks));
    }
    generator_ = nn::init_weights(config_.generator_topology(), Rng::substream(config_.seed, "init/generator").next_u64());
    discriminator_ =
        nn::init_weights(config_.discriminator_topology(), Rng::substream(config_.seed, "init/discriminator").next_u64());
    d_opt_ = nn::RmsPropState::for_model(discriminator_, config_.discriminator_lr, config_.rmsprop_decay,
                                         config_.rmsprop_epsilon);
    g_opt_ = nn::RmsPropState::for_model(generator_, config_.generator_lr_max(), config_.rmsprop_decay,
                                         config_.rmsprop_epsilon);
    noise_rng_ = Rng::substream(config_.seed, "z-noise");
    batch_rng_ = Rng::substream(config_.seed, "batching");
    order_.resize(static_cast<std::size_t>(real_.cols()));
    std::iota(order_.begin(), order_.end(), 0);
  }

  [[nodiscard]] const MlpModel& discriminator() const { return discriminator_; }
  [[nodiscard]] const MlpModel& generator() const { return generator_; }
  [[nodiscard]] const AlrecConfig& config() const { return config_; }
  [[nodiscard]] const TrainingLog& log() const { return log_; }
  [[nodiscard]] bool finished() const { return finished_; }
  [[nodiscard]] double generator_lr() const { return g_opt_.learning_rate; }

  EpochRecord run_epoch() {
    if (finished_) throw ValidationError("training session has already stopped");
    EpochRecord rec;
    rec.epoch = ++epoch_;
    observe(TrainingPhase::EpochStart);

    Matrix noise = sample_noise(noise_rng_, config_.noise_size, config_.batch_size);
    const Matrix real_batch = next_real_batch();
    Matrix fake_batch = generate(generator_, noise);

    rec.alpha_d_real = fit_discriminator(real_batch, true);
    if (hooks_.real_accuracy) rec.alpha_d_real = hooks_.real_accuracy(rec.epoch, rec.alpha_d_real);
    observe(TrainingPhase::AfterRealStep);

    if (rec.alpha_d_real >= config_.real_accuracy_gate) {
      rec.gate_open = true;
      rec.alpha_d_fake_train = fit_discriminator(fake_batch, false);
      observe(TrainingPhase::AfterFakeStep);

      fit_generator(noise);
      observe(TrainingPhase::AfterGeneratorStep);

      noise = sample_noise(noise_rng_, config_.noise_size, config_.batch_size);
      fake_batch = generate(generator_, noise);
      double alpha_g = accuracy(discriminator_, fake_batch, true, config_.decision_threshold);
      if (hooks_.generator_accuracy) alpha_g = hooks_.generator_accuracy(rec.epoch, alpha_g);
      rec.alpha_g = alpha_g;
      g_opt_.learning_rate = adjust_generator_lr(alpha_g, config_.discriminator_lr);
      consecutive_ = alpha_g > config_.generator_stop_level ? consecutive_ + 1 : 0;
      rec.alpha_d_fake = 1.0 - alpha_g;
    } else {
      rec.alpha_d_fake = accuracy(discriminator_, fake_batch, false, config_.decision_threshold);
    }
    rec.alpha_d_global = (rec.alpha_d_real + rec.alpha_d_fake) / 2.0;
    rec.iota_g = g_opt_.learning_rate;
    rec.consecutive = consecutive_;

    if (consecutive_ >= config_.k_consecutive) {
      finished_ = true;
      log_.stop_reason = StopReason::KConsecutive;
    } else if (epoch_ >= config_.max_epochs) {
      finished_ = true;
      log_.stop_reason = StopReason::EmaxReached;
    }
    log_.epochs.push_back(rec);
    observe(TrainingPhase::EpochEnd);
    return rec;
  }

  const TrainingLog& run() {
    while (!finished_) run_epoch();
    return log_;
  }

 private:
  void observe(TrainingPhase phase) {
    if (hooks_.observer) hooks_.observer(phase, epoch_, discriminator_, generator_);
  }

  /// Random batch of real PMSE columns, without replacement within a batch
  /// (with replacement when the table is smaller than the batch).
  Matrix next_real_batch() {
    const std::size_t b = config_.batch_size;
    Matrix batch(real_.rows(), static_cast<Eigen::Index>(b));
    if (order_.size() >= b) {
      for (std::size_t i = 0; i < b; ++i) {
        std::swap(order_[i], order_[i + batch_rng_.uniform_index(order_.size() - i)]);
        batch.col(static_cast<Eigen::Index>(i)) = real_.col(order_[i]);
      }
    } else {
      for (std::size_t i = 0; i < b; ++i) {
        batch.col(static_cast<Eigen::Index>(i)) = real_.col(static_cast<Eigen::Index>(batch_rng_.uniform_index(order_.size())));
      }
    }
    return batch;
  }

  /// One RMSProp step of D on a batch with a single label; returns the
  /// accuracy of the pre-update outputs.
  double fit_discriminator(const Matrix& inputs, bool label_real) {
    const auto cache = nn::forward_cached(discriminator_, inputs);
    const Matrix& scores = cache.output();
    const double acc = accuracy_of_scores(
        std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), label_real,
        config_.decision_threshold);
    const Matrix targets = Matrix::Constant(1, inputs.cols(), label_real ? 1.0 : 0.0);
    auto [loss, grad] = nn::loss_and_gradient(nn::LossKind::BinaryCrossEntropy, scores, targets);
    const auto grads = nn::backpropagate(discriminator_, cache, std::move(grad));
    nn::rmsprop_step(discriminator_, grads, d_opt_);
    return acc;
  }

  /// Fits G through the composite G -> D with target "real"; D's weights are
  /// only read.
  void fit_generator(const Matrix& noise) {
    const auto g_cache = nn::forward_cached(generator_, noise);
    const auto d_cache = nn::forward_cached(discriminator_, g_cache.output());
    const Matrix targets = Matrix::Ones(1, noise.cols());
    auto [loss, grad] = nn::loss_and_gradient(nn::LossKind::BinaryCrossEntropy, d_cache.output(), targets);
    Matrix through_d;
    nn::backpropagate(discriminator_, d_cache, std::move(grad), &through_d);
    const auto g_grads = nn::backpropagate(generator_, g_cache, std::move(through_d));
    nn::rmsprop_step(generator_, g_grads, g_opt_);
  }

  AlrecConfig config_;
  TrainerHooks hooks_;
  Matrix real_;
  MlpModel generator_;
  MlpModel discriminator_;
  nn::RmsPropState d_opt_;
  nn::RmsPropState g_opt_;
  Rng noise_rng_;
  Rng batch_rng_;
  std::vector<Eigen::Index> order_;
  std::size_t epoch_ = 0;
  std::size_t consecutive_ = 0;
  bool finished_ = false;
  TrainingLog log_;
};

struct AlrecTrainingResult {
  MlpModel discriminator;
  MlpModel generator;
  TrainingLog log;
};

/// Real PMSE table (M x S) for normalized windows (N x S) under the DAE.
inline Matrix real_pmse_table(const MlpModel& dae_model, const Matrix& normalized_samples, std::size_t blocks) {
  return dae::pmse_batch(normalized_samples, dae::reconstruct_batch(dae_model, normalized_samples), blocks);
}

/// Trains D and G on the normal windows (normalized, one column each).
inline AlrecTrainingResult train_alrec(const MlpModel& dae_model, const trajectory::Scaler& scaler,
                                       const Matrix& normal_samples, const AlrecConfig& config,
                                       TrainerHooks hooks = {}) {
  if (normal_samples.cols() == 0) throw ValidationError("no normal samples to train on");
  if (scaler.mode() != config.feature_mode) {
    throw MismatchError("scaler was fitted in " + std::string(trajectory::to_string(scaler.mode())) +
                        " mode but the config asks for " + std::string(trajectory::to_string(config.feature_mode)));
  }
  if (scaler.size() != dae_model.input_size() || static_cast<std::size_t>(normal_samples.rows()) != scaler.size()) {
    throw MismatchError("sample length, scaler size and autoencoder input size disagree");
  }
  AdversarialTrainer trainer(real_pmse_table(dae_model, normal_samples, config.pmse_blocks), config, std::move(hooks));
  trainer.run();
  return {trainer.discriminator(), trainer.generator(), trainer.log()};
}

}  // namespace alrec::adversarial
