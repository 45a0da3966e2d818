#pragma once

#include <cstdint>
#include <vector>

#include "alrec/adversarial/alrec.hpp"
#include "alrec/core/rng.hpp"

namespace alrec::harness {

/// Per-epoch accuracies forced onto the trainer (index 0 = epoch 1).
struct StubSequence {
  std::vector<double> real_accuracy;
  std::vector<double> generator_accuracy;
};

struct StopPrediction {
  std::size_t epoch = 0;
  bool k_consecutive = false;
};

/// Independent restatement of the stopping rule: count epochs whose gate is
/// open and whose generator accuracy exceeds the level; any other gated-open
/// epoch resets the count; gated-closed epochs leave it alone.
inline StopPrediction predict_stop(const StubSequence& s, std::size_t k, double gate, double level,
                                   std::size_t max_epochs) {
  std::size_t run = 0;
  for (std::size_t e = 1; e <= max_epochs; ++e) {
    const double real = s.real_accuracy[(e - 1) % s.real_accuracy.size()];
    const double gen = s.generator_accuracy[(e - 1) % s.generator_accuracy.size()];
    if (real >= gate) run = gen > level ? run + 1 : 0;
    if (run >= k) return {e, true};
  }
  return {max_epochs, false};
}

/// Random sequence with long stretches of high generator accuracy and
/// occasional closed-gate epochs, so both stop reasons occur.
inline StubSequence random_sequence(Rng& rng, std::size_t length) {
  StubSequence s;
  const double closed_rate = rng.uniform(0.0, 0.2);
  const double break_rate = rng.uniform(0.0, 0.03);
  for (std::size_t e = 0; e < length; ++e) {
    s.real_accuracy.push_back(rng.uniform() < closed_rate ? rng.uniform(0.0, 0.98) : rng.uniform(0.99, 1.0));
    s.generator_accuracy.push_back(rng.uniform() < break_rate ? rng.uniform(0.0, 0.95) : rng.uniform(0.951, 1.0));
  }
  return s;
}

/// Small networks so a full stubbed session takes milliseconds.
inline adversarial::AlrecConfig stub_config(std::uint64_t seed) {
  adversarial::AlrecConfig c;
  c.pmse_blocks = 5;
  c.noise_size = 4;
  c.generator_hidden = {6};
  c.discriminator_hidden = {6};
  c.batch_size = 8;
  c.max_epochs = 400;
  c.discriminator_lr = 1e-3;
  c.seed = seed;
  return c;
}

inline nn::Matrix random_pmse_table(Rng& rng, std::size_t blocks, std::size_t count) {
  nn::Matrix m(static_cast<Eigen::Index>(blocks), static_cast<Eigen::Index>(count));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(0.0, 0.05);
  return m;
}

/// What one stubbed session did, checked phase by phase.
struct StubOutcome {
  adversarial::TrainingLog log;
  StopPrediction predicted;
  std::size_t lr_out_of_range = 0;
  std::size_t gated_fake_or_generator_steps = 0;  // phases reached with a closed gate
  std::size_t gated_weight_changes = 0;            // D after real step or G changed in a closed epoch
  std::size_t frozen_d_violations = 0;             // D changed across a G step
  std::size_t generator_steps = 0;
};

inline StubOutcome run_stub(const StubSequence& seq, const adversarial::AlrecConfig& config, const nn::Matrix& real) {
  using adversarial::TrainingPhase;
  StubOutcome out;
  std::uint64_t g_at_start = 0, d_after_real = 0, d_before_g = 0;
  bool gate_open = false;
  auto at = [](const std::vector<double>& v, std::size_t epoch) { return v[(epoch - 1) % v.size()]; };

  adversarial::TrainerHooks hooks;
  hooks.real_accuracy = [&](std::size_t epoch, double) {
    const double a = at(seq.real_accuracy, epoch);
    gate_open = a >= config.real_accuracy_gate;
    return a;
  };
  hooks.generator_accuracy = [&](std::size_t epoch, double) { return at(seq.generator_accuracy, epoch); };
  hooks.observer = [&](TrainingPhase phase, std::size_t, const nn::MlpModel& d, const nn::MlpModel& g) {
    switch (phase) {
      case TrainingPhase::EpochStart:
        g_at_start = g.checksum();
        break;
      case TrainingPhase::AfterRealStep:
        d_after_real = d.checksum();
        break;
      case TrainingPhase::AfterFakeStep:
        if (!gate_open) ++out.gated_fake_or_generator_steps;
        d_before_g = d.checksum();
        break;
      case TrainingPhase::AfterGeneratorStep:
        if (!gate_open) ++out.gated_fake_or_generator_steps;
        ++out.generator_steps;
        if (d.checksum() != d_before_g) ++out.frozen_d_violations;
        break;
      case TrainingPhase::EpochEnd:
        if (!gate_open && (d.checksum() != d_after_real || g.checksum() != g_at_start)) ++out.gated_weight_changes;
        break;
    }
  };

  adversarial::AdversarialTrainer trainer(real, config, hooks);
  trainer.run();
  out.log = trainer.log();
  for (const auto& r : out.log.epochs) {
    const double lo = config.discriminator_lr / 4.0, hi = config.discriminator_lr / 2.0;
    if (!(r.iota_g >= lo && r.iota_g <= hi)) ++out.lr_out_of_range;
  }
  out.predicted = predict_stop(seq, config.k_consecutive, config.real_accuracy_gate, config.generator_stop_level,
                               config.max_epochs);
  return out;
}

}  // namespace alrec::harness
