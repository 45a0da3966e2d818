#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "alrec/core/error.hpp"

namespace alrec::eval {

/// Ground truth and predictions share one encoding: true = abnormal.
struct ConfusionCounts {
  std::size_t normal_total = 0;
  std::size_t normal_correct = 0;
  std::size_t abnormal_total = 0;
  std::size_t abnormal_correct = 0;
};

inline ConfusionCounts confusion(std::span<const bool> predicted_abnormal, std::span<const bool> truly_abnormal) {
  if (predicted_abnormal.size() != truly_abnormal.size()) {
    throw ValidationError("verdict and ground-truth lists differ in length");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < truly_abnormal.size(); ++i) {
    if (truly_abnormal[i]) {
      ++c.abnormal_total;
      if (predicted_abnormal[i]) ++c.abnormal_correct;
    } else {
      ++c.normal_total;
      if (!predicted_abnormal[i]) ++c.normal_correct;
    }
  }
  return c;
}

/// NDA and ADA as per-class recall; a rate is empty when its class is empty.
struct SampleRates {
  std::optional<double> nda;
  std::optional<double> ada;
  ConfusionCounts counts;
};

inline SampleRates evaluate_samples(std::span<const bool> predicted_abnormal, std::span<const bool> truly_abnormal) {
  SampleRates r;
  r.counts = confusion(predicted_abnormal, truly_abnormal);
  if (r.counts.normal_total > 0) {
    r.nda = static_cast<double>(r.counts.normal_correct) / static_cast<double>(r.counts.normal_total);
  }
  if (r.counts.abnormal_total > 0) {
    r.ada = static_cast<double>(r.counts.abnormal_correct) / static_cast<double>(r.counts.abnormal_total);
  }
  return r;
}

/// DACC: correct over all trajectories. CCR: correct normal over normal
/// (empty when there are no normal trajectories).
struct BehaviouralRates {
  double dacc = 0.0;
  std::optional<double> ccr;
  ConfusionCounts counts;
};

inline BehaviouralRates evaluate_behavioural(std::span<const bool> predicted_abnormal,
                                             std::span<const bool> truly_abnormal) {
  if (truly_abnormal.empty()) throw ValidationError("behavioural evaluation needs at least one trajectory");
  BehaviouralRates r;
  r.counts = confusion(predicted_abnormal, truly_abnormal);
  r.dacc = static_cast<double>(r.counts.normal_correct + r.counts.abnormal_correct) /
           static_cast<double>(truly_abnormal.size());
  if (r.counts.normal_total > 0) {
    r.ccr = static_cast<double>(r.counts.normal_correct) / static_cast<double>(r.counts.normal_total);
  }
  return r;
}

}  // namespace alrec::eval
