#pragma once

#include <cstdint>

#include "popgnn/cohort.hpp"

namespace popgnn::dataio {

/// Synthetic cohort parameters. affected_fraction of the ROIs (the leading
/// ones) carry the class signal: the patient class is shifted down by
/// effect_size standard deviations on those ROIs in every imaging channel.
/// Phenotypes follow the per-class MMSE distributions of the source data
/// (AD 23.21 +- 2.13, NC 29.02 +- 1.21, sMCI 28.01 +- 0.71,
/// pMCI 27.15 +- 1.81), age ~ N(74, 7) clamped to [55, 95], a fair gender
/// coin, and apoe4 allele counts enriched in the patient class
/// ({0.4, 0.4, 0.2} vs {0.7, 0.25, 0.05}).
struct SynthConfig {
  int n_per_class = 100;
  int p_rois = 30;
  double affected_fraction = 0.3;
  double effect_size = 1.5;
  std::uint64_t seed = 0;
  Task task = Task::ad_nc;

  void validate() const;
};

/// Deterministic per seed. Patient and control subjects are interleaved in
/// id order so the sorted-id 70/15/15 split stays class-balanced. The
/// sMCI-vs-pMCI cohort additionally carries n_per_class train-split NC
/// subjects that act only as brain-network reference donors (they hold no
/// task label, so they never become graph nodes).
CohortBundle generate_synthetic(const SynthConfig& cfg);

}  // namespace popgnn::dataio
