#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "popgnn/brainnet.hpp"
#include "popgnn/checkpoint.hpp"
#include "popgnn/cohort.hpp"
#include "popgnn/fusion.hpp"
#include "popgnn/metrics.hpp"
#include "popgnn/model.hpp"
#include "popgnn/popgraph.hpp"
#include "popgnn/synth.hpp"
#include "popgnn/trainer.hpp"

namespace popgnn::experiment {

/// Experiment-level graph arrangement: the four fusion variants plus the two
/// single-modality baselines (one branch, no fusion).
enum class Mode {
  single_smri,
  single_pet,
  dual,
  integration,
  feature_fusion,
  integrated_fusion
};

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ExperimentConfig {
  Task task = Task::ad_nc;
  model::Arch arch = model::Arch::cheb;
  Mode mode = Mode::integrated_fusion;
  popgraph::PhenoConfig pheno = popgraph::PhenoConfig::similarity();
  popgraph::SigmaRule sigma = popgraph::SigmaRule::data_driven();
  brainnet::SmriChannel smri_channel = brainnet::SmriChannel::GM;
  trainer::TrainConfig train;
  int repeats = 1;
  double eps = 1e-8;
};

struct PipelineTrace {
  std::uint64_t x0_hash = 0;
  std::uint64_t x1_hash = 0;
  std::uint64_t adj0_hash = 0;
  std::uint64_t adj1_hash = 0;
  double sigma0 = 0.0;
  double sigma1 = 0.0;
};

struct PreparedGraph {
  fusion::BranchGraphs graphs;
  std::vector<int> labels;  // 0 control, 1 patient
  popgraph::Masks masks;
  std::vector<std::string> node_ids;
  PipelineTrace trace;
  std::string split_source;  // "bundle" or "derived:<repeat>"
};

/// Per-repeat 70/15/15 masks over a shuffled node order; repeats walk the
/// shuffled order in disjoint circular test blocks, so successive repeats
/// evaluate on non-overlapping test sets while the block fits.
popgraph::Masks derive_masks(std::size_t n_nodes, std::uint64_t seed, int repeat);

/// Builds node features (brain networks against the repeat's train-split NC
/// reference), adjacencies, fused branch graphs, labels, and masks.
/// `use_bundle_splits` takes the subjects' own split column; otherwise masks
/// come from derive_masks (or `override_masks` when given, e.g. CV folds).
PreparedGraph prepare_graph(const CohortBundle& bundle, const ExperimentConfig& cfg, int repeat,
                            bool use_bundle_splits,
                            const popgraph::Masks* override_masks = nullptr);

/// Per-repeat training seed derived from the root seed.
std::uint64_t repeat_seed(std::uint64_t root_seed, int repeat);

metrics::EvalReport evaluate_on_mask(const model::DualBranchModel& m,
                                     const fusion::BranchGraphs& graphs,
                                     const std::vector<int>& labels,
                                     const std::vector<std::uint8_t>& mask, Task task);

struct RunResult {
  metrics::EvalReport report;
  trainer::TrainLog log;
  PipelineTrace trace;
  popgraph::Masks masks;
  model::DualBranchModel model;
  std::uint64_t seed = 0;
  std::string split_source;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  metrics::AggregateReport aggregate;
};

/// The full pipeline: brain networks -> population graphs -> fusion ->
/// training -> masked test evaluation, repeated `cfg.repeats` times with
/// per-repeat seeds and splits; reports are aggregated as mean +- std.
ExperimentResult run_experiment(const CohortBundle& bundle, const ExperimentConfig& cfg);

/// Stratified k-fold cross-validation over the task nodes (fold = test set,
/// next fold = validation, rest train).
ExperimentResult run_kfold(const CohortBundle& bundle, const ExperimentConfig& cfg, int folds);

/// The phenotype ablation grid: similarity-only, each single indicator,
/// gender+mmse, and gender+apoe4+mmse.
std::vector<std::pair<std::string, popgraph::PhenoConfig>> ablation_rows();

Checkpoint make_checkpoint(const RunResult& run, const ExperimentConfig& cfg);

}  // namespace popgnn::experiment
