#include "popgnn/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "popgnn/hash.hpp"
#include "popgnn/rng.hpp"

namespace popgnn::experiment {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::single_smri: return "single-smri";
    case Mode::single_pet: return "single-pet";
    case Mode::dual: return "dual";
    case Mode::integration: return "integration";
    case Mode::feature_fusion: return "fusion";
    case Mode::integrated_fusion: return "ifusion";
  }
  return "dual";
}

Mode mode_from_string(const std::string& s) {
  if (s == "single-smri") return Mode::single_smri;
  if (s == "single-pet") return Mode::single_pet;
  if (s == "dual") return Mode::dual;
  if (s == "integration") return Mode::integration;
  if (s == "fusion") return Mode::feature_fusion;
  if (s == "ifusion") return Mode::integrated_fusion;
  throw std::invalid_argument(
      "unknown mode '" + s +
      "' (expected dual|integration|fusion|ifusion|single-smri|single-pet)");
}

std::uint64_t repeat_seed(std::uint64_t root_seed, int repeat) {
  return Rng::stream(root_seed, "repeat", static_cast<std::uint64_t>(repeat)).next_u64();
}

popgraph::Masks derive_masks(std::size_t n_nodes, std::uint64_t seed, int repeat) {
  const std::size_t n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n_nodes))));
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(0.15 * static_cast<double>(n_nodes))));
  if (n_test + n_val >= n_nodes) {
    throw std::invalid_argument("derive_masks: cohort of " + std::to_string(n_nodes) +
                                " nodes is too small for a 70/15/15 split");
  }

  std::vector<std::size_t> order(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) order[i] = i;
  Rng rng = Rng::stream(seed, "split");
  rng.shuffle(order);

  popgraph::Masks m;
  m.train.assign(n_nodes, 1);
  m.val.assign(n_nodes, 0);
  m.test.assign(n_nodes, 0);
  const std::size_t start = (static_cast<std::size_t>(repeat) * n_test) % n_nodes;
  for (std::size_t i = 0; i < n_test; ++i) {
    const std::size_t idx = order[(start + i) % n_nodes];
    m.test[idx] = 1;
    m.train[idx] = 0;
  }
  for (std::size_t i = 0; i < n_val; ++i) {
    const std::size_t idx = order[(start + n_test + i) % n_nodes];
    m.val[idx] = 1;
    m.train[idx] = 0;
  }
  m.validate_partition();
  return m;
}

namespace {

std::vector<std::size_t> task_node_indices(const CohortBundle& bundle, Task task) {
  const auto [control, patient] = task_labels(task);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < bundle.subjects.size(); ++i) {
    const Label l = bundle.subjects[i].label;
    if (l == control || l == patient) nodes.push_back(i);
  }
  return nodes;
}

const RoiFeatureTable& table_for(const CohortBundle& bundle, Modality m) {
  const auto it = bundle.roi_tables.find(m);
  if (it == bundle.roi_tables.end()) {
    throw std::runtime_error("cohort is missing the " + to_string(m) + " table");
  }
  return it->second;
}

std::vector<std::size_t> table_rows_for_nodes(const RoiFeatureTable& table,
                                              const std::vector<SubjectRecord>& subjects,
                                              const std::vector<std::size_t>& nodes) {
  std::vector<std::size_t> rows;
  rows.reserve(nodes.size());
  for (std::size_t node : nodes) {
    const auto r = table.row_index(subjects[node].id);
    if (!r) {
      throw std::runtime_error("subject '" + subjects[node].id +
                               "' has no row in a required feature table");
    }
    rows.push_back(*r);
  }
  return rows;
}

}  // namespace

PreparedGraph prepare_graph(const CohortBundle& bundle, const ExperimentConfig& cfg, int repeat,
                            bool use_bundle_splits, const popgraph::Masks* override_masks) {
  validate(bundle);
  const auto [control, patient] = task_labels(cfg.task);
  const std::vector<std::size_t> nodes = task_node_indices(bundle, cfg.task);
  if (nodes.size() < 4) {
    throw std::runtime_error("task " + to_string(cfg.task) + " has only " +
                             std::to_string(nodes.size()) + " subjects in this cohort");
  }

  PreparedGraph out;
  out.labels.reserve(nodes.size());
  out.node_ids.reserve(nodes.size());
  for (std::size_t node : nodes) {
    out.labels.push_back(bundle.subjects[node].label == patient ? 1 : 0);
    out.node_ids.push_back(bundle.subjects[node].id);
  }
  if (std::count(out.labels.begin(), out.labels.end(), 1) == 0 ||
      std::count(out.labels.begin(), out.labels.end(), 0) == 0) {
    throw std::runtime_error("task " + to_string(cfg.task) +
                             ": both classes must be present in the cohort");
  }

  if (override_masks != nullptr) {
    out.masks = *override_masks;
    out.split_source = "derived:" + std::to_string(repeat);
  } else if (use_bundle_splits) {
    out.masks.train.assign(nodes.size(), 0);
    out.masks.val.assign(nodes.size(), 0);
    out.masks.test.assign(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      switch (bundle.subjects[nodes[i]].split) {
        case Split::train: out.masks.train[i] = 1; break;
        case Split::val: out.masks.val[i] = 1; break;
        case Split::test: out.masks.test[i] = 1; break;
      }
    }
    out.split_source = "bundle";
  } else {
    out.masks = derive_masks(nodes.size(), cfg.train.seed, repeat);
    out.split_source = "derived:" + std::to_string(repeat);
  }
  out.masks.validate_partition();

  // Subjects with the splits this repeat actually uses; the NC reference is
  // built against these, so it can only see the current training split.
  std::vector<SubjectRecord> adjusted = bundle.subjects;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    adjusted[nodes[i]].split = out.masks.train[i]  ? Split::train
                               : out.masks.val[i]  ? Split::val
                                                   : Split::test;
  }

  std::vector<SubjectRecord> node_subjects;
  node_subjects.reserve(nodes.size());
  for (std::size_t node : nodes) node_subjects.push_back(adjusted[node]);

  const bool needs_smri = cfg.mode != Mode::single_pet;
  const bool needs_pet = cfg.mode != Mode::single_smri;

  Matrix x_smri, x_pet;
  if (needs_smri) {
    const RoiFeatureTable smri =
        brainnet::build_smri_channel(table_for(bundle, Modality::smri_gm),
                                     table_for(bundle, Modality::smri_wm), cfg.smri_channel);
    const auto ref = brainnet::build_nc_reference(smri, adjusted);
    x_smri = brainnet::node_feature_matrix(smri, table_rows_for_nodes(smri, bundle.subjects, nodes),
                                           ref, cfg.eps);
  }
  if (needs_pet) {
    const RoiFeatureTable& pet = table_for(bundle, Modality::pet_suvr);
    const auto ref = brainnet::build_nc_reference(pet, adjusted);
    x_pet = brainnet::node_feature_matrix(pet, table_rows_for_nodes(pet, bundle.subjects, nodes),
                                          ref, cfg.eps);
  }

  switch (cfg.mode) {
    case Mode::single_smri: {
      out.graphs.x0 = std::move(x_smri);
      out.graphs.branch0_adj = popgraph::build_adjacency(out.graphs.x0, node_subjects, cfg.pheno,
                                                         cfg.sigma, &out.trace.sigma0);
      break;
    }
    case Mode::single_pet: {
      out.graphs.x0 = std::move(x_pet);
      out.graphs.branch0_adj = popgraph::build_adjacency(out.graphs.x0, node_subjects, cfg.pheno,
                                                         cfg.sigma, &out.trace.sigma0);
      break;
    }
    default: {
      const Matrix a_s = popgraph::build_adjacency(x_smri, node_subjects, cfg.pheno, cfg.sigma,
                                                   &out.trace.sigma0);
      const Matrix a_f = popgraph::build_adjacency(x_pet, node_subjects, cfg.pheno, cfg.sigma,
                                                   &out.trace.sigma1);
      fusion::FusionMode fm = fusion::FusionMode::DUAL;
      if (cfg.mode == Mode::integration) fm = fusion::FusionMode::INTEGRATION;
      if (cfg.mode == Mode::feature_fusion) fm = fusion::FusionMode::FEATURE_FUSION;
      if (cfg.mode == Mode::integrated_fusion) fm = fusion::FusionMode::INTEGRATED_FUSION;
      out.graphs = fusion::assemble_branch_graphs(a_s, a_f, std::move(x_smri), std::move(x_pet),
                                                  fm, node_subjects, cfg.pheno, cfg.sigma);
      break;
    }
  }

  out.trace.x0_hash = hash_matrix(out.graphs.x0);
  out.trace.x1_hash = hash_matrix(out.graphs.x1);
  out.trace.adj0_hash = hash_matrix(out.graphs.branch0_adj);
  out.trace.adj1_hash = hash_matrix(out.graphs.branch1_adj);
  return out;
}

metrics::EvalReport evaluate_on_mask(const model::DualBranchModel& m,
                                     const fusion::BranchGraphs& graphs,
                                     const std::vector<int>& labels,
                                     const std::vector<std::uint8_t>& mask, Task task) {
  m.validate();
  const std::size_t n_branches = m.branches.size();
  const Matrix* xs[2] = {&graphs.x0, &graphs.x1};
  const Matrix* adjs[2] = {&graphs.branch0_adj, &graphs.branch1_adj};

  std::vector<Matrix> probs;
  for (std::size_t b = 0; b < n_branches; ++b) {
    const auto& branch = m.branches[b];
    const model::PropagationOperator prop =
        branch.arch == model::Arch::gcn
            ? model::PropagationOperator::gcn_from_adjacency(*adjs[b])
            : model::PropagationOperator::cheb_from_adjacency(*adjs[b], branch.k_order);
    const auto px = model::propagate_input(prop, *xs[b]);
    probs.push_back(model::softmax_rows(model::forward(branch, prop, px, nullptr, nullptr)));
  }
  const Matrix fused = n_branches == 2 ? model::late_fuse(probs[0], probs[1]) : probs[0];

  std::vector<int> pred, truth;
  Vector scores;
  for (std::size_t i = 0; i < fused.rows(); ++i) {
    if (!mask[i]) continue;
    pred.push_back(fused(i, 1) > fused(i, 0) ? 1 : 0);
    truth.push_back(labels[i]);
    scores.push_back(fused(i, 1));  // positive-class probability
  }
  if (pred.empty()) throw std::runtime_error("evaluate_on_mask: empty evaluation mask");

  metrics::EvalReport report = metrics::confusion_and_rates(pred, truth, /*positive=*/1);
  report.positive_class = to_string(task_labels(task).second);
  const bool both = std::count(truth.begin(), truth.end(), 1) > 0 &&
                    std::count(truth.begin(), truth.end(), 0) > 0;
  if (both) {
    report.auc = metrics::auc(scores, truth, 1);
  } else {
    report.degenerate = true;
  }
  return report;
}

namespace {

RunResult run_one(const CohortBundle& bundle, const ExperimentConfig& cfg, int repeat,
                  bool use_bundle_splits, const popgraph::Masks* override_masks,
                  std::uint64_t seed) {
  PreparedGraph prep = prepare_graph(bundle, cfg, repeat, use_bundle_splits, override_masks);

  trainer::TrainConfig tc = cfg.train;
  tc.seed = seed;

  Rng init_rng = Rng::stream(seed, "init");
  const std::size_t classes = 2;
  const bool single = cfg.mode == Mode::single_smri || cfg.mode == Mode::single_pet;
  model::DualBranchModel net;
  if (single) {
    net = model::DualBranchModel::single(
        model::init_branch(cfg.arch, tc.k_order, prep.graphs.x0.cols(), tc.hidden, classes,
                           tc.use_bias, tc.dropout, init_rng));
  } else {
    auto b0 = model::init_branch(cfg.arch, tc.k_order, prep.graphs.x0.cols(), tc.hidden, classes,
                                 tc.use_bias, tc.dropout, init_rng);
    auto b1 = model::init_branch(cfg.arch, tc.k_order, prep.graphs.x1.cols(), tc.hidden, classes,
                                 tc.use_bias, tc.dropout, init_rng);
    net = model::DualBranchModel::dual(std::move(b0), std::move(b1));
  }

  trainer::TrainResult trained = trainer::train(std::move(net), prep.graphs, prep.labels,
                                                prep.masks, tc);

  RunResult run;
  run.report = evaluate_on_mask(trained.model, prep.graphs, prep.labels, prep.masks.test,
                                cfg.task);
  run.log = std::move(trained.log);
  run.trace = prep.trace;
  run.masks = std::move(prep.masks);
  run.model = std::move(trained.model);
  run.seed = seed;
  run.split_source = prep.split_source;
  return run;
}

}  // namespace

ExperimentResult run_experiment(const CohortBundle& bundle, const ExperimentConfig& cfg) {
  if (cfg.repeats < 1) throw std::invalid_argument("run_experiment: repeats must be >= 1");
  ExperimentResult result;
  const bool use_bundle_splits = cfg.repeats == 1;
  for (int r = 0; r < cfg.repeats; ++r) {
    result.runs.push_back(run_one(bundle, cfg, r, use_bundle_splits, nullptr,
                                  repeat_seed(cfg.train.seed, r)));
  }
  std::vector<metrics::EvalReport> reports;
  for (const auto& run : result.runs) reports.push_back(run.report);
  result.aggregate = metrics::aggregate(reports);
  return result;
}

ExperimentResult run_kfold(const CohortBundle& bundle, const ExperimentConfig& cfg, int folds) {
  const std::vector<std::size_t> nodes = task_node_indices(bundle, cfg.task);
  std::vector<SubjectRecord> node_subjects;
  node_subjects.reserve(nodes.size());
  for (std::size_t node : nodes) node_subjects.push_back(bundle.subjects[node]);

  const auto fold_masks = metrics::kfold_split(node_subjects, folds, cfg.train.seed);
  ExperimentResult result;
  for (int f = 0; f < folds; ++f) {
    result.runs.push_back(run_one(bundle, cfg, f, false, &fold_masks[static_cast<std::size_t>(f)],
                                  repeat_seed(cfg.train.seed, f)));
  }
  std::vector<metrics::EvalReport> reports;
  for (const auto& run : result.runs) reports.push_back(run.report);
  result.aggregate = metrics::aggregate(reports);
  return result;
}

std::vector<std::pair<std::string, popgraph::PhenoConfig>> ablation_rows() {
  using popgraph::PhenoConfig;
  std::vector<std::pair<std::string, PhenoConfig>> rows;
  rows.emplace_back("similarity", PhenoConfig::similarity());
  rows.emplace_back("apoe4", PhenoConfig::parse("apoe4"));
  rows.emplace_back("age", PhenoConfig::parse("age"));
  rows.emplace_back("gender", PhenoConfig::parse("gender"));
  rows.emplace_back("mmse", PhenoConfig::parse("mmse"));
  rows.emplace_back("gender+mmse", PhenoConfig::parse("gender,mmse"));
  rows.emplace_back("gender+apoe4+mmse", PhenoConfig::parse("gender,apoe4,mmse"));
  return rows;
}

Checkpoint make_checkpoint(const RunResult& run, const ExperimentConfig& cfg) {
  Checkpoint ckpt;
  ckpt.model = run.model;
  ckpt.seed = cfg.train.seed;
  ckpt.task = to_string(cfg.task);
  ckpt.mode = to_string(cfg.mode);
  ckpt.pheno = cfg.pheno.describe();
  ckpt.smri_channel = brainnet::to_string(cfg.smri_channel);
  if (cfg.sigma.kind == popgraph::SigmaRule::Kind::fixed) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", cfg.sigma.value);
    ckpt.sigma_rule = buf;
  } else {
    ckpt.sigma_rule = "data";
  }
  ckpt.split_source = run.split_source;
  return ckpt;
}

}  // namespace popgnn::experiment
