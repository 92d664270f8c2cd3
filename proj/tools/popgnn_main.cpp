// popgnn: population-graph GNN pipeline for multi-modal disease
// classification on ROI feature tables. Subcommands cover synthetic cohort
// generation, brain-network feature extraction, graph construction,
// training, evaluation, phenotype ablations, and report aggregation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "popgnn/brainnet.hpp"
#include "popgnn/dataio.hpp"
#include "popgnn/experiment.hpp"
#include "popgnn/kernels.hpp"
#include "popgnn/synth.hpp"

namespace fs = std::filesystem;
using namespace popgnn;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string out = "out";
  std::uint64_t seed = 0;
  std::string subjects;
  std::string pet, gm, wm;
  std::string task = "adnc";
  std::string arch = "cheb";
  std::string mode = "ifusion";
  std::string pheno = "none";
  std::string smri_channel = "gm";
  double sigma = 0.0;  // 0 = data-driven
  int epochs = 0;      // 0 = arch default (100 cheb / 300 gcn)
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int hidden = 32;
  int k_order = 3;
  int folds = 0;
  int repeats = 1;
  std::string optimizer = "adam";
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--seed", o.seed, "root RNG seed");
  cmd->add_option("--out", o.out, "output directory");
}

void add_data_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--subjects", o.subjects, "subjects CSV path")->required();
  cmd->add_option("--pet", o.pet, "PET suvr feature CSV");
  cmd->add_option("--gm", o.gm, "sMRI gray-matter feature CSV");
  cmd->add_option("--wm", o.wm, "sMRI white-matter feature CSV");
}

void add_model_flags(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--task", o.task, "adnc|smcipmci");
  cmd->add_option("--arch", o.arch, "gcn|cheb");
  cmd->add_option("--mode", o.mode,
                  "dual|integration|fusion|ifusion|single-smri|single-pet");
  cmd->add_option("--pheno", o.pheno, "comma list of gender,apoe4,mmse,age or none");
  cmd->add_option("--smri-channel", o.smri_channel, "gm|wm|gmwm");
  cmd->add_option("--sigma", o.sigma, "fixed kernel width (default: data-driven)");
  cmd->add_option("--epochs", o.epochs, "training epochs (default 100 cheb, 300 gcn)");
  cmd->add_option("--lr", o.lr, "learning rate");
  cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
  cmd->add_option("--dropout", o.dropout, "dropout rate");
  cmd->add_option("--hidden", o.hidden, "hidden units per branch");
  cmd->add_option("--k-order", o.k_order, "Chebyshev order");
  cmd->add_option("--folds", o.folds, "k-fold cross-validation (0 = plain split)");
  cmd->add_option("--repeats", o.repeats, "independent repeats with rotating test sets");
  cmd->add_option("--optimizer", o.optimizer, "adam|sgd");
}

CohortBundle load_bundle(const CommonOpts& o, bool need_pet, bool need_smri) {
  std::map<Modality, std::string> paths;
  if (!o.pet.empty()) paths[Modality::pet_suvr] = o.pet;
  if (!o.gm.empty()) paths[Modality::smri_gm] = o.gm;
  if (!o.wm.empty()) paths[Modality::smri_wm] = o.wm;
  if (need_pet && o.pet.empty()) throw std::runtime_error("--pet is required for this mode");
  if (need_smri && (o.gm.empty() || o.wm.empty())) {
    throw std::runtime_error("--gm and --wm are required for this mode");
  }
  return dataio::load_cohort(o.subjects, paths);
}

experiment::ExperimentConfig make_config(const CommonOpts& o) {
  experiment::ExperimentConfig cfg;
  cfg.task = task_from_string(o.task);
  cfg.arch = model::arch_from_string(o.arch);
  cfg.mode = experiment::mode_from_string(o.mode);
  cfg.pheno = popgraph::PhenoConfig::parse(o.pheno);
  cfg.sigma = o.sigma > 0.0 ? popgraph::SigmaRule::fixed(o.sigma)
                            : popgraph::SigmaRule::data_driven();
  cfg.smri_channel = brainnet::smri_channel_from_string(o.smri_channel);
  cfg.train.lr = o.lr;
  cfg.train.weight_decay = o.weight_decay;
  cfg.train.dropout = o.dropout;
  cfg.train.hidden = o.hidden;
  cfg.train.k_order = o.k_order;
  cfg.train.seed = o.seed;
  cfg.train.optimizer = trainer::optimizer_from_string(o.optimizer);
  cfg.train.epochs = o.epochs > 0 ? o.epochs : (cfg.arch == model::Arch::cheb ? 100 : 300);
  cfg.repeats = o.repeats;
  return cfg;
}

bool mode_needs_pet(experiment::Mode m) { return m != experiment::Mode::single_smri; }
bool mode_needs_smri(experiment::Mode m) { return m != experiment::Mode::single_pet; }

void write_experiment_outputs(const experiment::ExperimentResult& result,
                              const std::string& out_dir, const std::string& tag) {
  fs::create_directories(out_dir);
  dataio::write_file_atomic(out_dir + "/" + tag + "_report.json",
                            metrics::to_json(result.aggregate));
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    dataio::write_file_atomic(
        out_dir + "/" + tag + "_trainlog_" + std::to_string(r) + ".csv",
        trainer::to_text(result.runs[r].log));
  }
}

void print_aggregate(const std::string& tag, const metrics::AggregateReport& agg) {
  std::printf("%-22s ACC %6.2f +- %5.2f  SEN %6.2f +- %5.2f  SPE %6.2f +- %5.2f  AUC %6.2f +- %5.2f  (n=%d)\n",
              tag.c_str(), 100.0 * agg.acc_mean, 100.0 * agg.acc_std, 100.0 * agg.sen_mean,
              100.0 * agg.sen_std, 100.0 * agg.spe_mean, 100.0 * agg.spe_std,
              100.0 * agg.auc_mean, 100.0 * agg.auc_std, agg.n_runs);
}

int cmd_gen_synth(const CommonOpts& o, int n_per_class, int p_rois, double effect_size,
                  double affected_fraction) {
  dataio::SynthConfig cfg;
  cfg.n_per_class = n_per_class;
  cfg.p_rois = p_rois;
  cfg.effect_size = effect_size;
  cfg.affected_fraction = affected_fraction;
  cfg.seed = o.seed;
  cfg.task = task_from_string(o.task);
  const CohortBundle bundle = dataio::generate_synthetic(cfg);
  dataio::save_cohort(bundle, o.out);
  json manifest;
  manifest["provenance"] = bundle.provenance;
  manifest["n_subjects"] = bundle.subjects.size();
  manifest["files"] = {"subjects.csv", "pet_suvr.csv", "smri_gm.csv", "smri_wm.csv"};
  dataio::write_file_atomic(o.out + "/manifest.json", manifest.dump(2));
  std::printf("wrote %zu subjects to %s\n", bundle.subjects.size(), o.out.c_str());
  return 0;
}

int cmd_brainnet(const CommonOpts& o) {
  const auto cfg = make_config(o);
  const CohortBundle bundle = load_bundle(o, mode_needs_pet(cfg.mode), mode_needs_smri(cfg.mode));
  fs::create_directories(o.out);

  const auto [control, patient] = task_labels(cfg.task);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < bundle.subjects.size(); ++i) {
    const Label l = bundle.subjects[i].label;
    if (l == control || l == patient) nodes.push_back(i);
  }

  auto emit = [&](const RoiFeatureTable& table, const std::string& name) {
    const auto ref = brainnet::build_nc_reference(table, bundle.subjects);
    std::vector<std::size_t> rows;
    for (std::size_t node : nodes) rows.push_back(*table.row_index(bundle.subjects[node].id));
    const Matrix x = brainnet::node_feature_matrix(table, rows, ref, cfg.eps);
    std::string csv = "id";
    for (std::size_t j = 1; j <= x.cols(); ++j) csv += ",f_" + std::to_string(j);
    csv += "\n";
    const std::string body = dataio::matrix_to_csv(x);
    std::size_t line_start = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::size_t line_end = body.find('\n', line_start);
      csv += bundle.subjects[nodes[i]].id + "," + body.substr(line_start, line_end - line_start) +
             "\n";
      line_start = line_end + 1;
    }
    dataio::write_file_atomic(o.out + "/nodefeat_" + name + ".csv", csv);
    std::printf("nodefeat_%s.csv: %zu x %zu (reference from %zu train-split NC subjects)\n",
                name.c_str(), x.rows(), x.cols(), ref.source_ids.size());
  };

  if (mode_needs_smri(cfg.mode)) {
    emit(brainnet::build_smri_channel(bundle.roi_tables.at(Modality::smri_gm),
                                      bundle.roi_tables.at(Modality::smri_wm), cfg.smri_channel),
         "smri_" + brainnet::to_string(cfg.smri_channel));
  }
  if (mode_needs_pet(cfg.mode)) {
    emit(bundle.roi_tables.at(Modality::pet_suvr), "pet");
  }
  return 0;
}

int cmd_graph(const CommonOpts& o) {
  const auto cfg = make_config(o);
  const CohortBundle bundle = load_bundle(o, mode_needs_pet(cfg.mode), mode_needs_smri(cfg.mode));
  const auto prep = experiment::prepare_graph(bundle, cfg, 0, true);
  fs::create_directories(o.out);
  dataio::write_file_atomic(o.out + "/adjacency_branch0.csv",
                            dataio::matrix_to_csv(prep.graphs.branch0_adj));
  dataio::write_file_atomic(o.out + "/laplacian_branch0.csv",
                            dataio::matrix_to_csv(
                                popgraph::normalized_laplacian(prep.graphs.branch0_adj)));
  if (prep.graphs.branch1_adj.size() > 0) {
    dataio::write_file_atomic(o.out + "/adjacency_branch1.csv",
                              dataio::matrix_to_csv(prep.graphs.branch1_adj));
    dataio::write_file_atomic(o.out + "/laplacian_branch1.csv",
                              dataio::matrix_to_csv(
                                  popgraph::normalized_laplacian(prep.graphs.branch1_adj)));
  }
  json stats;
  stats["n_nodes"] = prep.node_ids.size();
  stats["mode"] = to_string(cfg.mode);
  stats["pheno"] = cfg.pheno.describe();
  stats["sigma_branch0"] = prep.trace.sigma0;
  stats["sigma_branch1"] = prep.trace.sigma1;
  std::size_t nnz = 0;
  for (std::size_t i = 0; i < prep.graphs.branch0_adj.size(); ++i) {
    nnz += prep.graphs.branch0_adj.data()[i] != 0.0 ? 1 : 0;
  }
  stats["branch0_nonzeros"] = nnz;
  dataio::write_file_atomic(o.out + "/graph_stats.json", stats.dump(2));
  std::printf("graph over %zu nodes written to %s\n", prep.node_ids.size(), o.out.c_str());
  return 0;
}

int cmd_train(const CommonOpts& o) {
  const auto cfg = make_config(o);
  const CohortBundle bundle = load_bundle(o, mode_needs_pet(cfg.mode), mode_needs_smri(cfg.mode));
  fs::create_directories(o.out);

  if (o.folds > 0) {
    auto kcfg = cfg;
    kcfg.repeats = 1;
    const auto result = experiment::run_kfold(bundle, kcfg, o.folds);
    write_experiment_outputs(result, o.out, "cv");
    for (std::size_t f = 0; f < result.runs.size(); ++f) {
      std::printf("fold %zu: ACC %.2f AUC %.2f\n", f, 100.0 * result.runs[f].report.acc,
                  100.0 * result.runs[f].report.auc);
    }
    print_aggregate("cv(" + std::to_string(o.folds) + "-fold)", result.aggregate);
    return 0;
  }

  const auto result = experiment::run_experiment(bundle, cfg);
  write_experiment_outputs(result, o.out, "train");
  save_checkpoint(experiment::make_checkpoint(result.runs[0], cfg), o.out + "/model.ckpt");
  print_aggregate(to_string(cfg.mode), result.aggregate);
  return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& checkpoint_path) {
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);

  CommonOpts derived = o;
  derived.task = ckpt.task;
  derived.mode = ckpt.mode;
  derived.pheno = ckpt.pheno;
  derived.smri_channel = ckpt.smri_channel;
  derived.seed = ckpt.seed;
  if (ckpt.sigma_rule != "data") derived.sigma = std::stod(ckpt.sigma_rule);
  auto cfg = make_config(derived);
  if (!ckpt.model.branches.empty()) {
    cfg.arch = ckpt.model.branches[0].arch;
    cfg.train.k_order = ckpt.model.branches[0].k_order;
    cfg.train.hidden = ckpt.model.branches[0].hidden;
  }

  const CohortBundle bundle =
      load_bundle(derived, mode_needs_pet(cfg.mode), mode_needs_smri(cfg.mode));

  int repeat = 0;
  bool use_bundle = true;
  if (ckpt.split_source.rfind("derived:", 0) == 0) {
    use_bundle = false;
    repeat = std::stoi(ckpt.split_source.substr(8));
  }
  const auto prep = experiment::prepare_graph(bundle, cfg, repeat, use_bundle);
  const auto report = experiment::evaluate_on_mask(ckpt.model, prep.graphs, prep.labels,
                                                   prep.masks.test, cfg.task);
  fs::create_directories(o.out);
  dataio::write_file_atomic(o.out + "/eval_report.json", metrics::to_json(report));
  std::printf("ACC %.2f SEN %.2f SPE %.2f AUC %.2f (n_test=%d, positive=%s)\n",
              100.0 * report.acc, 100.0 * report.sen, 100.0 * report.spe, 100.0 * report.auc,
              report.n_test, report.positive_class.c_str());
  return 0;
}

int cmd_ablate(const CommonOpts& o) {
  auto cfg = make_config(o);
  const CohortBundle bundle = load_bundle(o, mode_needs_pet(cfg.mode), mode_needs_smri(cfg.mode));
  fs::create_directories(o.out);
  json summary;
  for (const auto& [name, pheno] : experiment::ablation_rows()) {
    auto row_cfg = cfg;
    row_cfg.pheno = pheno;
    const auto result = experiment::run_experiment(bundle, row_cfg);
    std::string tag = "ablate_" + name;
    for (char& c : tag) {
      if (c == '+') c = '_';
    }
    write_experiment_outputs(result, o.out, tag);
    summary[name] = {{"acc_mean", result.aggregate.acc_mean},
                     {"acc_std", result.aggregate.acc_std},
                     {"auc_mean", result.aggregate.auc_mean}};
    print_aggregate(name, result.aggregate);
  }
  dataio::write_file_atomic(o.out + "/ablate_summary.json", summary.dump(2));
  return 0;
}

int cmd_report(const std::string& dir) {
  bool any = false;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.path().extension() != ".json" || name == "manifest.json" ||
        name == "graph_stats.json" || name == "ablate_summary.json") {
      continue;
    }
    const std::string text = dataio::read_file(entry.path().string());
    const json j = json::parse(text);
    if (j.contains("n_runs")) {
      metrics::AggregateReport agg;
      agg.n_runs = j["n_runs"].get<int>();
      agg.acc_mean = j["acc"]["mean"].get<double>();
      agg.acc_std = j["acc"]["std"].get<double>();
      agg.sen_mean = j["sen"]["mean"].get<double>();
      agg.sen_std = j["sen"]["std"].get<double>();
      agg.spe_mean = j["spe"]["mean"].get<double>();
      agg.spe_std = j["spe"]["std"].get<double>();
      agg.auc_mean = j["auc"]["mean"].get<double>();
      agg.auc_std = j["auc"]["std"].get<double>();
      print_aggregate(name, agg);
      any = true;
    } else if (j.contains("acc")) {
      const auto rep = metrics::eval_report_from_json(text);
      std::printf("%-40s ACC %6.2f SEN %6.2f SPE %6.2f AUC %6.2f (n=%d)\n", name.c_str(),
                  100.0 * rep.acc, 100.0 * rep.sen, 100.0 * rep.spe, 100.0 * rep.auc,
                  rep.n_test);
      any = true;
    }
  }
  if (!any) std::printf("no reports found under %s\n", dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population-graph GNN pipeline for multi-modal disease classification"};
  app.require_subcommand(1);

  CommonOpts o;
  int n_per_class = 100, p_rois = 30;
  double effect_size = 1.5, affected_fraction = 0.3;
  std::string checkpoint_path, report_dir = "out";

  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic cohort");
  add_common_flags(gen, o);
  gen->add_option("--task", o.task, "adnc|smcipmci");
  gen->add_option("--n-per-class", n_per_class, "subjects per class");
  gen->add_option("--p-rois", p_rois, "ROIs per modality");
  gen->add_option("--effect-size", effect_size, "class shift in reference sd units");
  gen->add_option("--affected-fraction", affected_fraction, "fraction of ROIs carrying signal");

  auto* bn = app.add_subcommand("brainnet", "build brain-network node features");
  add_common_flags(bn, o);
  add_data_flags(bn, o);
  add_model_flags(bn, o);

  auto* gr = app.add_subcommand("graph", "build population-graph adjacencies");
  add_common_flags(gr, o);
  add_data_flags(gr, o);
  add_model_flags(gr, o);

  auto* tr = app.add_subcommand("train", "train and evaluate the model");
  add_common_flags(tr, o);
  add_data_flags(tr, o);
  add_model_flags(tr, o);

  auto* ev = app.add_subcommand("eval", "evaluate a saved checkpoint");
  add_common_flags(ev, o);
  add_data_flags(ev, o);
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();

  auto* ab = app.add_subcommand("ablate", "phenotype ablation sweep");
  add_common_flags(ab, o);
  add_data_flags(ab, o);
  add_model_flags(ab, o);

  auto* rp = app.add_subcommand("report", "summarize saved reports");
  rp->add_option("--out", report_dir, "directory holding report JSON files");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_synth(o, n_per_class, p_rois, effect_size,
                                            affected_fraction);
    if (bn->parsed()) return cmd_brainnet(o);
    if (gr->parsed()) return cmd_graph(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o, checkpoint_path);
    if (ab->parsed()) return cmd_ablate(o);
    if (rp->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
