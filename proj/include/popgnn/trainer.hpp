#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popgnn/fusion.hpp"
#include "popgnn/model.hpp"
#include "popgnn/popgraph.hpp"

namespace popgnn::trainer {

enum class Optimizer { ADAM, SGD };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& s);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  int epochs = 100;  // CHEB convention; GCN runs default to 300 at the CLI
  int k_order = 3;
  int hidden = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::ADAM;
  bool use_bias = true;
  bool fuse_in_loss = false;        // late fusion joins the loss only if set
  bool checkpoint_best_val = false; // keep the best-validation-epoch weights

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double branch0_val_acc = 0.0;
  double branch1_val_acc = 0.0;
  double fused_val_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainLog {
  std::vector<EpochRecord> records;

  bool operator==(const TrainLog&) const = default;
};

/// Line-delimited text form: a header line, then one CSV record per epoch
/// with full-precision (%.17g) floats.
std::string to_text(const TrainLog& log);
TrainLog train_log_from_text(const std::string& text);

/// One Adam update on a flat parameter span. Weight decay enters as an
/// additive L2 gradient term before the moment updates. `t` counts steps
/// starting at 1.
struct AdamSlot {
  std::vector<double> m;
  std::vector<double> v;
};

void adam_step(double* param, const double* grad, AdamSlot& slot, std::size_t n, int t,
               double lr, double beta1, double beta2, double eps, double weight_decay);

/// Plain SGD: p' = p - lr * (g + wd * p).
void sgd_step(double* param, const double* grad, std::size_t n, double lr,
              double weight_decay);

struct TrainResult {
  model::DualBranchModel model;
  TrainLog log;
};

/// Full-batch transductive training. The loss is the sum of per-branch
/// masked cross-entropies over the train mask; weight decay applies to
/// weight matrices only, never biases. Validation metrics are logged every
/// epoch with dropout off. Test-mask labels are never read here: the loss
/// and all logged metrics touch train and val rows only.
TrainResult train(model::DualBranchModel m, const fusion::BranchGraphs& graphs,
                  const std::vector<int>& labels, const popgraph::Masks& masks,
                  const TrainConfig& cfg);

}  // namespace popgnn::trainer
