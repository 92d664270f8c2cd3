#include "popgnn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace popgnn::trainer {

std::string to_string(Optimizer o) { return o == Optimizer::ADAM ? "adam" : "sgd"; }

Optimizer optimizer_from_string(const std::string& s) {
  if (s == "adam") return Optimizer::ADAM;
  if (s == "sgd") return Optimizer::SGD;
  throw std::invalid_argument("unknown optimizer '" + s + "' (expected adam|sgd)");
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    throw std::invalid_argument("TrainConfig: dropout must lie in [0, 1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("TrainConfig: weight_decay must be >= 0");
}

std::string to_text(const TrainLog& log) {
  std::string out = "epoch,train_loss,val_loss,branch0_val_acc,branch1_val_acc,fused_val_acc\n";
  char buf[256];
  for (const auto& r : log.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss,
                  r.val_loss, r.branch0_val_acc, r.branch1_val_acc, r.fused_val_acc);
    out += buf;
  }
  return out;
}

TrainLog train_log_from_text(const std::string& text) {
  TrainLog log;
  std::stringstream ss(text);
  std::string line;
  bool header = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    EpochRecord r;
    if (std::sscanf(line.c_str(), "%d,%lg,%lg,%lg,%lg,%lg", &r.epoch, &r.train_loss, &r.val_loss,
                    &r.branch0_val_acc, &r.branch1_val_acc, &r.fused_val_acc) != 6) {
      throw std::runtime_error("train log: malformed record '" + line + "'");
    }
    log.records.push_back(r);
  }
  return log;
}

void adam_step(double* param, const double* grad, AdamSlot& slot, std::size_t n, int t,
               double lr, double beta1, double beta2, double eps, double weight_decay) {
  if (slot.m.size() != n) {
    slot.m.assign(n, 0.0);
    slot.v.assign(n, 0.0);
  }
  const double bc1 = 1.0 - std::pow(beta1, t);
  const double bc2 = 1.0 - std::pow(beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i] + weight_decay * param[i];
    slot.m[i] = beta1 * slot.m[i] + (1.0 - beta1) * g;
    slot.v[i] = beta2 * slot.v[i] + (1.0 - beta2) * g * g;
    const double mhat = slot.m[i] / bc1;
    const double vhat = slot.v[i] / bc2;
    param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void sgd_step(double* param, const double* grad, std::size_t n, double lr,
              double weight_decay) {
  for (std::size_t i = 0; i < n; ++i) {
    param[i] -= lr * (grad[i] + weight_decay * param[i]);
  }
}

namespace {

struct BranchOptState {
  std::vector<AdamSlot> theta_slots[2];
  AdamSlot bias_slots[2];
};

double masked_accuracy(const Matrix& probs, const std::vector<int>& labels,
                       const std::vector<std::uint8_t>& mask) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < probs.cols(); ++j) {
      if (probs(i, j) > probs(i, arg)) arg = j;
    }
    correct += (static_cast<int>(arg) == labels[i]) ? 1 : 0;
    ++total;
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace

TrainResult train(model::DualBranchModel m, const fusion::BranchGraphs& graphs,
                  const std::vector<int>& labels, const popgraph::Masks& masks,
                  const TrainConfig& cfg) {
  cfg.validate();
  m.validate();
  masks.validate_partition();

  const std::size_t n_branches = m.branches.size();
  const Matrix* xs[2] = {&graphs.x0, &graphs.x1};
  const Matrix* adjs[2] = {&graphs.branch0_adj, &graphs.branch1_adj};

  const std::size_t n = xs[0]->rows();
  if (labels.size() != n || masks.size() != n) {
    throw std::invalid_argument("train: labels/masks do not match the node count");
  }
  std::size_t n_train = 0, n_val = 0;
  for (auto b : masks.train) n_train += b ? 1 : 0;
  for (auto b : masks.val) n_val += b ? 1 : 0;
  if (n_train == 0) throw std::invalid_argument("train: empty train mask");

  // Graph operators and the fixed propagated inputs, once per run.
  std::vector<model::PropagationOperator> props;
  std::vector<std::vector<Matrix>> px;
  for (std::size_t b = 0; b < n_branches; ++b) {
    const auto& branch = m.branches[b];
    props.push_back(branch.arch == model::Arch::gcn
                        ? model::PropagationOperator::gcn_from_adjacency(*adjs[b])
                        : model::PropagationOperator::cheb_from_adjacency(*adjs[b],
                                                                          branch.k_order));
    px.push_back(model::propagate_input(props[b], *xs[b]));
  }

  std::vector<BranchOptState> opt(n_branches);
  Rng dropout_rng = Rng::stream(cfg.seed, "dropout");

  TrainLog log;
  log.records.reserve(static_cast<std::size_t>(cfg.epochs));
  model::DualBranchModel best = m;
  double best_val_loss = std::numeric_limits<double>::infinity();

  auto run_epoch = [&](int epoch) {
    // Training pass with dropout; losses are evaluated at the current
    // parameters before the update.
    double train_loss = 0.0;
    std::vector<model::ForwardCache> caches(n_branches);
    std::vector<Matrix> masks_drawn(n_branches);
    std::vector<Matrix> train_probs(n_branches);
    for (std::size_t b = 0; b < n_branches; ++b) {
      const Matrix* scale = nullptr;
      if (m.branches[b].dropout_rate > 0.0) {
        masks_drawn[b] =
            model::make_dropout_scale(n, static_cast<std::size_t>(m.branches[b].hidden),
                                      m.branches[b].dropout_rate, dropout_rng);
        scale = &masks_drawn[b];
      }
      const Matrix logits = model::forward(m.branches[b], props[b], px[b], scale, &caches[b]);
      train_probs[b] = model::softmax_rows(logits);
      train_loss += model::masked_cross_entropy(train_probs[b], labels, masks.train);
    }
    if (cfg.fuse_in_loss && n_branches == 2) {
      train_loss += model::masked_cross_entropy(
          model::late_fuse(train_probs[0], train_probs[1]), labels, masks.train);
    }
    if (!std::isfinite(train_loss)) {
      throw std::runtime_error("non-finite loss");
    }

    for (std::size_t b = 0; b < n_branches; ++b) {
      Matrix dlogits = model::masked_cross_entropy_grad(train_probs[b], labels, masks.train);
      if (cfg.fuse_in_loss && n_branches == 2) {
        // d/dp of the fused-term CE, routed through this branch's softmax.
        const Matrix fused = model::late_fuse(train_probs[0], train_probs[1]);
        std::size_t count = 0;
        for (auto t : masks.train) count += t ? 1 : 0;
        Matrix dfused(fused.rows(), fused.cols());
        for (std::size_t i = 0; i < fused.rows(); ++i) {
          if (!masks.train[i]) continue;
          const auto y = static_cast<std::size_t>(labels[i]);
          dfused(i, y) = -0.5 / (std::max(fused(i, y), 1e-12) * static_cast<double>(count));
        }
        const Matrix dz = model::softmax_rows_vjp(train_probs[b], dfused);
        for (std::size_t i = 0; i < dlogits.size(); ++i) {
          dlogits.data()[i] += dz.data()[i];
        }
      }
      const model::BranchGrads grads = model::backward(m.branches[b], props[b], caches[b],
                                                       dlogits);
      auto& state = opt[b];
      for (int layer = 0; layer < 2; ++layer) {
        auto& lw = m.branches[b].layers[static_cast<std::size_t>(layer)];
        const auto& lg = grads.layers[static_cast<std::size_t>(layer)];
        if (state.theta_slots[layer].empty()) state.theta_slots[layer].resize(lw.theta.size());
        for (std::size_t k = 0; k < lw.theta.size(); ++k) {
          if (cfg.optimizer == Optimizer::ADAM) {
            adam_step(lw.theta[k].data(), lg.theta[k].data(), state.theta_slots[layer][k],
                      lw.theta[k].size(), epoch, cfg.lr, cfg.adam_beta1, cfg.adam_beta2,
                      cfg.adam_eps, cfg.weight_decay);
          } else {
            sgd_step(lw.theta[k].data(), lg.theta[k].data(), lw.theta[k].size(), cfg.lr,
                     cfg.weight_decay);
          }
        }
        if (!lw.bias.empty()) {
          // No decay on biases.
          if (cfg.optimizer == Optimizer::ADAM) {
            adam_step(lw.bias.data(), lg.bias.data(), state.bias_slots[layer], lw.bias.size(),
                      epoch, cfg.lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, 0.0);
          } else {
            sgd_step(lw.bias.data(), lg.bias.data(), lw.bias.size(), cfg.lr, 0.0);
          }
        }
      }
    }

    // Validation pass at the updated parameters, dropout off.
    double val_loss = 0.0;
    std::vector<Matrix> val_probs(n_branches);
    for (std::size_t b = 0; b < n_branches; ++b) {
      const Matrix logits = model::forward(m.branches[b], props[b], px[b], nullptr, nullptr);
      val_probs[b] = model::softmax_rows(logits);
      if (n_val > 0) val_loss += model::masked_cross_entropy(val_probs[b], labels, masks.val);
    }
    const Matrix fused =
        n_branches == 2 ? model::late_fuse(val_probs[0], val_probs[1]) : val_probs[0];

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_loss;
    rec.val_loss = val_loss;
    rec.branch0_val_acc = masked_accuracy(val_probs[0], labels, masks.val);
    rec.branch1_val_acc =
        n_branches == 2 ? masked_accuracy(val_probs[1], labels, masks.val) : rec.branch0_val_acc;
    rec.fused_val_acc = masked_accuracy(fused, labels, masks.val);
    log.records.push_back(rec);

    if (cfg.checkpoint_best_val && val_loss < best_val_loss) {
      best_val_loss = val_loss;
      best = m;
    }
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Numeric failures (overflowed intermediates, NaN loss) abort with the
    // offending epoch in the message.
    try {
      run_epoch(epoch);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("train: epoch " + std::to_string(epoch) + ": " + e.what());
    }
  }

  TrainResult result;
  result.model = cfg.checkpoint_best_val ? std::move(best) : std::move(m);
  result.log = std::move(log);
  return result;
}

}  // namespace popgnn::trainer
