#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "popgnn/matrix.hpp"
#include "popgnn/popgraph.hpp"
#include "popgnn/rng.hpp"

namespace popgnn::model {

enum class Arch { gcn, cheb };

std::string to_string(Arch a);
Arch arch_from_string(const std::string& s);

/// One graph-convolution layer: a single weight block for the first-order
/// GCN, or K+1 Chebyshev coefficient blocks. Bias is optional (empty vector
/// disables it).
struct LayerWeights {
  std::vector<Matrix> theta;  // each F_in x F_out
  Vector bias;                // F_out or empty

  bool operator==(const LayerWeights&) const = default;
};

struct BranchModel {
  Arch arch = Arch::cheb;
  int k_order = 3;  // CHEB only
  int hidden = 32;
  double dropout_rate = 0.5;
  std::array<LayerWeights, 2> layers;

  std::size_t in_dim() const { return layers[0].theta.at(0).rows(); }
  std::size_t out_dim() const { return layers[1].theta.at(0).cols(); }
  void validate() const;

  bool operator==(const BranchModel&) const = default;
};

/// Dual-branch container (one branch per modality). A single-branch model is
/// permitted for the single-modality ablations; late fusion then degenerates
/// to that branch's own prediction.
struct DualBranchModel {
  std::vector<BranchModel> branches;

  static DualBranchModel dual(BranchModel b0, BranchModel b1);
  static DualBranchModel single(BranchModel b);
  void validate() const;

  bool operator==(const DualBranchModel&) const = default;
};

/// Seeded Glorot-uniform initialization: every theta block is drawn from
/// U(-r, r) with r = sqrt(6 / (fan_in + fan_out)); biases start at zero.
BranchModel init_branch(Arch arch, int k_order, std::size_t in_dim, int hidden,
                        std::size_t classes, bool use_bias, double dropout_rate, Rng& rng);

/// Chebyshev basis [T_0 .. T_k] of the scaled Laplacian via the three-term
/// recurrence T_k = 2 L~ T_{k-1} - T_{k-2}.
std::vector<Matrix> cheb_basis(const Matrix& l_tilde, int k);

/// The graph operator each layer propagates through: the renormalized
/// adjacency for GCN, the Chebyshev basis of the scaled Laplacian for CHEB.
struct PropagationOperator {
  Arch arch = Arch::gcn;
  std::vector<Matrix> t_list;

  static PropagationOperator gcn_from_adjacency(const Matrix& raw_adj);
  static PropagationOperator cheb_from_adjacency(
      const Matrix& raw_adj, int k,
      const popgraph::LambdaRule& rule = popgraph::LambdaRule::power());
  std::size_t n_nodes() const { return t_list.at(0).rows(); }
};

/// T_k * X for every basis element; computed once per (operator, features)
/// pair since node features never change during transductive training.
std::vector<Matrix> propagate_input(const PropagationOperator& prop, const Matrix& x);

/// Inverted-dropout scale matrix: entries are 0 with probability `rate`,
/// otherwise 1/(1-rate).
Matrix make_dropout_scale(std::size_t rows, std::size_t cols, double rate, Rng& rng);

struct ForwardCache {
  const std::vector<Matrix>* px = nullptr;  // layer-1 propagated input (not owned)
  Matrix pre1;           // layer-1 pre-activation
  Matrix layer2_input;   // post-ReLU, post-dropout
  Matrix dropout_scale;  // empty when dropout disabled
  Matrix logits;
  bool valid = false;
};

/// Two-layer forward pass: H1 = sum_k (T_k X) Theta0_k + b0, ReLU, dropout
/// (train only), then logits = sum_k T_k (Z Theta1_k) + b1. Raw logits are
/// returned; softmax is a separate op so the cross-entropy path and the
/// late-fusion path both stay numerically stable.
/// `px` must outlive `cache` when a cache is requested.
Matrix forward(const BranchModel& m, const PropagationOperator& prop,
               const std::vector<Matrix>& px, const Matrix* dropout_scale,
               ForwardCache* cache);

/// Layer primitives, exposed for direct verification.
Matrix graph_layer_from_propagated(const std::vector<Matrix>& pin, const LayerWeights& w);
Matrix graph_layer_forward(const std::vector<Matrix>& t_list, const Matrix& z,
                           const LayerWeights& w);

Matrix softmax_rows(const Matrix& logits);

/// Element-wise average of two row-stochastic matrices (late decision fusion).
Matrix late_fuse(const Matrix& p0, const Matrix& p1);

/// Mean over masked rows of -log(probability of the true class), with a
/// 1e-12 probability floor before the log.
double masked_cross_entropy(const Matrix& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask);

/// Gradient of masked_cross_entropy(softmax_rows(logits), ...) with respect
/// to the logits: (p - onehot)/n_masked on masked rows, zero elsewhere.
Matrix masked_cross_entropy_grad(const Matrix& probs, const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& mask);

/// Vector-Jacobian product of a row softmax: given upstream dL/dp, returns
/// dL/dlogits. Used by the optional fused-loss training path.
Matrix softmax_rows_vjp(const Matrix& probs, const Matrix& dprobs);

struct LayerGrads {
  std::vector<Matrix> theta;
  Vector bias;
};

struct BranchGrads {
  std::array<LayerGrads, 2> layers;
};

/// Exact reverse-mode gradients for every weight block and bias of one
/// branch. `dlogits` is the loss gradient at the logits.
BranchGrads backward(const BranchModel& m, const PropagationOperator& prop,
                     const ForwardCache& cache, const Matrix& dlogits);

}  // namespace popgnn::model
