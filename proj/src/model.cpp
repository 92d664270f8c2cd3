#include "popgnn/model.hpp"

#include <cmath>
#include <stdexcept>

#include "popgnn/kernels.hpp"

namespace popgnn::model {

std::string to_string(Arch a) { return a == Arch::gcn ? "gcn" : "cheb"; }

Arch arch_from_string(const std::string& s) {
  if (s == "gcn") return Arch::gcn;
  if (s == "cheb") return Arch::cheb;
  throw std::invalid_argument("unknown arch '" + s + "' (expected gcn|cheb)");
}

void BranchModel::validate() const {
  if (hidden < 1) throw std::invalid_argument("BranchModel: hidden must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("BranchModel: dropout_rate must lie in [0, 1)");
  }
  const std::size_t blocks = arch == Arch::cheb ? static_cast<std::size_t>(k_order) + 1 : 1;
  if (arch == Arch::cheb && k_order < 1) {
    throw std::invalid_argument("BranchModel: k_order must be >= 1 for CHEB");
  }
  for (const auto& layer : layers) {
    if (layer.theta.size() != blocks) {
      throw std::invalid_argument("BranchModel: expected " + std::to_string(blocks) +
                                  " weight blocks per layer, got " +
                                  std::to_string(layer.theta.size()));
    }
    for (const auto& t : layer.theta) {
      if (!t.is_finite()) throw std::invalid_argument("BranchModel: non-finite weights");
    }
  }
}

DualBranchModel DualBranchModel::dual(BranchModel b0, BranchModel b1) {
  DualBranchModel m;
  m.branches.push_back(std::move(b0));
  m.branches.push_back(std::move(b1));
  m.validate();
  return m;
}

DualBranchModel DualBranchModel::single(BranchModel b) {
  DualBranchModel m;
  m.branches.push_back(std::move(b));
  m.validate();
  return m;
}

void DualBranchModel::validate() const {
  if (branches.empty() || branches.size() > 2) {
    throw std::invalid_argument("DualBranchModel: expected 1 or 2 branches, got " +
                                std::to_string(branches.size()));
  }
  for (const auto& b : branches) b.validate();
  if (branches.size() == 2 && branches[0].out_dim() != branches[1].out_dim()) {
    throw std::invalid_argument("DualBranchModel: branches disagree on class count");
  }
}

namespace {

LayerWeights glorot_layer(std::size_t blocks, std::size_t fin, std::size_t fout, bool use_bias,
                          Rng& rng) {
  LayerWeights w;
  const double r = std::sqrt(6.0 / static_cast<double>(fin + fout));
  w.theta.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    Matrix t(fin, fout);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-r, r);
    w.theta.push_back(std::move(t));
  }
  if (use_bias) w.bias.assign(fout, 0.0);
  return w;
}

}  // namespace

BranchModel init_branch(Arch arch, int k_order, std::size_t in_dim, int hidden,
                        std::size_t classes, bool use_bias, double dropout_rate, Rng& rng) {
  BranchModel m;
  m.arch = arch;
  m.k_order = arch == Arch::cheb ? k_order : 1;
  m.hidden = hidden;
  m.dropout_rate = dropout_rate;
  const std::size_t blocks = arch == Arch::cheb ? static_cast<std::size_t>(k_order) + 1 : 1;
  m.layers[0] = glorot_layer(blocks, in_dim, static_cast<std::size_t>(hidden), use_bias, rng);
  m.layers[1] = glorot_layer(blocks, static_cast<std::size_t>(hidden), classes, use_bias, rng);
  m.validate();
  return m;
}

std::vector<Matrix> cheb_basis(const Matrix& l_tilde, int k) {
  if (!l_tilde.is_square()) {
    throw std::invalid_argument("cheb_basis: matrix must be square, got " + l_tilde.shape_str());
  }
  if (k < 0) throw std::invalid_argument("cheb_basis: order must be >= 0");
  std::vector<Matrix> t;
  t.reserve(static_cast<std::size_t>(k) + 1);
  t.push_back(Matrix::identity(l_tilde.rows()));
  if (k >= 1) t.push_back(l_tilde);
  for (int i = 2; i <= k; ++i) {
    // T_k = 2 L~ T_{k-1} - T_{k-2}
    t.push_back(sub(scaled(matmul(l_tilde, t[i - 1]), 2.0), t[i - 2]));
  }
  return t;
}

PropagationOperator PropagationOperator::gcn_from_adjacency(const Matrix& raw_adj) {
  PropagationOperator p;
  p.arch = Arch::gcn;
  p.t_list.push_back(
      popgraph::normalize_adjacency(raw_adj, popgraph::NormMode::renorm_self_loops));
  return p;
}

PropagationOperator PropagationOperator::cheb_from_adjacency(const Matrix& raw_adj, int k,
                                                             const popgraph::LambdaRule& rule) {
  if (k < 1) throw std::invalid_argument("PropagationOperator: Chebyshev order must be >= 1");
  PropagationOperator p;
  p.arch = Arch::cheb;
  p.t_list = cheb_basis(popgraph::scaled_laplacian(raw_adj, rule), k);
  return p;
}

std::vector<Matrix> propagate_input(const PropagationOperator& prop, const Matrix& x) {
  std::vector<Matrix> px;
  px.reserve(prop.t_list.size());
  for (const auto& t : prop.t_list) px.push_back(matmul(t, x));
  return px;
}

Matrix make_dropout_scale(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("make_dropout_scale: rate must lie in [0, 1)");
  }
  Matrix m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return m;
}

Matrix graph_layer_from_propagated(const std::vector<Matrix>& pin, const LayerWeights& w) {
  if (pin.size() != w.theta.size()) {
    throw std::invalid_argument("graph_layer: " + std::to_string(pin.size()) +
                                " propagated blocks vs " + std::to_string(w.theta.size()) +
                                " weight blocks");
  }
  Matrix h = matmul(pin[0], w.theta[0]);
  for (std::size_t k = 1; k < pin.size(); ++k) {
    const Matrix hk = matmul(pin[k], w.theta[k]);
    kernels::ewise_add(h.data(), hk.data(), h.data(), h.size());
  }
  if (!w.bias.empty()) {
    if (w.bias.size() != h.cols()) {
      throw std::invalid_argument("graph_layer: bias length mismatch");
    }
    for (std::size_t i = 0; i < h.rows(); ++i) {
      kernels::ewise_add(h.row(i), w.bias.data(), h.row(i), h.cols());
    }
  }
  ensure_finite(h, "graph_layer");
  return h;
}

Matrix graph_layer_forward(const std::vector<Matrix>& t_list, const Matrix& z,
                           const LayerWeights& w) {
  if (t_list.size() != w.theta.size()) {
    throw std::invalid_argument("graph_layer: " + std::to_string(t_list.size()) +
                                " operator blocks vs " + std::to_string(w.theta.size()) +
                                " weight blocks");
  }
  // Right-associated: T_k (Z Theta_k); cheap when the output width is small.
  Matrix h = matmul(t_list[0], matmul(z, w.theta[0]));
  for (std::size_t k = 1; k < t_list.size(); ++k) {
    const Matrix hk = matmul(t_list[k], matmul(z, w.theta[k]));
    kernels::ewise_add(h.data(), hk.data(), h.data(), h.size());
  }
  if (!w.bias.empty()) {
    if (w.bias.size() != h.cols()) {
      throw std::invalid_argument("graph_layer: bias length mismatch");
    }
    for (std::size_t i = 0; i < h.rows(); ++i) {
      kernels::ewise_add(h.row(i), w.bias.data(), h.row(i), h.cols());
    }
  }
  ensure_finite(h, "graph_layer");
  return h;
}

Matrix forward(const BranchModel& m, const PropagationOperator& prop,
               const std::vector<Matrix>& px, const Matrix* dropout_scale,
               ForwardCache* cache) {
  m.validate();
  if (px.size() != prop.t_list.size()) {
    throw std::invalid_argument("forward: propagated input does not match the operator");
  }

  Matrix pre1 = graph_layer_from_propagated(px, m.layers[0]);

  Matrix z(pre1.rows(), pre1.cols());
  for (std::size_t i = 0; i < pre1.size(); ++i) {
    z.data()[i] = pre1.data()[i] > 0.0 ? pre1.data()[i] : 0.0;
  }
  if (dropout_scale != nullptr) {
    if (!dropout_scale->same_shape(z)) {
      throw std::invalid_argument("forward: dropout mask shape " + dropout_scale->shape_str() +
                                  " vs hidden activations " + z.shape_str());
    }
    kernels::ewise_mul(z.data(), dropout_scale->data(), z.data(), z.size());
  }

  Matrix logits = graph_layer_forward(prop.t_list, z, m.layers[1]);

  if (cache != nullptr) {
    cache->px = &px;
    cache->pre1 = std::move(pre1);
    cache->layer2_input = std::move(z);
    cache->dropout_scale = dropout_scale != nullptr ? *dropout_scale : Matrix();
    cache->logits = logits;
    cache->valid = true;
  }
  return logits;
}

Matrix softmax_rows(const Matrix& logits) {
  ensure_finite(logits, "softmax_rows");
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    double mx = logits(i, 0);
    for (std::size_t j = 1; j < logits.cols(); ++j) mx = std::max(mx, logits(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
      const double e = std::exp(logits(i, j) - mx);
      p(i, j) = e;
      total += e;
    }
    for (std::size_t j = 0; j < logits.cols(); ++j) p(i, j) /= total;
  }
  return p;
}

Matrix late_fuse(const Matrix& p0, const Matrix& p1) {
  if (!p0.same_shape(p1)) {
    throw std::invalid_argument("late_fuse: shape mismatch, " + p0.shape_str() + " vs " +
                                p1.shape_str());
  }
  Matrix out(p0.rows(), p0.cols());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = 0.5 * (p0.data()[i] + p1.data()[i]);
  }
  return out;
}

double masked_cross_entropy(const Matrix& probs, const std::vector<int>& labels,
                            const std::vector<std::uint8_t>& mask) {
  if (labels.size() != probs.rows() || mask.size() != probs.rows()) {
    throw std::invalid_argument("masked_cross_entropy: rows/labels/mask lengths disagree");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
      throw std::invalid_argument("masked_cross_entropy: label " + std::to_string(y) +
                                  " outside class range at node " + std::to_string(i));
    }
    total += -std::log(std::max(probs(i, static_cast<std::size_t>(y)), 1e-12));
    ++count;
  }
  if (count == 0) throw std::invalid_argument("masked_cross_entropy: empty mask");
  return total / static_cast<double>(count);
}

Matrix masked_cross_entropy_grad(const Matrix& probs, const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& mask) {
  if (labels.size() != probs.rows() || mask.size() != probs.rows()) {
    throw std::invalid_argument("masked_cross_entropy_grad: rows/labels/mask lengths disagree");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) count += mask[i] ? 1 : 0;
  if (count == 0) throw std::invalid_argument("masked_cross_entropy_grad: empty mask");

  Matrix g(probs.rows(), probs.cols());
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    if (!mask[i]) continue;
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= probs.cols()) {
      throw std::invalid_argument("masked_cross_entropy_grad: label " + std::to_string(y) +
                                  " outside class range at node " + std::to_string(i));
    }
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      g(i, j) = (probs(i, j) - (static_cast<std::size_t>(y) == j ? 1.0 : 0.0)) * inv;
    }
  }
  return g;
}

Matrix softmax_rows_vjp(const Matrix& probs, const Matrix& dprobs) {
  if (!probs.same_shape(dprobs)) {
    throw std::invalid_argument("softmax_rows_vjp: shape mismatch");
  }
  Matrix dz(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < probs.cols(); ++j) inner += dprobs(i, j) * probs(i, j);
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      dz(i, j) = probs(i, j) * (dprobs(i, j) - inner);
    }
  }
  return dz;
}

namespace {

Vector column_sums(const Matrix& m) {
  Vector s(m.cols(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    kernels::ewise_add(s.data(), m.row(i), s.data(), m.cols());
  }
  return s;
}

}  // namespace

BranchGrads backward(const BranchModel& m, const PropagationOperator& prop,
                     const ForwardCache& cache, const Matrix& dlogits) {
  if (!cache.valid || cache.px == nullptr) {
    throw std::invalid_argument("backward: stale or missing forward cache");
  }
  if (!dlogits.same_shape(cache.logits)) {
    throw std::invalid_argument("backward: dlogits shape " + dlogits.shape_str() +
                                " does not match cached logits " + cache.logits.shape_str());
  }
  const std::vector<Matrix>& px = *cache.px;
  if (px.size() != prop.t_list.size() || px.size() != m.layers[0].theta.size()) {
    throw std::invalid_argument("backward: cache does not match the model/operator");
  }

  BranchGrads g;
  const std::size_t blocks = prop.t_list.size();
  const Matrix z_t = transpose(cache.layer2_input);

  // Layer 2: logits = sum_k T_k Z Theta1_k + b1. With u_k = T_k dlogits
  // (T_k symmetric): dTheta1_k = Z^T u_k and dZ = sum_k u_k Theta1_k^T.
  Matrix dz(cache.layer2_input.rows(), cache.layer2_input.cols());
  g.layers[1].theta.reserve(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    const Matrix u = matmul(prop.t_list[k], dlogits);
    g.layers[1].theta.push_back(matmul(z_t, u));
    const Matrix dzk = matmul(u, transpose(m.layers[1].theta[k]));
    kernels::ewise_add(dz.data(), dzk.data(), dz.data(), dz.size());
  }
  if (!m.layers[1].bias.empty()) g.layers[1].bias = column_sums(dlogits);

  // Through dropout and ReLU.
  if (!cache.dropout_scale.empty()) {
    kernels::ewise_mul(dz.data(), cache.dropout_scale.data(), dz.data(), dz.size());
  }
  for (std::size_t i = 0; i < dz.size(); ++i) {
    if (cache.pre1.data()[i] <= 0.0) dz.data()[i] = 0.0;
  }

  // Layer 1: H1 = sum_k (T_k X) Theta0_k + b0; dTheta0_k = (T_k X)^T dH1.
  g.layers[0].theta.reserve(blocks);
  for (std::size_t k = 0; k < blocks; ++k) {
    g.layers[0].theta.push_back(matmul(transpose(px[k]), dz));
  }
  if (!m.layers[0].bias.empty()) g.layers[0].bias = column_sums(dz);

  return g;
}

}  // namespace popgnn::model
