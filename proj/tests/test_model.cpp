#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "popgnn/model.hpp"
#include "popgnn/popgraph.hpp"
#include "popgnn/rng.hpp"

using namespace popgnn;
using namespace popgnn::model;

namespace {

Matrix random_symmetric_contraction(std::size_t n, Rng& rng) {
  // Symmetric with spectral radius <= 1: scale by the Gershgorin bound.
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = rng.uniform(-1.0, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(m(i, j));
    bound = std::max(bound, row);
  }
  if (bound > 1.0) {
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] /= bound;
  }
  return m;
}

Matrix random_graph(std::size_t n, Rng& rng, double density = 0.5) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = rng.bernoulli(density) ? rng.uniform(0.05, 1.5) : 0.0;
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

Matrix random_features(std::size_t n, std::size_t f, Rng& rng) {
  Matrix x(n, f);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

struct GradCheckSetup {
  BranchModel net;
  PropagationOperator prop;
  Matrix x;
  std::vector<Matrix> px;
  std::vector<int> labels;
  std::vector<std::uint8_t> mask;
  Matrix dropout_scale;  // empty -> dropout off
};

GradCheckSetup make_setup(Arch arch, std::size_t n, std::size_t f, int hidden, int k,
                          std::uint64_t seed, bool with_dropout_mask) {
  GradCheckSetup s;
  Rng rng(seed);
  const Matrix adj = random_graph(n, rng);
  s.prop = arch == Arch::gcn ? PropagationOperator::gcn_from_adjacency(adj)
                             : PropagationOperator::cheb_from_adjacency(adj, k);
  s.x = random_features(n, f, rng);
  s.px = propagate_input(s.prop, s.x);
  Rng init = Rng::stream(seed, "init");
  s.net = init_branch(arch, k, f, hidden, 2, /*use_bias=*/true, /*dropout=*/0.0, init);
  s.labels.resize(n);
  s.mask.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.labels[i] = static_cast<int>(rng.below(2));
    s.mask[i] = rng.bernoulli(0.7) ? 1 : 0;
  }
  s.mask[0] = 1;  // never empty
  if (with_dropout_mask) {
    Rng drop = Rng::stream(seed, "drop");
    s.dropout_scale = make_dropout_scale(n, static_cast<std::size_t>(hidden), 0.4, drop);
  }
  return s;
}

double loss_of(const GradCheckSetup& s) {
  const Matrix* scale = s.dropout_scale.empty() ? nullptr : &s.dropout_scale;
  const Matrix logits = forward(s.net, s.prop, s.px, scale, nullptr);
  return masked_cross_entropy(softmax_rows(logits), s.labels, s.mask);
}

/// Central finite differences against the analytic gradient for every
/// parameter entry; returns the worst relative error.
double gradcheck_worst_rel_err(GradCheckSetup s, double h = 1e-5) {
  ForwardCache cache;
  const Matrix* scale = s.dropout_scale.empty() ? nullptr : &s.dropout_scale;
  const Matrix logits = forward(s.net, s.prop, s.px, scale, &cache);
  const Matrix probs = softmax_rows(logits);
  const Matrix dlogits = masked_cross_entropy_grad(probs, s.labels, s.mask);
  const BranchGrads grads = backward(s.net, s.prop, cache, dlogits);

  double worst = 0.0;
  auto probe = [&](double* param, double analytic) {
    const double saved = *param;
    *param = saved + h;
    const double up = loss_of(s);
    *param = saved - h;
    const double down = loss_of(s);
    *param = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), 1e-5});
    worst = std::max(worst, rel);
  };

  for (int layer = 0; layer < 2; ++layer) {
    auto& lw = s.net.layers[static_cast<std::size_t>(layer)];
    const auto& lg = grads.layers[static_cast<std::size_t>(layer)];
    for (std::size_t k = 0; k < lw.theta.size(); ++k) {
      for (std::size_t i = 0; i < lw.theta[k].size(); ++i) {
        probe(lw.theta[k].data() + i, lg.theta[k].data()[i]);
      }
    }
    for (std::size_t i = 0; i < lw.bias.size(); ++i) {
      probe(lw.bias.data() + i, lg.bias[i]);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("cheb basis: base cases and explicit polynomials") {
  Rng rng(5);
  const Matrix lt = random_symmetric_contraction(6, rng);
  const auto t1 = cheb_basis(lt, 1);
  REQUIRE(t1.size() == 2);
  CHECK(t1[0] == Matrix::identity(6));
  CHECK(t1[1] == lt);

  const auto t3 = cheb_basis(lt, 3);
  REQUIRE(t3.size() == 4);
  // T_2 = 2 L~^2 - I and T_3 = 4 L~^3 - 3 L~ evaluated directly.
  const Matrix lt2 = oracles::naive_matmul(lt, lt);
  const Matrix lt3 = oracles::naive_matmul(lt2, lt);
  Matrix t2_direct(6, 6), t3_direct(6, 6);
  for (std::size_t i = 0; i < 36; ++i) {
    t2_direct.data()[i] = 2.0 * lt2.data()[i];
    t3_direct.data()[i] = 4.0 * lt3.data()[i] - 3.0 * lt.data()[i];
  }
  for (std::size_t i = 0; i < 6; ++i) t2_direct(i, i) -= 1.0;
  CHECK(oracles::max_abs_diff(t3[2], t2_direct) < 1e-10);
  CHECK(oracles::max_abs_diff(t3[3], t3_direct) < 1e-10);
}

TEST_CASE("cheb basis of the zero matrix alternates I, 0, -I, 0") {
  const auto t = cheb_basis(Matrix(4, 4, 0.0), 3);
  CHECK(t[0] == Matrix::identity(4));
  CHECK(t[1] == Matrix(4, 4, 0.0));
  CHECK(t[2] == scaled(Matrix::identity(4), -1.0));
  CHECK(t[3] == Matrix(4, 4, 0.0));
}

TEST_CASE("cheb basis matches direct evaluation on 20 random contractions") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix lt = random_symmetric_contraction(6, rng);
    const auto t = cheb_basis(lt, 3);
    const Matrix lt2 = oracles::naive_matmul(lt, lt);
    const Matrix lt3 = oracles::naive_matmul(lt2, lt);
    for (std::size_t i = 0; i < 36; ++i) {
      const double direct2 = 2.0 * lt2.data()[i] - (i % 7 == 0 ? 1.0 : 0.0);
      const double direct3 = 4.0 * lt3.data()[i] - 3.0 * lt.data()[i];
      CHECK(std::abs(t[2].data()[i] - direct2) < 1e-10);
      CHECK(std::abs(t[3].data()[i] - direct3) < 1e-10);
    }
  }
}

TEST_CASE("a single GCN layer with identity propagation is a dense layer") {
  Rng rng(11);
  const Matrix x = random_features(5, 4, rng);
  LayerWeights w;
  w.theta.push_back(random_features(4, 3, rng));
  const std::vector<Matrix> ident = {Matrix::identity(5)};
  const Matrix h = graph_layer_forward(ident, x, w);
  CHECK(oracles::max_abs_diff(h, oracles::naive_matmul(x, w.theta[0])) < 1e-12);

  // Degenerate K=0 Chebyshev layer equals the same dense layer.
  const Matrix h0 = graph_layer_from_propagated({x}, w);
  CHECK(oracles::max_abs_diff(h0, oracles::naive_matmul(x, w.theta[0])) < 1e-12);
}

TEST_CASE("forward matches a straight-line reimplementation") {
  for (Arch arch : {Arch::gcn, Arch::cheb}) {
    Rng rng(arch == Arch::gcn ? 13u : 14u);
    const std::size_t n = 9, f = 5;
    const Matrix adj = random_graph(n, rng);
    const PropagationOperator prop = arch == Arch::gcn
                                         ? PropagationOperator::gcn_from_adjacency(adj)
                                         : PropagationOperator::cheb_from_adjacency(adj, 3);
    const Matrix x = random_features(n, f, rng);
    Rng init = Rng::stream(99, "init");
    const BranchModel net = init_branch(arch, 3, f, 6, 2, true, 0.0, init);
    const auto px = propagate_input(prop, x);
    const Matrix logits = forward(net, prop, px, nullptr, nullptr);
    const Matrix expect = oracles::straightline_forward(net, prop.t_list, x, nullptr);
    CHECK(oracles::max_abs_diff(logits, expect) < 1e-10);
  }
}

TEST_CASE("forward is permutation-equivariant") {
  Rng rng(17);
  const std::size_t n = 8, f = 5;
  const Matrix adj = random_graph(n, rng);
  const Matrix x = random_features(n, f, rng);
  Rng init = Rng::stream(7, "init");
  const BranchModel net = init_branch(Arch::cheb, 2, f, 4, 2, true, 0.0, init);

  const PropagationOperator prop = PropagationOperator::cheb_from_adjacency(adj, 2);
  const auto px = propagate_input(prop, x);
  const Matrix logits = forward(net, prop, px, nullptr, nullptr);

  const std::size_t perm[8] = {5, 2, 7, 0, 3, 6, 1, 4};
  Matrix adj_p(n, n), x_p(n, f);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) adj_p(i, j) = adj(perm[i], perm[j]);
    for (std::size_t j = 0; j < f; ++j) x_p(i, j) = x(perm[i], j);
  }
  const PropagationOperator prop_p = PropagationOperator::cheb_from_adjacency(adj_p, 2);
  const auto px_p = propagate_input(prop_p, x_p);
  const Matrix logits_p = forward(net, prop_p, px_p, nullptr, nullptr);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(std::abs(logits_p(i, c) - logits(perm[i], c)) < 1e-10);
    }
  }
}

TEST_CASE("softmax rows: uniform, shift invariance, direct formula") {
  const Matrix two = softmax_rows(Matrix(1, 2, 0.0));
  CHECK(two(0, 0) == 0.5);
  CHECK(two(0, 1) == 0.5);

  Matrix l(1, 3);
  l(0, 0) = 1.0;
  l(0, 1) = 2.0;
  l(0, 2) = 3.0;
  const Matrix p = softmax_rows(l);
  const double z = std::exp(1.0 - 3.0) + std::exp(2.0 - 3.0) + std::exp(0.0);
  CHECK(p(0, 0) == doctest::Approx(std::exp(-2.0) / z).epsilon(1e-14));
  CHECK(p(0, 1) == doctest::Approx(std::exp(-1.0) / z).epsilon(1e-14));
  CHECK(p(0, 2) == doctest::Approx(1.0 / z).epsilon(1e-14));

  Matrix shifted = l;
  for (std::size_t j = 0; j < 3; ++j) shifted(0, j) += 123.25;
  CHECK(oracles::max_abs_diff(softmax_rows(shifted), p) < 1e-12);

  Rng rng(23);
  const Matrix wide = softmax_rows(random_features(6, 4, rng));
  for (std::size_t i = 0; i < 6; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(wide(i, j) > 0.0);
      CHECK(wide(i, j) < 1.0);
      total += wide(i, j);
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("late fuse: identities and agreement") {
  Rng rng(29);
  const Matrix p = softmax_rows(random_features(5, 3, rng));
  CHECK(late_fuse(p, p) == p);

  const Matrix a = Matrix::from_rows({{1.0, 0.0}});
  const Matrix b = Matrix::from_rows({{0.0, 1.0}});
  CHECK(late_fuse(a, b) == Matrix::from_rows({{0.5, 0.5}}));

  // Fused rows stay on the simplex; agreement fixes the argmax.
  const Matrix q = softmax_rows(random_features(5, 3, rng));
  const Matrix fused = late_fuse(p, q);
  for (std::size_t i = 0; i < 5; ++i) {
    double total = 0.0;
    std::size_t ap = 0, aq = 0, af = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      total += fused(i, j);
      if (p(i, j) > p(i, ap)) ap = j;
      if (q(i, j) > q(i, aq)) aq = j;
      if (fused(i, j) > fused(i, af)) af = j;
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
    if (ap == aq) CHECK(af == ap);
  }
  CHECK_THROWS_AS(late_fuse(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("masked cross entropy: one-hot, uniform, loop oracle") {
  Matrix onehot(2, 2);
  onehot(0, 0) = 1.0;
  onehot(1, 1) = 1.0;
  CHECK(masked_cross_entropy(onehot, {0, 1}, {1, 1}) <= 1e-10);

  CHECK(masked_cross_entropy(Matrix(4, 2, 0.5), {0, 1, 0, 1}, {1, 1, 1, 1}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));

  const Matrix probs = Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}, {0.5, 0.5}});
  const std::vector<int> labels = {0, 1, 1};
  const std::vector<std::uint8_t> mask = {1, 0, 1};
  const double expect = (-std::log(0.7) - std::log(0.5)) / 2.0;
  CHECK(masked_cross_entropy(probs, labels, mask) == doctest::Approx(expect).epsilon(1e-14));

  CHECK_THROWS_AS(masked_cross_entropy(probs, labels, {0, 0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(masked_cross_entropy(probs, {0, 1, 5}, mask), std::invalid_argument);
}

TEST_CASE("gradients match finite differences for CHEB and GCN") {
  for (Arch arch : {Arch::cheb, Arch::gcn}) {
    const GradCheckSetup s =
        make_setup(arch, 12, 5, 6, 3, arch == Arch::cheb ? 31u : 32u, false);
    CHECK(gradcheck_worst_rel_err(s) < 1e-4);
  }
}

TEST_CASE("gradients stay exact through a frozen dropout mask") {
  const GradCheckSetup s = make_setup(Arch::cheb, 10, 4, 5, 2, 33, true);
  CHECK(gradcheck_worst_rel_err(s) < 1e-4);
}

TEST_CASE("zero-weight network has zero layer-1 gradients under symmetric labels") {
  Rng rng(37);
  const std::size_t n = 6, f = 4;
  const Matrix adj = random_graph(n, rng);
  const PropagationOperator prop = PropagationOperator::gcn_from_adjacency(adj);
  const Matrix x = random_features(n, f, rng);
  Rng init = Rng::stream(1, "init");
  BranchModel net = init_branch(Arch::gcn, 1, f, 3, 2, true, 0.0, init);
  for (auto& layer : net.layers) {
    for (auto& t : layer.theta) t = Matrix(t.rows(), t.cols(), 0.0);
  }
  const auto px = propagate_input(prop, x);
  ForwardCache cache;
  const Matrix logits = forward(net, prop, px, nullptr, &cache);
  const Matrix probs = softmax_rows(logits);
  const std::vector<int> labels = {0, 1, 0, 1, 0, 1};
  const std::vector<std::uint8_t> mask = {1, 1, 1, 1, 1, 1};
  const BranchGrads g = backward(net, prop, cache, masked_cross_entropy_grad(probs, labels, mask));
  // ReLU kills the zero pre-activations, so layer-1 weights see no signal.
  for (const auto& t : g.layers[0].theta) {
    CHECK(t == Matrix(t.rows(), t.cols(), 0.0));
  }
  // Balanced labels with uniform probabilities cancel the output bias too.
  for (double b : g.layers[1].bias) CHECK(std::abs(b) < 1e-15);
}

TEST_CASE("backward rejects a stale cache") {
  Rng rng(41);
  const GradCheckSetup s = make_setup(Arch::cheb, 8, 4, 4, 2, 43, false);
  ForwardCache cache;  // never filled
  const Matrix dlogits(8, 2, 0.0);
  CHECK_THROWS_AS(backward(s.net, s.prop, cache, dlogits), std::invalid_argument);
}

TEST_CASE("forward/backward are bitwise repeatable with dropout off") {
  const GradCheckSetup s = make_setup(Arch::cheb, 11, 6, 5, 3, 47, false);
  ForwardCache c1, c2;
  const Matrix l1 = forward(s.net, s.prop, s.px, nullptr, &c1);
  const Matrix l2 = forward(s.net, s.prop, s.px, nullptr, &c2);
  CHECK(l1 == l2);
  const Matrix d = masked_cross_entropy_grad(softmax_rows(l1), s.labels, s.mask);
  const BranchGrads g1 = backward(s.net, s.prop, c1, d);
  const BranchGrads g2 = backward(s.net, s.prop, c2, d);
  for (int layer = 0; layer < 2; ++layer) {
    for (std::size_t k = 0; k < g1.layers[layer].theta.size(); ++k) {
      CHECK(g1.layers[layer].theta[k] == g2.layers[layer].theta[k]);
    }
    CHECK(g1.layers[layer].bias == g2.layers[layer].bias);
  }
}
