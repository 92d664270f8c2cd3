#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "popgnn/fusion.hpp"
#include "popgnn/rng.hpp"

using namespace popgnn;
using namespace popgnn::fusion;

namespace {

Matrix random_adjacency(std::size_t n, Rng& rng, double density = 0.7) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = rng.bernoulli(density) ? rng.uniform(0.01, 1.0) : 0.0;
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  return a;
}

Matrix off_diagonal_ones(std::size_t n) {
  Matrix a(n, n, 1.0);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 0.0;
  return a;
}

std::size_t nnz(const Matrix& m) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < m.size(); ++i) c += m.data()[i] != 0.0 ? 1 : 0;
  return c;
}

std::vector<SubjectRecord> plain_subjects(std::size_t n) {
  std::vector<SubjectRecord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].id = "s" + std::to_string(i);
    out[i].age = 70.0;
  }
  return out;
}

Matrix random_features(std::size_t n, std::size_t f, Rng& rng) {
  Matrix x(n, f);
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("integration: all-ones partner passes the other matrix through") {
  Rng rng(3);
  const Matrix a_s = random_adjacency(6, rng);
  const Matrix a_im = integrate_adjacency(a_s, off_diagonal_ones(6));
  CHECK(a_im == a_s);  // zero diagonal on both sides

  // Disjoint supports annihilate.
  Matrix left(3, 3, 0.0), right(3, 3, 0.0);
  left(0, 1) = left(1, 0) = 0.5;
  right(1, 2) = right(2, 1) = 0.7;
  CHECK(integrate_adjacency(left, right) == Matrix(3, 3, 0.0));

  CHECK_THROWS_AS(integrate_adjacency(Matrix(2, 2), Matrix(3, 3)), std::invalid_argument);
}

TEST_CASE("integration matches the element-wise loop oracle") {
  Rng rng(5);
  const Matrix a = random_adjacency(5, rng);
  const Matrix b = random_adjacency(5, rng);
  const Matrix im = integrate_adjacency(a, b);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(im(i, j) == a(i, j) * b(i, j));
    }
  }
}

TEST_CASE("feature fusion: empty second modality reduces to the single-modality graph") {
  Rng rng(7);
  const Matrix x0 = random_features(5, 6, rng);
  const auto subjects = plain_subjects(5);
  const auto cfg = popgraph::PhenoConfig::similarity();
  const auto sigma = popgraph::SigmaRule::fixed(0.8);
  const Matrix fused = fused_feature_adjacency(x0, Matrix(), subjects, cfg, sigma);
  const Matrix single = popgraph::build_adjacency(x0, subjects, cfg, sigma);
  CHECK(fused == single);
}

TEST_CASE("feature fusion: identical concatenated rows with indicator sum 2") {
  Matrix x0(2, 3), x1(2, 4);
  for (std::size_t j = 0; j < 3; ++j) x0(0, j) = x0(1, j) = 0.3 * static_cast<double>(j + 1);
  for (std::size_t j = 0; j < 4; ++j) x1(0, j) = x1(1, j) = 1.0 - 0.2 * static_cast<double>(j);
  auto subjects = plain_subjects(2);
  popgraph::PhenoConfig cfg;
  cfg.use_gender = true;
  cfg.use_mmse = true;  // same gender and same MMSE: indicator sum 2
  const Matrix fused =
      fused_feature_adjacency(x0, x1, subjects, cfg, popgraph::SigmaRule::fixed(1.0));
  CHECK(fused(0, 1) == 2.0);
  CHECK(fused(1, 0) == 2.0);
}

TEST_CASE("feature fusion equals the concatenate-then-pairwise oracle") {
  Rng rng(11);
  const std::size_t n = 4;
  const Matrix x0 = random_features(n, 5, rng);
  const Matrix x1 = random_features(n, 7, rng);
  std::vector<SubjectRecord> subjects = plain_subjects(n);
  subjects[1].gender = Gender::F;
  subjects[2].mmse = 22;
  popgraph::PhenoConfig cfg;
  cfg.use_gender = cfg.use_mmse = true;
  const double sigma = 0.9;
  const Matrix fused =
      fused_feature_adjacency(x0, x1, subjects, cfg, popgraph::SigmaRule::fixed(sigma));

  for (std::size_t v = 0; v < n; ++v) {
    for (std::size_t u = v + 1; u < n; ++u) {
      Vector fv, fu;
      for (std::size_t j = 0; j < 5; ++j) {
        fv.push_back(x0(v, j));
        fu.push_back(x0(u, j));
      }
      for (std::size_t j = 0; j < 7; ++j) {
        fv.push_back(x1(v, j));
        fu.push_back(x1(u, j));
      }
      const double expect = popgraph::similarity_kernel(fv, fu, sigma) *
                            popgraph::pheno_indicator(subjects[v], subjects[u], cfg);
      CHECK(fused(v, u) == doctest::Approx(expect).epsilon(1e-13));
    }
  }
}

TEST_CASE("integrated fusion: identity partner, algebraic identity, loop oracle") {
  Rng rng(13);
  const Matrix a_im = random_adjacency(6, rng);
  CHECK(integrated_fusion_adjacency(a_im, off_diagonal_ones(6)) == a_im);

  const Matrix a_s = random_adjacency(6, rng);
  const Matrix a_f = random_adjacency(6, rng);
  const Matrix a_fm = random_adjacency(6, rng);
  const Matrix a_if = integrated_fusion_adjacency(integrate_adjacency(a_s, a_f), a_fm);
  for (std::size_t i = 0; i < a_if.size(); ++i) {
    const double direct = a_s.data()[i] * a_f.data()[i] * a_fm.data()[i];
    CHECK(std::abs(a_if.data()[i] - direct) <= 1e-15 * std::abs(direct));
  }
}

TEST_CASE("fusion invariants: symmetry, nonnegativity, support shrinkage, order freedom") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(5);
    const Matrix a = random_adjacency(n, rng, 0.5);
    const Matrix b = random_adjacency(n, rng, 0.5);
    const Matrix c = random_adjacency(n, rng, 0.5);

    const Matrix im = integrate_adjacency(a, b);
    CHECK(im.is_symmetric());
    for (std::size_t i = 0; i < im.size(); ++i) CHECK(im.data()[i] >= 0.0);

    const Matrix left = integrated_fusion_adjacency(im, c);
    const Matrix right = integrate_adjacency(a, integrate_adjacency(b, c));
    CHECK(nnz(left) <= std::min(nnz(im), nnz(c)));
    for (std::size_t i = 0; i < left.size(); ++i) {
      const double scale = std::max(std::abs(left.data()[i]), std::abs(right.data()[i]));
      CHECK(std::abs(left.data()[i] - right.data()[i]) <= 1e-15 * (1.0 + scale));
    }
  }
}

TEST_CASE("assemble: mode table per branch") {
  Rng rng(19);
  const std::size_t n = 5;
  const Matrix a_s = random_adjacency(n, rng);
  const Matrix a_f = random_adjacency(n, rng);
  const Matrix x0 = random_features(n, 4, rng);
  const Matrix x1 = random_features(n, 6, rng);
  const auto subjects = plain_subjects(n);
  const auto cfg = popgraph::PhenoConfig::similarity();
  const auto sigma = popgraph::SigmaRule::data_driven();

  const auto dual = assemble_branch_graphs(a_s, a_f, x0, x1, FusionMode::DUAL, subjects, cfg,
                                           sigma);
  CHECK(dual.branch0_adj == a_s);
  CHECK(dual.branch1_adj == a_f);
  CHECK(dual.x0 == x0);
  CHECK(dual.x1 == x1);

  const auto integ = assemble_branch_graphs(a_s, a_f, x0, x1, FusionMode::INTEGRATION, subjects,
                                            cfg, sigma);
  CHECK(integ.branch0_adj == integ.branch1_adj);
  CHECK(integ.branch0_adj == integrate_adjacency(a_s, a_f));

  const auto feat = assemble_branch_graphs(a_s, a_f, x0, x1, FusionMode::FEATURE_FUSION,
                                           subjects, cfg, sigma);
  CHECK(feat.branch0_adj == feat.branch1_adj);
  CHECK(feat.branch0_adj == fused_feature_adjacency(x0, x1, subjects, cfg, sigma));

  const auto ifu = assemble_branch_graphs(a_s, a_f, x0, x1, FusionMode::INTEGRATED_FUSION,
                                          subjects, cfg, sigma);
  CHECK(ifu.branch0_adj == ifu.branch1_adj);
  CHECK(ifu.branch0_adj ==
        integrated_fusion_adjacency(integrate_adjacency(a_s, a_f),
                                    fused_feature_adjacency(x0, x1, subjects, cfg, sigma)));
}
