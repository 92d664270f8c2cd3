#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "popgnn/matrix.hpp"
#include "popgnn/rng.hpp"

using namespace popgnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

Matrix random_symmetric(std::size_t n, Rng& rng) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = rng.uniform(-1.0, 1.0);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      m(i, j) = v;
      m(j, i) = v;
    }
  }
  return m;
}

}  // namespace

TEST_CASE("matmul: identity, hand case, dot-product case") {
  const Matrix m = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(matmul(Matrix::identity(2), m) == m);

  const Matrix flip = Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  const Matrix prod = matmul(m, flip);
  CHECK(prod == Matrix::from_rows({{2.0, 1.0}, {4.0, 3.0}}));

  Rng rng(3);
  const std::size_t k = 9;
  Matrix row(1, k), col(k, 1);
  double expect = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    row(0, i) = rng.uniform(-1.0, 1.0);
    col(i, 0) = rng.uniform(-1.0, 1.0);
  }
  for (std::size_t i = 0; i < k; ++i) expect += row(0, i) * col(i, 0);
  CHECK(matmul(row, col)(0, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
  const Matrix a(2, 3), b(4, 2);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("4x2"), std::invalid_argument);
}

TEST_CASE("matmul associativity on random small matrices") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix a = random_matrix(4, 6, rng);
    const Matrix b = random_matrix(6, 5, rng);
    const Matrix c = random_matrix(5, 3, rng);
    const Matrix left = matmul(matmul(a, b), c);
    const Matrix right = matmul(a, matmul(b, c));
    CHECK(oracles::max_abs_diff(left, right) < 1e-9);
  }
}

TEST_CASE("hadamard: identities and hand case") {
  Rng rng(5);
  const Matrix m = random_matrix(3, 4, rng);
  CHECK(hadamard(m, Matrix(3, 4, 1.0)) == m);
  CHECK(hadamard(m, Matrix(3, 4, 0.0)) == Matrix(3, 4, 0.0));

  const Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const Matrix b = Matrix::from_rows({{2.0, 0.0}, {0.0, 2.0}});
  CHECK(hadamard(a, b) == Matrix::from_rows({{2.0, 0.0}, {0.0, 8.0}}));

  CHECK_THROWS_AS(hadamard(Matrix(2, 2), Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("hadamard commutes exactly and keeps symmetry") {
  Rng rng(29);
  const Matrix a = random_symmetric(6, rng);
  const Matrix b = random_symmetric(6, rng);
  const Matrix ab = hadamard(a, b);
  CHECK(ab == hadamard(b, a));
  CHECK(ab.is_symmetric());
}

TEST_CASE("power iteration: diagonal and 2x2 hand cases") {
  const Matrix d = Matrix::from_rows({{3.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 0.5}});
  const auto est = power_iteration_lambda_max(d, 1e-10, 2000);
  CHECK(est.converged);
  CHECK(est.value == doctest::Approx(3.0).epsilon(1e-8));

  // Characteristic polynomial x^2 - 4x + 3 has roots 3 and 1.
  const Matrix m = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  const auto est2 = power_iteration_lambda_max(m, 1e-10, 2000);
  CHECK(est2.converged);
  CHECK(est2.value == doctest::Approx(3.0).epsilon(1e-8));
}

TEST_CASE("power iteration matches the Jacobi oracle on random gapped matrices") {
  Rng rng(101);
  int done = 0;
  while (done < 50) {
    const Matrix m = random_symmetric(6, rng);
    const auto eig = oracles::jacobi_eigenvalues(m);
    double a1 = 0.0, a2 = 0.0;  // two largest magnitudes
    for (double v : eig) {
      const double av = std::abs(v);
      if (av > a1) {
        a2 = a1;
        a1 = av;
      } else if (av > a2) {
        a2 = av;
      }
    }
    if (a1 == 0.0 || a2 / a1 > 0.98) continue;  // needs a spectral gap
    const auto est = power_iteration_lambda_max(m, 1e-10, 20000);
    CHECK(est.converged);
    CHECK(std::abs(est.value - a1) < 1e-6);
    ++done;
  }
}

TEST_CASE("power iteration on a regular-graph Laplacian falls back to the 2.0 bound") {
  // All-ones is in the kernel of this Laplacian, which is exactly the
  // pinned start vector; the dominant pair (eigenvalue 2) is unreachable.
  const Matrix lap = Matrix::from_rows({{1.0, -1.0}, {-1.0, 1.0}});
  const auto est = power_iteration_lambda_max(lap, 1e-10, 100);
  CHECK_FALSE(est.converged);
  CHECK(est.value == 2.0);
}

TEST_CASE("power iteration rejects non-square and asymmetric inputs") {
  CHECK_THROWS_AS(power_iteration_lambda_max(Matrix(2, 3)), std::invalid_argument);
  const Matrix bad = Matrix::from_rows({{0.0, 1.0}, {0.5, 0.0}});
  CHECK_THROWS_AS(power_iteration_lambda_max(bad), std::invalid_argument);
}

TEST_CASE("pearson: trivial identities") {
  const Vector x = {1.0, 2.0, 4.0, 3.5};
  Vector neg(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) neg[i] = -x[i];
  CHECK(pearson_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(pearson_correlation(x, neg) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("pearson matches the textbook formula") {
  const Vector x = {1.0, 2.0, 3.0};
  const Vector y = {2.0, 4.0, 7.0};
  CHECK(pearson_correlation(x, y) ==
        doctest::Approx(oracles::textbook_pearson(x, y)).epsilon(1e-14));
}

TEST_CASE("pearson: constant vector yields 0, short vectors throw") {
  CHECK(pearson_correlation({5.0, 5.0, 5.0}, {1.0, 2.0, 3.0}) == 0.0);
  CHECK(pearson_correlation({1.0, 2.0, 3.0}, {7.0, 7.0, 7.0}) == 0.0);
  CHECK_THROWS_AS(pearson_correlation({1.0}, {2.0}), std::invalid_argument);
  CHECK_THROWS_AS(pearson_correlation({1.0, 2.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("pearson is invariant under positive affine maps") {
  Rng rng(41);
  for (int trial = 0; trial < 25; ++trial) {
    Vector x(12), y(12);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(-3.0, 3.0);
      y[i] = rng.uniform(-3.0, 3.0);
    }
    const double base = pearson_correlation(x, y);
    const double a = rng.uniform(0.1, 4.0);
    const double b = rng.uniform(-10.0, 10.0);
    Vector xs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xs[i] = a * x[i] + b;
    CHECK(std::abs(pearson_correlation(xs, y) - base) < 1e-12);
    const double c = rng.uniform(0.1, 4.0);
    const double d = rng.uniform(-10.0, 10.0);
    Vector ys(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) ys[i] = c * y[i] + d;
    CHECK(std::abs(pearson_correlation(x, ys) - base) < 1e-12);
  }
}

TEST_CASE("correlation matrix: unit diagonal, constant columns zeroed") {
  Rng rng(53);
  Matrix samples = random_matrix(10, 4, rng);
  for (std::size_t i = 0; i < 10; ++i) samples(i, 2) = 3.25;  // constant column
  const Matrix corr = pearson_correlation_matrix(samples);
  CHECK(corr.is_symmetric());
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(corr(j, j) == (j == 2 ? 0.0 : 1.0));
  }
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(corr(2, j) == 0.0);
    CHECK(corr(j, 2) == 0.0);
  }
  CHECK(corr(0, 1) ==
        doctest::Approx(pearson_correlation(
            Vector{samples(0, 0), samples(1, 0), samples(2, 0), samples(3, 0), samples(4, 0),
                   samples(5, 0), samples(6, 0), samples(7, 0), samples(8, 0), samples(9, 0)},
            Vector{samples(0, 1), samples(1, 1), samples(2, 1), samples(3, 1), samples(4, 1),
                   samples(5, 1), samples(6, 1), samples(7, 1), samples(8, 1), samples(9, 1)}))
            .epsilon(1e-14));
}

TEST_CASE("non-finite results are rejected") {
  Matrix big(1, 2);
  big(0, 0) = 1e308;
  big(0, 1) = 1e308;
  Matrix two(2, 1, 1e308);
  CHECK_THROWS_AS(matmul(big, two), std::runtime_error);
  CHECK_THROWS_AS(hadamard(big, big), std::runtime_error);
}
