#include "popgnn/matrix.hpp"

#include <cmath>
#include <stdexcept>

#include "popgnn/kernels.hpp"

namespace popgnn {

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("from_rows: ragged row lengths");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

bool Matrix::is_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool Matrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = i + 1; j < cols_; ++j) {
      if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    }
  }
  return true;
}

double Matrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

std::string Matrix::shape_str() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

void ensure_finite(const Matrix& m, const char* op) {
  if (!m.is_finite()) {
    throw std::runtime_error(std::string(op) + ": produced a non-finite value (" +
                             m.shape_str() + " result)");
  }
}

void ensure_finite(const Vector& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw std::runtime_error(std::string(op) + ": produced a non-finite value");
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: dimension mismatch, lhs " + a.shape_str() +
                                " vs rhs " + b.shape_str());
  }
  Matrix c(a.rows(), b.cols());
  kernels::matmul(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
  ensure_finite(c, "matmul");
  return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("hadamard: shape mismatch, " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c(a.rows(), a.cols());
  kernels::ewise_mul(a.data(), b.data(), c.data(), a.size());
  ensure_finite(c, "hadamard");
  return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("add: shape mismatch, " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c(a.rows(), a.cols());
  kernels::ewise_add(a.data(), b.data(), c.data(), a.size());
  ensure_finite(c, "add");
  return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("sub: shape mismatch, " + a.shape_str() + " vs " +
                                b.shape_str());
  }
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  ensure_finite(c, "sub");
  return c;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix c = a;
  kernels::scale(s, c.data(), c.size());
  ensure_finite(c, "scaled");
  return c;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw std::invalid_argument("matvec: dimension mismatch, " + a.shape_str() +
                                " vs vector of length " + std::to_string(x.size()));
  }
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = kernels::dot(a.row(i), x.data(), a.cols());
  return y;
}

LambdaMaxEstimate power_iteration_lambda_max(const Matrix& m, double tol,
                                             std::size_t max_iter) {
  if (!m.is_square()) {
    throw std::invalid_argument("power_iteration_lambda_max: matrix must be square, got " +
                                m.shape_str());
  }
  const double scale = m.max_abs();
  if (!m.is_symmetric(1e-10 * std::max(1.0, scale))) {
    throw std::invalid_argument("power_iteration_lambda_max: matrix must be symmetric");
  }
  const std::size_t n = m.rows();
  if (n == 0) return {0.0, true};
  if (scale == 0.0) return {0.0, true};

  // Fixed start: normalized all-ones, for determinism.
  Vector v(n, 1.0 / std::sqrt(static_cast<double>(n)));

  double lambda = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector w = matvec(m, v);
    lambda = kernels::dot(v.data(), w.data(), n);  // Rayleigh quotient, v unit

    double resid_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w[i] - lambda * v[i];
      resid_sq += r * r;
    }
    // Accept only once the iterate sits on the dominant eigenspace:
    // a symmetric matrix satisfies ||M||_2 >= max|m_ij|, so an eigenvalue
    // smaller than that bound cannot be the dominant one.
    if (std::sqrt(resid_sq) <= tol * std::max(1.0, std::abs(lambda)) &&
        std::abs(lambda) >= scale * (1.0 - 1e-8)) {
      return {std::abs(lambda), true};
    }

    const double norm = std::sqrt(kernels::dot(w.data(), w.data(), n));
    if (!(norm > scale * 1e-14)) {
      // Iterate collapsed into the kernel of a nonzero matrix; the all-ones
      // start cannot reach the dominant eigenvector from here.
      return {2.0, false};
    }
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
  }
  return {2.0, false};
}

double pearson_correlation(const Vector& x, const Vector& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("pearson_correlation: length mismatch, " +
                                std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) {
    throw std::invalid_argument("pearson_correlation: need length >= 2");
  }
  const std::size_t n = x.size();
  const double mx = kernels::sum(x.data(), n) / static_cast<double>(n);
  const double my = kernels::sum(y.data(), n) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;  // constant vector rule
  double r = sxy / std::sqrt(sxx * syy);
  if (r > 1.0) r = 1.0;
  if (r < -1.0) r = -1.0;
  return r;
}

Matrix pearson_correlation_matrix(const Matrix& samples) {
  const std::size_t n = samples.rows();
  const std::size_t p = samples.cols();
  if (n < 2) {
    throw std::invalid_argument("pearson_correlation_matrix: need >= 2 samples, got " +
                                std::to_string(n));
  }
  // Center columns once, then correlations are normalized cross products.
  Matrix centered(n, p);
  Vector ssq(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += samples(i, j);
    mean /= static_cast<double>(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = samples(i, j) - mean;
      centered(i, j) = d;
      s += d * d;
    }
    ssq[j] = s;
  }
  Matrix corr(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    corr(i, i) = ssq[i] > 0.0 ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      double r = 0.0;
      if (ssq[i] > 0.0 && ssq[j] > 0.0) {
        double dotv = 0.0;
        for (std::size_t s = 0; s < n; ++s) dotv += centered(s, i) * centered(s, j);
        r = dotv / std::sqrt(ssq[i] * ssq[j]);
        if (r > 1.0) r = 1.0;
        if (r < -1.0) r = -1.0;
      }
      corr(i, j) = r;
      corr(j, i) = r;
    }
  }
  return corr;
}

}  // namespace popgnn
