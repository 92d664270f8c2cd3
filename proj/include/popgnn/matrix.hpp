#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace popgnn {

using Vector = std::vector<double>;

/// Dense row-major f64 matrix. Immutable-after-construction by convention:
/// the free operations below return fresh values and never mutate inputs,
/// so matrices can be shared read-only across threads.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const double* data() const { return data_.data(); }
  double* data() { return data_.data(); }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }
  double* row(std::size_t i) { return data_.data() + i * cols_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool is_square() const { return rows_ == cols_; }
  bool is_finite() const;
  bool is_symmetric(double tol = 0.0) const;
  double max_abs() const;

  std::string shape_str() const;

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
Matrix transpose(const Matrix& a);
Vector matvec(const Matrix& a, const Vector& x);

struct LambdaMaxEstimate {
  double value = 0.0;
  bool converged = false;
};

/// Dominant eigenvalue magnitude of a symmetric matrix by power iteration
/// from the normalized all-ones start vector. When the start vector is
/// (numerically) orthogonal to the dominant eigenspace — e.g. the Laplacian
/// of a regular graph, whose kernel contains the all-ones vector — the
/// iteration cannot recover and the estimate falls back to 2.0 with
/// converged=false, a valid upper bound for normalized Laplacians.
LambdaMaxEstimate power_iteration_lambda_max(const Matrix& m, double tol = 1e-10,
                                             std::size_t max_iter = 1000);

/// Pearson correlation of two equal-length vectors (n >= 2). A constant
/// vector has zero variance and yields correlation 0 rather than NaN.
double pearson_correlation(const Vector& x, const Vector& y);

/// Column-wise Pearson correlation matrix of an n x p sample matrix.
/// Diagonal is exactly 1 for non-constant columns; rows/columns of constant
/// (zero-variance) columns are 0, including the diagonal entry.
Matrix pearson_correlation_matrix(const Matrix& samples);

void ensure_finite(const Matrix& m, const char* op);
void ensure_finite(const Vector& v, const char* op);

}  // namespace popgnn
