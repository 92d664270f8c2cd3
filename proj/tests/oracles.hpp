#pragma once

// Independent brute-force oracles used by the test suites. Everything here is
// deliberately written as straight-line loop code with no shared machinery
// from the library kernels, so a bug cannot cancel out on both sides.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "popgnn/matrix.hpp"
#include "popgnn/model.hpp"

namespace oracles {

inline popgnn::Matrix naive_matmul(const popgnn::Matrix& a, const popgnn::Matrix& b) {
  popgnn::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      long double acc = 0.0L;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        acc += static_cast<long double>(a(i, k)) * static_cast<long double>(b(k, j));
      }
      c(i, j) = static_cast<double>(acc);
    }
  }
  return c;
}

// Per-entry magnitude bound sum_k |a_ik| |b_kj|, for error scaling.
inline popgnn::Matrix abs_matmul(const popgnn::Matrix& a, const popgnn::Matrix& b) {
  popgnn::Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        acc += std::abs(a(i, k)) * std::abs(b(k, j));
      }
      c(i, j) = acc;
    }
  }
  return c;
}

/// Cyclic Jacobi rotations; returns all eigenvalues of a symmetric matrix,
/// sorted ascending.
inline std::vector<double> jacobi_eigenvalues(popgnn::Matrix a, int max_sweeps = 100,
                                              double tol = 1e-14) {
  const std::size_t n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (std::sqrt(off) < tol) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

inline double spectral_radius(const popgnn::Matrix& a) {
  double r = 0.0;
  for (double v : jacobi_eigenvalues(a)) r = std::max(r, std::abs(v));
  return r;
}

/// Textbook two-pass Pearson formula.
inline double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Straight-line reimplementation of the two-layer forward pass (no shared
/// layer helpers, no kernels): H = sum_k T_k Z Theta_k + bias per layer,
/// ReLU plus optional dropout scaling between the layers.
inline popgnn::Matrix straightline_forward(const popgnn::model::BranchModel& m,
                                           const std::vector<popgnn::Matrix>& t_list,
                                           const popgnn::Matrix& x,
                                           const popgnn::Matrix* dropout_scale) {
  using popgnn::Matrix;
  auto layer = [&t_list](const Matrix& z, const popgnn::model::LayerWeights& w) {
    const std::size_t n = z.rows();
    const std::size_t fout = w.theta[0].cols();
    Matrix h(n, fout);
    for (std::size_t k = 0; k < t_list.size(); ++k) {
      // tz = T_k z
      Matrix tz(n, z.cols());
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < z.cols(); ++j) {
          double acc = 0.0;
          for (std::size_t s = 0; s < n; ++s) acc += t_list[k](i, s) * z(s, j);
          tz(i, j) = acc;
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < fout; ++j) {
          double acc = 0.0;
          for (std::size_t s = 0; s < z.cols(); ++s) acc += tz(i, s) * w.theta[k](s, j);
          h(i, j) += acc;
        }
      }
    }
    if (!w.bias.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < fout; ++j) h(i, j) += w.bias[j];
      }
    }
    return h;
  };

  popgnn::Matrix h1 = layer(x, m.layers[0]);
  for (std::size_t i = 0; i < h1.size(); ++i) {
    if (h1.data()[i] < 0.0) h1.data()[i] = 0.0;
  }
  if (dropout_scale != nullptr) {
    for (std::size_t i = 0; i < h1.size(); ++i) h1.data()[i] *= dropout_scale->data()[i];
  }
  return layer(h1, m.layers[1]);
}

inline double max_abs_diff(const popgnn::Matrix& a, const popgnn::Matrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

}  // namespace oracles
