#include "popgnn/fusion.hpp"

#include <stdexcept>

namespace popgnn::fusion {

std::string to_string(FusionMode m) {
  switch (m) {
    case FusionMode::DUAL: return "dual";
    case FusionMode::INTEGRATION: return "integration";
    case FusionMode::FEATURE_FUSION: return "fusion";
    case FusionMode::INTEGRATED_FUSION: return "ifusion";
  }
  return "dual";
}

Matrix integrate_adjacency(const Matrix& a_s, const Matrix& a_f) {
  if (!a_s.same_shape(a_f)) {
    throw std::invalid_argument("integrate_adjacency: shape mismatch, " + a_s.shape_str() +
                                " vs " + a_f.shape_str());
  }
  return hadamard(a_s, a_f);
}

Matrix concat_columns(const Matrix& x0, const Matrix& x1) {
  if (x0.rows() != x1.rows() && !x0.empty() && !x1.empty()) {
    throw std::invalid_argument("concat_columns: row mismatch, " + x0.shape_str() + " vs " +
                                x1.shape_str());
  }
  if (x0.empty()) return x1;
  if (x1.empty()) return x0;
  Matrix out(x0.rows(), x0.cols() + x1.cols());
  for (std::size_t i = 0; i < x0.rows(); ++i) {
    for (std::size_t j = 0; j < x0.cols(); ++j) out(i, j) = x0(i, j);
    for (std::size_t j = 0; j < x1.cols(); ++j) out(i, x0.cols() + j) = x1(i, j);
  }
  return out;
}

Matrix fused_feature_adjacency(const Matrix& x0, const Matrix& x1,
                               const std::vector<SubjectRecord>& subjects,
                               const popgraph::PhenoConfig& cfg,
                               const popgraph::SigmaRule& sigma) {
  if (x0.rows() != x1.rows() && !x0.empty() && !x1.empty()) {
    throw std::invalid_argument("fused_feature_adjacency: row mismatch, " + x0.shape_str() +
                                " vs " + x1.shape_str());
  }
  const Matrix xc = concat_columns(x0, x1);
  return popgraph::build_adjacency(xc, subjects, cfg, sigma);
}

Matrix integrated_fusion_adjacency(const Matrix& a_im, const Matrix& a_fm) {
  if (!a_im.same_shape(a_fm)) {
    throw std::invalid_argument("integrated_fusion_adjacency: shape mismatch, " +
                                a_im.shape_str() + " vs " + a_fm.shape_str());
  }
  return hadamard(a_im, a_fm);
}

BranchGraphs assemble_branch_graphs(const Matrix& a_s, const Matrix& a_f, const Matrix& x0,
                                    const Matrix& x1, FusionMode mode,
                                    const std::vector<SubjectRecord>& subjects,
                                    const popgraph::PhenoConfig& cfg,
                                    const popgraph::SigmaRule& sigma) {
  BranchGraphs g;
  g.x0 = x0;
  g.x1 = x1;
  switch (mode) {
    case FusionMode::DUAL:
      g.branch0_adj = a_s;
      g.branch1_adj = a_f;
      break;
    case FusionMode::INTEGRATION: {
      Matrix a_im = integrate_adjacency(a_s, a_f);
      g.branch0_adj = a_im;
      g.branch1_adj = std::move(a_im);
      break;
    }
    case FusionMode::FEATURE_FUSION: {
      Matrix a_fm = fused_feature_adjacency(x0, x1, subjects, cfg, sigma);
      g.branch0_adj = a_fm;
      g.branch1_adj = std::move(a_fm);
      break;
    }
    case FusionMode::INTEGRATED_FUSION: {
      const Matrix a_im = integrate_adjacency(a_s, a_f);
      const Matrix a_fm = fused_feature_adjacency(x0, x1, subjects, cfg, sigma);
      Matrix a_if = integrated_fusion_adjacency(a_im, a_fm);
      g.branch0_adj = a_if;
      g.branch1_adj = std::move(a_if);
      break;
    }
  }
  return g;
}

}  // namespace popgnn::fusion
