#pragma once

#include <string>
#include <vector>

#include "popgnn/matrix.hpp"
#include "popgnn/popgraph.hpp"

namespace popgnn::fusion {

/// How the two modality graphs share edge weights. DUAL keeps each branch on
/// its own adjacency; the other three place both branches on one shared
/// matrix. Fusion always operates on raw (pre-normalization) adjacencies;
/// normalization and Laplacian scaling happen model-side afterwards.
enum class FusionMode { DUAL, INTEGRATION, FEATURE_FUSION, INTEGRATED_FUSION };

std::string to_string(FusionMode m);

/// A_im = A_s (element-wise) A_f.
Matrix integrate_adjacency(const Matrix& a_s, const Matrix& a_f);

/// Adjacency from per-subject concatenation of both modalities' features;
/// the kernel width is resolved on the concatenated feature space.
Matrix fused_feature_adjacency(const Matrix& x0, const Matrix& x1,
                               const std::vector<SubjectRecord>& subjects,
                               const popgraph::PhenoConfig& cfg,
                               const popgraph::SigmaRule& sigma);

/// A_if = A_im (element-wise) A_fm.
Matrix integrated_fusion_adjacency(const Matrix& a_im, const Matrix& a_fm);

Matrix concat_columns(const Matrix& x0, const Matrix& x1);

struct BranchGraphs {
  Matrix branch0_adj;
  Matrix branch1_adj;
  Matrix x0;  // sMRI node features
  Matrix x1;  // PET node features
};

BranchGraphs assemble_branch_graphs(const Matrix& a_s, const Matrix& a_f, const Matrix& x0,
                                    const Matrix& x1, FusionMode mode,
                                    const std::vector<SubjectRecord>& subjects,
                                    const popgraph::PhenoConfig& cfg,
                                    const popgraph::SigmaRule& sigma);

}  // namespace popgnn::fusion
