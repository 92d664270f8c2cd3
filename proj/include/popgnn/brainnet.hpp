#pragma once

#include <string>
#include <vector>

#include "popgnn/cohort.hpp"
#include "popgnn/matrix.hpp"

namespace popgnn::brainnet {

/// Reference statistics of the normal-control group: per-ROI mean and sample
/// std (n-1 denominator), plus the P x P Pearson correlation matrix of ROI
/// columns. Built exclusively from train-split NC subjects.
struct NcReference {
  Vector mean;
  Vector stddev;
  Matrix corr;
  std::vector<std::string> source_ids;

  std::size_t n_rois() const { return mean.size(); }
};

/// Select train-split NC subjects from the cohort and build the reference.
/// Throws if fewer than two qualify or the table holds non-finite values.
NcReference build_nc_reference(const RoiFeatureTable& table,
                               const std::vector<SubjectRecord>& subjects);

/// Same, but from an explicit donor list. Any id that is not a train-split
/// NC subject is rejected with an error (leakage guard).
NcReference build_nc_reference_from_ids(const RoiFeatureTable& table,
                                        const std::vector<SubjectRecord>& subjects,
                                        const std::vector<std::string>& ids);

/// Interregional effect-size matrix: E(i,j) = |(f_i - m_i) - (f_j - m_j)| /
/// max(sqrt((s_i^2 + s_j^2)/2), eps). Symmetric, nonnegative, zero diagonal.
Matrix effect_size_matrix(const Vector& f, const NcReference& ref, double eps = 1e-8);

/// Weighting matrix W = 1 - R with R = (exp(2E) - 1)/(exp(2E) + 1).
/// R saturates to 1 for large E instead of overflowing, so W stays finite.
Matrix fisher_weighting(const Matrix& e);

struct BrainNetwork {
  Matrix b;  // P x P, symmetric
  std::string subject_id;
};

/// B = W (element-wise) corr. A subject at the NC mean has W = 1 everywhere
/// and reproduces the reference correlation matrix exactly.
BrainNetwork build_brain_network(const Vector& f, const NcReference& ref,
                                 double eps = 1e-8, std::string subject_id = {});

struct NodeFeatures {
  std::string subject_id;
  Vector values;  // length P(P+1)/2
};

/// Row-major upper triangle including the diagonal; length P(P+1)/2.
NodeFeatures flatten_upper(const BrainNetwork& bn);
Matrix unflatten_upper(const Vector& values, std::size_t p);

enum class SmriChannel { GM, WM, GM_PLUS_WM };

std::string to_string(SmriChannel c);
SmriChannel smri_channel_from_string(const std::string& s);

/// GM_PLUS_WM is the element-wise sum of aligned GM and WM volume tables;
/// the single-tissue channels pass through unchanged.
RoiFeatureTable build_smri_channel(const RoiFeatureTable& gm, const RoiFeatureTable& wm,
                                   SmriChannel channel);

/// All subjects' flattened brain-network features as an N x P(P+1)/2 matrix,
/// rows aligned with `rows` (indices into the table).
Matrix node_feature_matrix(const RoiFeatureTable& table, const std::vector<std::size_t>& rows,
                           const NcReference& ref, double eps = 1e-8);

}  // namespace popgnn::brainnet
