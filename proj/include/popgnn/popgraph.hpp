#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "popgnn/cohort.hpp"
#include "popgnn/matrix.hpp"

namespace popgnn::popgraph {

/// Which phenotypic agreement indicators contribute to edge weights.
/// similarity_only disables all of them and fixes the indicator sum at 1.
struct PhenoConfig {
  bool use_gender = false;
  bool use_apoe4 = false;
  bool use_mmse = false;
  bool use_age = false;
  int mmse_tol = 1;
  double age_tol = 1.0;
  bool similarity_only = false;

  static PhenoConfig similarity();
  /// Parses "gender,apoe4,mmse,age" subsets or "none" (= similarity only).
  static PhenoConfig parse(const std::string& spec);
  std::string describe() const;
  void validate() const;
};

struct SigmaRule {
  enum class Kind { mean_correlation_distance, fixed };
  Kind kind = Kind::mean_correlation_distance;
  double value = 0.0;

  static SigmaRule data_driven() { return {Kind::mean_correlation_distance, 0.0}; }
  static SigmaRule fixed(double sigma);
};

/// Gaussian similarity S = exp(-rho^2 / (2 sigma^2)) with rho the Pearson
/// correlation distance 1 - corr(fv, fu). S lies in (0, 1].
double similarity_kernel(const Vector& fv, const Vector& fu, double sigma);

/// Sum of enabled agreement indicators between two subjects: same gender,
/// same apoe4, |mmse difference| <= mmse_tol, |age difference| <= age_tol.
/// In similarity-only mode the value is the constant 1.
double pheno_indicator(const SubjectRecord& u, const SubjectRecord& v, const PhenoConfig& cfg);

/// A(v,u) = S(F_v, F_u) * indicator(v, u) off the diagonal, zero diagonal.
/// Each unordered pair is computed once and mirrored, so the result is
/// symmetric to the last bit. Row i of x is subject[i]'s feature vector.
/// sigma_used, when non-null, receives the resolved kernel width.
Matrix build_adjacency(const Matrix& x, const std::vector<SubjectRecord>& subjects,
                       const PhenoConfig& cfg, const SigmaRule& sigma,
                       double* sigma_used = nullptr);

/// Kernel width actually used by build_adjacency under `rule` (data-driven
/// value is the mean pairwise correlation distance across the cohort).
double resolve_sigma(const Matrix& x, const SigmaRule& rule);

enum class NormMode { renorm_self_loops, sym_norm };

/// renorm_self_loops: D~^{-1/2} (A + I) D~^{-1/2} (first-order GCN operator).
/// sym_norm: D^{-1/2} A D^{-1/2}; isolated nodes become a zero row with a
/// unit self-loop so the operator still carries their signal.
Matrix normalize_adjacency(const Matrix& a, NormMode mode);

struct LambdaRule {
  enum class Kind { power_iteration, fixed };
  Kind kind = Kind::power_iteration;
  double value = 2.0;

  static LambdaRule power() { return {Kind::power_iteration, 2.0}; }
  static LambdaRule fixed(double v) { return {Kind::fixed, v}; }
};

/// L = I - D^{-1/2} A D^{-1/2}; zero-degree nodes contribute nothing to the
/// normalized adjacency, so the Laplacian of an empty graph is the identity.
Matrix normalized_laplacian(const Matrix& a);

/// L~ = (2 / lambda_max) L - I. Non-converged power iteration falls back to
/// lambda_max = 2, which keeps the spectrum of L~ inside [-1, 1].
Matrix scaled_laplacian(const Matrix& a, const LambdaRule& rule = LambdaRule::power());

struct Masks {
  std::vector<std::uint8_t> train;
  std::vector<std::uint8_t> val;
  std::vector<std::uint8_t> test;

  std::size_t size() const { return train.size(); }
  void validate_partition() const;  // masks must partition all nodes
};

struct PopulationGraph {
  Matrix x;                             // N x F node features
  Matrix a;                             // N x N raw adjacency
  Matrix laplacian;                     // normalized Laplacian of a
  std::vector<std::string> subject_ids;
  Masks masks;
  std::vector<int> labels;              // class index per node; train/val
                                        // rows are the labeled set
};

/// Bundles one modality's node features with its adjacency, normalized
/// Laplacian, and split masks. The masks must partition the nodes.
PopulationGraph build_population_graph(Matrix x, const std::vector<SubjectRecord>& subjects,
                                       const PhenoConfig& cfg, const SigmaRule& sigma,
                                       Masks masks, std::vector<int> labels);

}  // namespace popgnn::popgraph
