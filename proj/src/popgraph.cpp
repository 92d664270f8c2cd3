#include "popgnn/popgraph.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "popgnn/kernels.hpp"

namespace popgnn::popgraph {

PhenoConfig PhenoConfig::similarity() {
  PhenoConfig cfg;
  cfg.similarity_only = true;
  return cfg;
}

PhenoConfig PhenoConfig::parse(const std::string& spec) {
  if (spec == "none" || spec == "similarity" || spec.empty()) return similarity();
  PhenoConfig cfg;
  std::string norm = spec;
  for (char& c : norm) {
    if (c == '+') c = ',';
  }
  std::stringstream ss(norm);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "gender") cfg.use_gender = true;
    else if (tok == "apoe4") cfg.use_apoe4 = true;
    else if (tok == "mmse") cfg.use_mmse = true;
    else if (tok == "age") cfg.use_age = true;
    else throw std::invalid_argument("unknown phenotype '" + tok +
                                     "' (expected gender,apoe4,mmse,age or none)");
  }
  cfg.validate();
  return cfg;
}

std::string PhenoConfig::describe() const {
  if (similarity_only) return "similarity";
  std::string out;
  auto append = [&out](const char* name) {
    if (!out.empty()) out += "+";
    out += name;
  };
  if (use_gender) append("gender");
  if (use_apoe4) append("apoe4");
  if (use_mmse) append("mmse");
  if (use_age) append("age");
  return out.empty() ? "similarity" : out;
}

void PhenoConfig::validate() const {
  if (similarity_only && (use_gender || use_apoe4 || use_mmse || use_age)) {
    throw std::invalid_argument("PhenoConfig: similarity_only excludes all indicators");
  }
}

SigmaRule SigmaRule::fixed(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("SigmaRule: sigma must be > 0");
  return {Kind::fixed, sigma};
}

double similarity_kernel(const Vector& fv, const Vector& fu, double sigma) {
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("similarity_kernel: sigma must be > 0, got " +
                                std::to_string(sigma));
  }
  const double rho = 1.0 - pearson_correlation(fv, fu);
  return std::exp(-(rho * rho) / (2.0 * sigma * sigma));
}

double pheno_indicator(const SubjectRecord& u, const SubjectRecord& v, const PhenoConfig& cfg) {
  cfg.validate();
  if (cfg.similarity_only) return 1.0;
  double r = 0.0;
  if (cfg.use_gender && u.gender == v.gender) r += 1.0;
  if (cfg.use_apoe4 && u.apoe4 == v.apoe4) r += 1.0;
  if (cfg.use_mmse && std::abs(u.mmse - v.mmse) <= cfg.mmse_tol) r += 1.0;
  if (cfg.use_age && std::abs(u.age - v.age) <= cfg.age_tol) r += 1.0;
  return r;
}

namespace {

// Rows centered in place; returns per-row sums of squared deviations.
Vector center_rows(Matrix& x) {
  const std::size_t n = x.rows(), f = x.cols();
  Vector ssq(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* r = x.row(i);
    const double mean = kernels::sum(r, f) / static_cast<double>(f);
    double s = 0.0;
    for (std::size_t j = 0; j < f; ++j) {
      r[j] -= mean;
      s += r[j] * r[j];
    }
    ssq[i] = s;
  }
  return ssq;
}

double pair_distance(const Matrix& centered, const Vector& ssq, std::size_t i, std::size_t j) {
  double corr = 0.0;
  if (ssq[i] > 0.0 && ssq[j] > 0.0) {
    corr = kernels::dot(centered.row(i), centered.row(j), centered.cols()) /
           std::sqrt(ssq[i] * ssq[j]);
    if (corr > 1.0) corr = 1.0;
    if (corr < -1.0) corr = -1.0;
  }
  return 1.0 - corr;
}

}  // namespace

double resolve_sigma(const Matrix& x, const SigmaRule& rule) {
  if (rule.kind == SigmaRule::Kind::fixed) {
    if (!(rule.value > 0.0)) throw std::invalid_argument("resolve_sigma: sigma must be > 0");
    return rule.value;
  }
  const std::size_t n = x.rows();
  if (n < 2 || x.cols() < 2) return 1.0;
  Matrix centered = x;
  const Vector ssq = center_rows(centered);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      total += pair_distance(centered, ssq, i, j);
      ++count;
    }
  }
  const double sigma = total / static_cast<double>(count);
  return std::max(sigma, 1e-8);
}

Matrix build_adjacency(const Matrix& x, const std::vector<SubjectRecord>& subjects,
                       const PhenoConfig& cfg, const SigmaRule& sigma, double* sigma_used) {
  cfg.validate();
  const std::size_t n = x.rows();
  if (subjects.size() != n) {
    throw std::invalid_argument("build_adjacency: " + std::to_string(n) +
                                " feature rows vs " + std::to_string(subjects.size()) +
                                " subjects");
  }
  if (x.cols() < 2) {
    throw std::invalid_argument("build_adjacency: need >= 2 features per node");
  }

  Matrix centered = x;
  const Vector ssq = center_rows(centered);

  // Distances once; the data-driven sigma is their mean.
  Matrix rho(n, n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = pair_distance(centered, ssq, i, j);
      rho(i, j) = d;
      total += d;
    }
  }
  double sig;
  if (sigma.kind == SigmaRule::Kind::fixed) {
    if (!(sigma.value > 0.0)) throw std::invalid_argument("build_adjacency: sigma must be > 0");
    sig = sigma.value;
  } else {
    sig = n >= 2 ? std::max(total / (static_cast<double>(n) * (n - 1) / 2.0), 1e-8) : 1.0;
  }
  if (sigma_used != nullptr) *sigma_used = sig;
  const double inv2s2 = 1.0 / (2.0 * sig * sig);

  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = std::exp(-(rho(i, j) * rho(i, j)) * inv2s2);
      const double w = s * pheno_indicator(subjects[i], subjects[j], cfg);
      a(i, j) = w;
      a(j, i) = w;
    }
  }
  ensure_finite(a, "build_adjacency");
  return a;
}

Matrix normalize_adjacency(const Matrix& a, NormMode mode) {
  if (!a.is_square()) {
    throw std::invalid_argument("normalize_adjacency: matrix must be square, got " +
                                a.shape_str());
  }
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.data()[i] < 0.0 || !std::isfinite(a.data()[i])) {
      throw std::invalid_argument("normalize_adjacency: entries must be finite and >= 0");
    }
  }

  Matrix out(n, n);
  if (mode == NormMode::renorm_self_loops) {
    Vector dinv(n);
    for (std::size_t i = 0; i < n; ++i) {
      double d = 1.0;  // the added self-loop
      for (std::size_t j = 0; j < n; ++j) d += a(i, j);
      dinv[i] = 1.0 / std::sqrt(d);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double aij = a(i, j) + (i == j ? 1.0 : 0.0);
        out(i, j) = dinv[i] * aij * dinv[j];
      }
    }
  } else {
    Vector deg(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (deg[i] <= 0.0) {
        out(i, i) = 1.0;  // isolated node keeps a unit self-loop
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (deg[j] <= 0.0 || a(i, j) == 0.0) continue;
        out(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
      }
    }
  }
  ensure_finite(out, "normalize_adjacency");
  return out;
}

Matrix normalized_laplacian(const Matrix& a) {
  if (!a.is_square()) {
    throw std::invalid_argument("normalized_laplacian: matrix must be square, got " +
                                a.shape_str());
  }
  const std::size_t n = a.rows();
  // Zero-degree nodes contribute nothing to the normalized adjacency,
  // leaving a plain 1 on their diagonal entry.
  Vector deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) < 0.0 || !std::isfinite(a(i, j))) {
        throw std::invalid_argument("normalized_laplacian: entries must be finite and >= 0");
      }
      deg[i] += a(i, j);
    }
  }
  Matrix lap(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    lap(i, i) = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || deg[i] <= 0.0 || deg[j] <= 0.0 || a(i, j) == 0.0) continue;
      lap(i, j) = -a(i, j) / std::sqrt(deg[i] * deg[j]);
    }
  }
  return lap;
}

Matrix scaled_laplacian(const Matrix& a, const LambdaRule& rule) {
  const Matrix lap = normalized_laplacian(a);
  const std::size_t n = a.rows();

  double lambda_max = rule.value;
  if (rule.kind == LambdaRule::Kind::power_iteration) {
    const LambdaMaxEstimate est = power_iteration_lambda_max(lap, 1e-9, 1000);
    lambda_max = (est.converged && est.value > 1e-12) ? est.value : 2.0;
  }
  if (!(lambda_max > 0.0)) {
    throw std::invalid_argument("scaled_laplacian: lambda_max must be > 0");
  }

  const double f = 2.0 / lambda_max;
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      out(i, j) = f * lap(i, j) - (i == j ? 1.0 : 0.0);
    }
  }
  ensure_finite(out, "scaled_laplacian");
  return out;
}

PopulationGraph build_population_graph(Matrix x, const std::vector<SubjectRecord>& subjects,
                                       const PhenoConfig& cfg, const SigmaRule& sigma,
                                       Masks masks, std::vector<int> labels) {
  if (masks.size() != x.rows() || labels.size() != x.rows()) {
    throw std::invalid_argument("build_population_graph: masks/labels do not match node count");
  }
  masks.validate_partition();
  PopulationGraph g;
  g.a = build_adjacency(x, subjects, cfg, sigma);
  g.laplacian = normalized_laplacian(g.a);
  g.x = std::move(x);
  g.subject_ids.reserve(subjects.size());
  for (const auto& s : subjects) g.subject_ids.push_back(s.id);
  g.masks = std::move(masks);
  g.labels = std::move(labels);
  return g;
}

void Masks::validate_partition() const {
  if (val.size() != train.size() || test.size() != train.size()) {
    throw std::invalid_argument("Masks: train/val/test lengths disagree");
  }
  for (std::size_t i = 0; i < train.size(); ++i) {
    const int total = (train[i] ? 1 : 0) + (val[i] ? 1 : 0) + (test[i] ? 1 : 0);
    if (total != 1) {
      throw std::invalid_argument("Masks: node " + std::to_string(i) +
                                  " belongs to " + std::to_string(total) +
                                  " splits (expected exactly 1)");
    }
  }
}

}  // namespace popgnn::popgraph
