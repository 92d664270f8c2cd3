#include "popgnn/brainnet.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace popgnn::brainnet {

namespace {

NcReference build_reference_from_rows(const RoiFeatureTable& table,
                                      std::vector<std::size_t> rows,
                                      std::vector<std::string> ids) {
  const std::size_t n = rows.size();
  const std::size_t p = table.n_rois();
  if (n < 2) {
    throw std::invalid_argument("build_nc_reference: need >= 2 train-split NC subjects, got " +
                                std::to_string(n));
  }

  for (std::size_t r : rows) {
    for (std::size_t j = 0; j < p; ++j) {
      if (!std::isfinite(table.values(r, j))) {
        throw std::runtime_error("build_nc_reference: non-finite value for subject '" +
                                 table.ids[r] + "' at roi_" + std::to_string(j + 1));
      }
    }
  }

  Matrix nc(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) nc(i, j) = table.values(rows[i], j);
  }

  NcReference ref;
  ref.mean.resize(p);
  ref.stddev.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += nc(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = nc(i, j) - mean;
      ss += d * d;
    }
    ref.mean[j] = mean;
    ref.stddev[j] = std::sqrt(ss / static_cast<double>(n - 1));
  }
  ref.corr = pearson_correlation_matrix(nc);
  ref.source_ids = std::move(ids);
  return ref;
}

}  // namespace

NcReference build_nc_reference(const RoiFeatureTable& table,
                               const std::vector<SubjectRecord>& subjects) {
  std::vector<std::size_t> rows;
  std::vector<std::string> ids;
  for (const auto& s : subjects) {
    if (s.split != Split::train || s.label != Label::NC) continue;
    const auto r = table.row_index(s.id);
    if (!r) {
      throw std::runtime_error("build_nc_reference: subject '" + s.id +
                               "' missing from the feature table");
    }
    rows.push_back(*r);
    ids.push_back(s.id);
  }
  return build_reference_from_rows(table, std::move(rows), std::move(ids));
}

NcReference build_nc_reference_from_ids(const RoiFeatureTable& table,
                                        const std::vector<SubjectRecord>& subjects,
                                        const std::vector<std::string>& ids) {
  std::vector<std::size_t> rows;
  for (const auto& id : ids) {
    const SubjectRecord* s = nullptr;
    for (const auto& rec : subjects) {
      if (rec.id == id) {
        s = &rec;
        break;
      }
    }
    if (s == nullptr) {
      throw std::runtime_error("build_nc_reference: unknown subject id '" + id + "'");
    }
    if (s->label != Label::NC || s->split != Split::train) {
      throw std::runtime_error("build_nc_reference: subject '" + id +
                               "' is not a train-split NC subject (label " +
                               to_string(s->label) + ", split " + to_string(s->split) +
                               "); reference donors must come from the training split");
    }
    const auto r = table.row_index(id);
    if (!r) {
      throw std::runtime_error("build_nc_reference: subject '" + id +
                               "' missing from the feature table");
    }
    rows.push_back(*r);
  }
  return build_reference_from_rows(table, std::move(rows), ids);
}

Matrix effect_size_matrix(const Vector& f, const NcReference& ref, double eps) {
  const std::size_t p = ref.n_rois();
  if (f.size() != p) {
    throw std::invalid_argument("effect_size_matrix: feature length " +
                                std::to_string(f.size()) + " vs " + std::to_string(p) +
                                " reference ROIs");
  }
  ensure_finite(f, "effect_size_matrix");

  Vector dev(p);
  for (std::size_t i = 0; i < p; ++i) dev[i] = f[i] - ref.mean[i];

  Matrix e(p, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double sp =
          std::sqrt((ref.stddev[i] * ref.stddev[i] + ref.stddev[j] * ref.stddev[j]) / 2.0);
      const double v = std::abs(dev[i] - dev[j]) / std::max(sp, eps);
      e(i, j) = v;
      e(j, i) = v;
    }
  }
  return e;
}

Matrix fisher_weighting(const Matrix& e) {
  Matrix w(e.rows(), e.cols());
  for (std::size_t i = 0; i < e.rows(); ++i) {
    for (std::size_t j = 0; j < e.cols(); ++j) {
      const double ev = e(i, j);
      if (ev < 0.0 || !std::isfinite(ev)) {
        throw std::invalid_argument("fisher_weighting: entries must be finite and >= 0");
      }
      double r;
      if (ev > 350.0) {
        r = 1.0;  // exp(2E) overflows; the ratio saturates at 1
      } else {
        r = std::expm1(2.0 * ev) / (std::exp(2.0 * ev) + 1.0);
      }
      w(i, j) = 1.0 - r;
    }
  }
  return w;
}

BrainNetwork build_brain_network(const Vector& f, const NcReference& ref, double eps,
                                 std::string subject_id) {
  const Matrix e = effect_size_matrix(f, ref, eps);
  const Matrix w = fisher_weighting(e);
  BrainNetwork bn;
  bn.b = hadamard(w, ref.corr);
  bn.subject_id = std::move(subject_id);
  return bn;
}

NodeFeatures flatten_upper(const BrainNetwork& bn) {
  if (!bn.b.is_square()) {
    throw std::invalid_argument("flatten_upper: brain network must be square, got " +
                                bn.b.shape_str());
  }
  const std::size_t p = bn.b.rows();
  NodeFeatures nf;
  nf.subject_id = bn.subject_id;
  nf.values.reserve(p * (p + 1) / 2);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) nf.values.push_back(bn.b(i, j));
  }
  return nf;
}

Matrix unflatten_upper(const Vector& values, std::size_t p) {
  if (values.size() != p * (p + 1) / 2) {
    throw std::invalid_argument("unflatten_upper: expected length " +
                                std::to_string(p * (p + 1) / 2) + ", got " +
                                std::to_string(values.size()));
  }
  Matrix b(p, p);
  std::size_t k = 0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      b(i, j) = values[k];
      b(j, i) = values[k];
      ++k;
    }
  }
  return b;
}

std::string to_string(SmriChannel c) {
  switch (c) {
    case SmriChannel::GM: return "gm";
    case SmriChannel::WM: return "wm";
    case SmriChannel::GM_PLUS_WM: return "gmwm";
  }
  return "gm";
}

SmriChannel smri_channel_from_string(const std::string& s) {
  if (s == "gm") return SmriChannel::GM;
  if (s == "wm") return SmriChannel::WM;
  if (s == "gmwm" || s == "gm+wm") return SmriChannel::GM_PLUS_WM;
  throw std::invalid_argument("unknown sMRI channel '" + s + "' (expected gm|wm|gmwm)");
}

RoiFeatureTable build_smri_channel(const RoiFeatureTable& gm, const RoiFeatureTable& wm,
                                   SmriChannel channel) {
  if (channel == SmriChannel::GM) return gm;
  if (channel == SmriChannel::WM) return wm;
  if (gm.ids.size() != wm.ids.size() || gm.n_rois() != wm.n_rois()) {
    throw std::invalid_argument("build_smri_channel: GM and WM tables disagree in shape");
  }
  for (std::size_t i = 0; i < gm.ids.size(); ++i) {
    if (gm.ids[i] != wm.ids[i]) {
      throw std::runtime_error("build_smri_channel: misaligned subject ids at row " +
                               std::to_string(i) + " ('" + gm.ids[i] + "' vs '" + wm.ids[i] +
                               "')");
    }
  }
  RoiFeatureTable out;
  out.ids = gm.ids;
  out.values = add(gm.values, wm.values);
  return out;
}

Matrix node_feature_matrix(const RoiFeatureTable& table, const std::vector<std::size_t>& rows,
                           const NcReference& ref, double eps) {
  const std::size_t p = ref.n_rois();
  const std::size_t f = p * (p + 1) / 2;
  Matrix x(rows.size(), f);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const BrainNetwork bn =
        build_brain_network(table.row_vector(rows[i]), ref, eps, table.ids[rows[i]]);
    const NodeFeatures nf = flatten_upper(bn);
    for (std::size_t j = 0; j < f; ++j) x(i, j) = nf.values[j];
  }
  return x;
}

}  // namespace popgnn::brainnet
