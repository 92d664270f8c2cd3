#include "popgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "popgnn/dataio.hpp"
#include "popgnn/rng.hpp"

namespace popgnn::dataio {

namespace {

struct MmseDist {
  double mean;
  double sd;
};

MmseDist mmse_dist(Label l) {
  switch (l) {
    case Label::AD: return {23.21, 2.13};
    case Label::NC: return {29.02, 1.21};
    case Label::SMCI: return {28.01, 0.71};
    case Label::PMCI: return {27.15, 1.81};
  }
  return {29.02, 1.21};
}

int clamp_round_mmse(double v) {
  const double c = std::min(30.0, std::max(10.0, v));
  return static_cast<int>(std::lround(c));
}

std::string make_id(const char* prefix, int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%s%05d", prefix, i);
  return buf;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_per_class < 2) throw std::invalid_argument("SynthConfig: n_per_class must be >= 2");
  if (p_rois < 2) throw std::invalid_argument("SynthConfig: p_rois must be >= 2");
  if (!(affected_fraction > 0.0 && affected_fraction <= 1.0)) {
    throw std::invalid_argument("SynthConfig: affected_fraction must lie in (0, 1]");
  }
  if (effect_size < 0.0) throw std::invalid_argument("SynthConfig: effect_size must be >= 0");
}

CohortBundle generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  const auto [control, patient] = task_labels(cfg.task);
  const std::size_t p = static_cast<std::size_t>(cfg.p_rois);
  const std::size_t n_affected =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cfg.affected_fraction *
                                                                    static_cast<double>(p))));

  // Interleave the classes so the sorted-id proportional split stays balanced.
  std::vector<Label> labels;
  std::vector<std::string> ids;
  for (int i = 0; i < 2 * cfg.n_per_class; ++i) {
    labels.push_back(i % 2 == 0 ? patient : control);
    ids.push_back(make_id("S", i));
  }
  // Reference donors for the MCI task; id prefix R keeps them distinct.
  const bool extra_nc = cfg.task == Task::smci_pmci;
  if (extra_nc) {
    for (int i = 0; i < cfg.n_per_class; ++i) {
      labels.push_back(Label::NC);
      ids.push_back(make_id("R", i));
    }
  }
  const std::size_t n_total = ids.size();

  Rng pheno_rng = Rng::stream(cfg.seed, "pheno");
  CohortBundle bundle;
  bundle.subjects.reserve(n_total);
  for (std::size_t i = 0; i < n_total; ++i) {
    SubjectRecord s;
    s.id = ids[i];
    s.label = labels[i];
    s.gender = pheno_rng.bernoulli(0.5) ? Gender::M : Gender::F;
    s.age = std::min(95.0, std::max(55.0, pheno_rng.normal(74.0, 7.0)));
    const bool is_patient = labels[i] == patient;
    s.apoe4 = static_cast<int>(is_patient ? pheno_rng.weighted({0.4, 0.4, 0.2})
                                          : pheno_rng.weighted({0.7, 0.25, 0.05}));
    const MmseDist d = mmse_dist(labels[i]);
    s.mmse = clamp_round_mmse(pheno_rng.normal(d.mean, d.sd));
    bundle.subjects.push_back(std::move(s));
  }

  // Splits: 70/15/15 over the task subjects by sorted id; donors always train.
  {
    std::vector<SubjectRecord> task_subjects;
    for (auto& s : bundle.subjects) {
      if (s.id[0] == 'S') task_subjects.push_back(s);
    }
    assign_splits_by_sorted_id(task_subjects);
    std::size_t pos = 0;
    for (auto& s : bundle.subjects) {
      if (s.id[0] == 'S') s.split = task_subjects[pos++].split;
      else s.split = Split::train;
    }
  }

  struct Channel {
    Modality modality;
    const char* tag;
    double mean;
    double sd;
  };
  const Channel channels[3] = {
      {Modality::pet_suvr, "pet", 1.0, 0.1},
      {Modality::smri_gm, "gm", 5.0, 0.5},
      {Modality::smri_wm, "wm", 4.0, 0.4},
  };

  for (const Channel& ch : channels) {
    Rng rng = Rng::stream(cfg.seed, ch.tag);
    RoiFeatureTable table;
    table.ids = ids;
    table.values = Matrix(n_total, p);
    for (std::size_t i = 0; i < n_total; ++i) {
      const bool shifted = labels[i] == patient;
      for (std::size_t j = 0; j < p; ++j) {
        double mean = ch.mean;
        if (shifted && j < n_affected) mean -= cfg.effect_size * ch.sd;
        table.values(i, j) = rng.normal(mean, ch.sd);
      }
    }
    bundle.roi_tables[ch.modality] = std::move(table);
  }

  char prov[192];
  std::snprintf(prov, sizeof(prov),
                "synthetic(task=%s,n_per_class=%d,p_rois=%d,effect_size=%g,"
                "affected_fraction=%g,seed=%llu)",
                to_string(cfg.task).c_str(), cfg.n_per_class, cfg.p_rois, cfg.effect_size,
                cfg.affected_fraction, static_cast<unsigned long long>(cfg.seed));
  bundle.provenance = prov;
  validate(bundle);
  return bundle;
}

}  // namespace popgnn::dataio
