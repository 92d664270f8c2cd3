#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "popgnn/matrix.hpp"

namespace popgnn {

enum class Label { AD, NC, SMCI, PMCI };
enum class Gender { M, F };
enum class Split { train, val, test };
enum class Modality { pet_suvr, smri_gm, smri_wm };

/// The two binary classification tasks; the patient class (AD, pMCI) is the
/// positive class throughout.
enum class Task { ad_nc, smci_pmci };

std::string to_string(Label l);
std::string to_string(Gender g);
std::string to_string(Split s);
std::string to_string(Modality m);
std::string to_string(Task t);
Label label_from_string(const std::string& s);
Gender gender_from_string(const std::string& s);
Split split_from_string(const std::string& s);
Task task_from_string(const std::string& s);

/// (control, patient) label pair of a task; control maps to class index 0,
/// patient to class index 1.
std::pair<Label, Label> task_labels(Task t);

/// One subject: identity, phenotypes, diagnostic label, split assignment.
struct SubjectRecord {
  std::string id;
  Label label = Label::NC;
  Gender gender = Gender::M;
  double age = 0.0;
  int apoe4 = 0;  // allele count in {0, 1, 2}
  int mmse = 30;  // score in [0, 30]
  Split split = Split::train;
};

void validate(const SubjectRecord& s);

/// N x P table of per-subject ROI scalars for one modality/channel.
/// Row order is the subject order; ids[i] names row i.
struct RoiFeatureTable {
  std::vector<std::string> ids;
  Matrix values;

  std::size_t n_subjects() const { return ids.size(); }
  std::size_t n_rois() const { return values.cols(); }
  std::optional<std::size_t> row_index(const std::string& id) const;
  Vector row_vector(std::size_t i) const;
};

struct CohortBundle {
  std::vector<SubjectRecord> subjects;
  std::map<Modality, RoiFeatureTable> roi_tables;
  std::string provenance;

  const SubjectRecord* find(const std::string& id) const;
};

/// Referential integrity: every feature-table row maps to exactly one
/// subject, one row per subject per modality, consistent P per modality.
void validate(const CohortBundle& bundle);

}  // namespace popgnn
