#pragma once

#include <map>
#include <string>

#include "popgnn/cohort.hpp"

namespace popgnn::dataio {

/// Comma-delimited UTF-8 text, LF newlines, '.' decimal separator.
/// Subjects: header `id,label,gender,age,apoe4,mmse,split`; the split column
/// may be absent, in which case splits are assigned by sorted subject id
/// (first 70% train, next 15% val, remainder test).
/// Feature tables: header `id,roi_1,...,roi_P`.
CohortBundle load_cohort(const std::string& subjects_path,
                         const std::map<Modality, std::string>& feature_paths);

/// Writes subjects.csv plus one <modality>.csv per table under `dir`.
/// Full-precision floats, so save -> load round-trips field for field.
void save_cohort(const CohortBundle& bundle, const std::string& dir);

std::string modality_filename(Modality m);

/// 70/15/15 assignment over ids in sorted order.
void assign_splits_by_sorted_id(std::vector<SubjectRecord>& subjects);

std::string read_file(const std::string& path);
/// Write-temp-then-rename so concurrent readers never see partial files.
void write_file_atomic(const std::string& path, const std::string& content);

std::string matrix_to_csv(const Matrix& m);

}  // namespace popgnn::dataio
