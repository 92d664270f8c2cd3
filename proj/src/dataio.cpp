#include "popgnn/dataio.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace popgnn {

std::string to_string(Label l) {
  switch (l) {
    case Label::AD: return "AD";
    case Label::NC: return "NC";
    case Label::SMCI: return "sMCI";
    case Label::PMCI: return "pMCI";
  }
  return "NC";
}

std::string to_string(Gender g) { return g == Gender::M ? "M" : "F"; }

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::string to_string(Modality m) {
  switch (m) {
    case Modality::pet_suvr: return "pet_suvr";
    case Modality::smri_gm: return "smri_gm";
    case Modality::smri_wm: return "smri_wm";
  }
  return "pet_suvr";
}

std::string to_string(Task t) { return t == Task::ad_nc ? "adnc" : "smcipmci"; }

Task task_from_string(const std::string& s) {
  if (s == "adnc") return Task::ad_nc;
  if (s == "smcipmci") return Task::smci_pmci;
  throw std::runtime_error("unknown task '" + s + "' (expected adnc|smcipmci)");
}

std::pair<Label, Label> task_labels(Task t) {
  return t == Task::ad_nc ? std::pair{Label::NC, Label::AD}
                          : std::pair{Label::SMCI, Label::PMCI};
}

Label label_from_string(const std::string& s) {
  if (s == "AD") return Label::AD;
  if (s == "NC") return Label::NC;
  if (s == "sMCI") return Label::SMCI;
  if (s == "pMCI") return Label::PMCI;
  throw std::runtime_error("unknown label '" + s + "' (expected AD|NC|sMCI|pMCI)");
}

Gender gender_from_string(const std::string& s) {
  if (s == "M") return Gender::M;
  if (s == "F") return Gender::F;
  throw std::runtime_error("unknown gender '" + s + "' (expected M|F)");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  throw std::runtime_error("unknown split '" + s + "' (expected train|val|test)");
}

void validate(const SubjectRecord& s) {
  if (s.id.empty()) throw std::runtime_error("subject with empty id");
  if (s.mmse < 0 || s.mmse > 30) {
    throw std::runtime_error("subject '" + s.id + "': MMSE " + std::to_string(s.mmse) +
                             " outside [0, 30]");
  }
  if (!(s.age > 0.0)) {
    throw std::runtime_error("subject '" + s.id + "': age must be positive");
  }
  if (s.apoe4 < 0 || s.apoe4 > 2) {
    throw std::runtime_error("subject '" + s.id + "': apoe4 " + std::to_string(s.apoe4) +
                             " outside {0,1,2}");
  }
}

std::optional<std::size_t> RoiFeatureTable::row_index(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return i;
  }
  return std::nullopt;
}

Vector RoiFeatureTable::row_vector(std::size_t i) const {
  return Vector(values.row(i), values.row(i) + values.cols());
}

const SubjectRecord* CohortBundle::find(const std::string& id) const {
  for (const auto& s : subjects) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

void validate(const CohortBundle& bundle) {
  std::set<std::string> ids;
  for (const auto& s : bundle.subjects) {
    validate(s);
    if (!ids.insert(s.id).second) {
      throw std::runtime_error("duplicate subject id '" + s.id + "'");
    }
  }
  for (const auto& [mod, table] : bundle.roi_tables) {
    if (table.ids.size() != table.values.rows()) {
      throw std::runtime_error(to_string(mod) + ": id list does not match row count");
    }
    std::set<std::string> seen;
    for (const auto& id : table.ids) {
      if (ids.find(id) == ids.end()) {
        throw std::runtime_error(to_string(mod) + ": feature row for unknown subject id '" +
                                 id + "'");
      }
      if (!seen.insert(id).second) {
        throw std::runtime_error(to_string(mod) + ": duplicate feature row for subject id '" +
                                 id + "'");
      }
    }
    for (const auto& s : bundle.subjects) {
      if (seen.find(s.id) == seen.end()) {
        throw std::runtime_error(to_string(mod) + ": no feature row for subject id '" + s.id +
                                 "'");
      }
    }
    if (!table.values.is_finite()) {
      throw std::runtime_error(to_string(mod) + ": table holds non-finite values");
    }
  }
}

}  // namespace popgnn

namespace popgnn::dataio {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no,
                             const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + msg);
}

double parse_double(const std::string& tok, const std::string& path, std::size_t line_no,
                    const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) parse_fail(path, line_no, "non-numeric " + what + " '" + tok + "'");
    return v;
  } catch (const std::exception&) {
    parse_fail(path, line_no, "non-numeric " + what + " '" + tok + "'");
  }
}

long parse_int(const std::string& tok, const std::string& path, std::size_t line_no,
               const std::string& what) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) parse_fail(path, line_no, "non-numeric " + what + " '" + tok + "'");
    return v;
  } catch (const std::exception&) {
    parse_fail(path, line_no, "non-numeric " + what + " '" + tok + "'");
  }
}

std::vector<SubjectRecord> load_subjects(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open subjects file '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++line_no;
  const auto header = split_line(line);
  const bool has_split = header.size() == 7 && header[6] == "split";
  const std::vector<std::string> expected = {"id", "label", "gender", "age", "apoe4", "mmse"};
  if (header.size() < 6 || header.size() > 7) {
    parse_fail(path, line_no, "expected header id,label,gender,age,apoe4,mmse[,split]");
  }
  for (std::size_t i = 0; i < 6; ++i) {
    if (header[i] != expected[i]) {
      parse_fail(path, line_no, "unexpected header column '" + header[i] + "'");
    }
  }

  std::vector<SubjectRecord> subjects;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split_line(line);
    if (tok.size() != header.size()) {
      parse_fail(path, line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(tok.size()));
    }
    SubjectRecord s;
    s.id = tok[0];
    try {
      s.label = label_from_string(tok[1]);
      s.gender = gender_from_string(tok[2]);
    } catch (const std::exception& e) {
      parse_fail(path, line_no, e.what());
    }
    s.age = parse_double(tok[3], path, line_no, "age");
    s.apoe4 = static_cast<int>(parse_int(tok[4], path, line_no, "apoe4"));
    s.mmse = static_cast<int>(parse_int(tok[5], path, line_no, "mmse"));
    if (has_split) {
      try {
        s.split = split_from_string(tok[6]);
      } catch (const std::exception& e) {
        parse_fail(path, line_no, e.what());
      }
    }
    try {
      validate(s);
    } catch (const std::exception& e) {
      parse_fail(path, line_no, e.what());
    }
    subjects.push_back(std::move(s));
  }
  if (!has_split) assign_splits_by_sorted_id(subjects);
  return subjects;
}

RoiFeatureTable load_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature table '" + path + "'");
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  ++line_no;
  const auto header = split_line(line);
  if (header.size() < 2 || header[0] != "id") {
    parse_fail(path, line_no, "expected header id,roi_1,...,roi_P");
  }
  const std::size_t p = header.size() - 1;

  std::vector<std::string> ids;
  std::vector<double> data;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tok = split_line(line);
    if (tok.size() != p + 1) {
      parse_fail(path, line_no, "expected " + std::to_string(p + 1) + " fields, got " +
                                    std::to_string(tok.size()));
    }
    ids.push_back(tok[0]);
    for (std::size_t j = 1; j < tok.size(); ++j) {
      data.push_back(parse_double(tok[j], path, line_no, "roi_" + std::to_string(j)));
    }
  }

  RoiFeatureTable table;
  table.ids = std::move(ids);
  table.values = Matrix(table.ids.size(), p);
  std::copy(data.begin(), data.end(), table.values.data());
  return table;
}

}  // namespace

void assign_splits_by_sorted_id(std::vector<SubjectRecord>& subjects) {
  std::vector<std::size_t> order(subjects.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&subjects](std::size_t a, std::size_t b) {
    return subjects[a].id < subjects[b].id;
  });
  const std::size_t n = subjects.size();
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_val = n * 15 / 100;
  for (std::size_t pos = 0; pos < n; ++pos) {
    SubjectRecord& s = subjects[order[pos]];
    if (pos < n_train) s.split = Split::train;
    else if (pos < n_train + n_val) s.split = Split::val;
    else s.split = Split::test;
  }
}

CohortBundle load_cohort(const std::string& subjects_path,
                         const std::map<Modality, std::string>& feature_paths) {
  CohortBundle bundle;
  bundle.subjects = load_subjects(subjects_path);
  for (const auto& [mod, path] : feature_paths) {
    bundle.roi_tables[mod] = load_features(path);
  }
  bundle.provenance = "files(" + subjects_path + ")";
  validate(bundle);
  return bundle;
}

std::string modality_filename(Modality m) { return to_string(m) + ".csv"; }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file '" + tmp + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename to '" + path + "' failed: " + ec.message());
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string matrix_to_csv(const Matrix& m) {
  std::string out;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void save_cohort(const CohortBundle& bundle, const std::string& dir) {
  std::filesystem::create_directories(dir);

  std::string subjects = "id,label,gender,age,apoe4,mmse,split\n";
  for (const auto& s : bundle.subjects) {
    subjects += s.id + "," + to_string(s.label) + "," + to_string(s.gender) + "," +
                format_double(s.age) + "," + std::to_string(s.apoe4) + "," +
                std::to_string(s.mmse) + "," + to_string(s.split) + "\n";
  }
  write_file_atomic(dir + "/subjects.csv", subjects);

  for (const auto& [mod, table] : bundle.roi_tables) {
    std::string out = "id";
    for (std::size_t j = 1; j <= table.n_rois(); ++j) out += ",roi_" + std::to_string(j);
    out += "\n";
    for (std::size_t i = 0; i < table.ids.size(); ++i) {
      out += table.ids[i];
      for (std::size_t j = 0; j < table.n_rois(); ++j) {
        out += "," + format_double(table.values(i, j));
      }
      out += "\n";
    }
    write_file_atomic(dir + "/" + modality_filename(mod), out);
  }
}

}  // namespace popgnn::dataio
