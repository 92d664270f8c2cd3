#include "popgnn/checkpoint.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "popgnn/dataio.hpp"
#include "popgnn/hash.hpp"

namespace popgnn {

namespace {

std::string hex_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_hex_double(const std::string& tok) {
  double v = 0.0;
  if (std::sscanf(tok.c_str(), "%la", &v) != 1) {
    throw std::runtime_error("checkpoint: bad float token '" + tok + "'");
  }
  return v;
}

void emit_matrix(std::string& out, const Matrix& m) {
  out += "mat " + std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      out += j == 0 ? "" : " ";
      out += hex_double(m(i, j));
    }
    out += "\n";
  }
}

void emit_vector(std::string& out, const Vector& v) {
  out += "vec " + std::to_string(v.size());
  for (double x : v) out += " " + hex_double(x);
  out += "\n";
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : ss_(text) {}

  std::string next() {
    std::string line;
    while (std::getline(ss_, line)) {
      if (!line.empty()) return line;
    }
    throw std::runtime_error("checkpoint: unexpected end of file");
  }

 private:
  std::stringstream ss_;
};

std::vector<std::string> tokens(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

Matrix parse_matrix(LineReader& in) {
  const auto head = tokens(in.next());
  if (head.size() != 3 || head[0] != "mat") throw std::runtime_error("checkpoint: expected mat");
  const auto rows = static_cast<std::size_t>(std::stoull(head[1]));
  const auto cols = static_cast<std::size_t>(std::stoull(head[2]));
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = tokens(in.next());
    if (row.size() != cols) throw std::runtime_error("checkpoint: short matrix row");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = parse_hex_double(row[j]);
  }
  return m;
}

Vector parse_vector(const std::string& line) {
  const auto tok = tokens(line);
  if (tok.size() < 2 || tok[0] != "vec") throw std::runtime_error("checkpoint: expected vec");
  const auto n = static_cast<std::size_t>(std::stoull(tok[1]));
  if (tok.size() != n + 2) throw std::runtime_error("checkpoint: short vector");
  Vector v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = parse_hex_double(tok[i + 2]);
  return v;
}

std::string meta_value(const std::string& line, const std::string& key) {
  const std::string want = key + "=";
  for (const auto& tok : tokens(line)) {
    if (tok.rfind(want, 0) == 0) return tok.substr(want.size());
  }
  throw std::runtime_error("checkpoint: missing meta key '" + key + "'");
}

}  // namespace

std::string to_text(const Checkpoint& ckpt) {
  ckpt.model.validate();
  std::string payload;
  payload += "meta seed=" + std::to_string(ckpt.seed) + " task=" + ckpt.task +
             " mode=" + ckpt.mode + " pheno=" + ckpt.pheno +
             " smri_channel=" + ckpt.smri_channel + " sigma=" + ckpt.sigma_rule +
             " split=" + ckpt.split_source + "\n";
  payload += "branches " + std::to_string(ckpt.model.branches.size()) + "\n";
  for (const auto& b : ckpt.model.branches) {
    payload += "branch arch=" + model::to_string(b.arch) + " k_order=" +
               std::to_string(b.k_order) + " hidden=" + std::to_string(b.hidden) +
               " dropout=" + hex_double(b.dropout_rate) + "\n";
    for (const auto& layer : b.layers) {
      payload += "layer blocks=" + std::to_string(layer.theta.size()) + " bias=" +
                 (layer.bias.empty() ? "0" : "1") + "\n";
      for (const auto& t : layer.theta) emit_matrix(payload, t);
      if (!layer.bias.empty()) emit_vector(payload, layer.bias);
    }
  }

  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(fnv1a(payload)));
  return "popgnn-checkpoint v" + std::to_string(Checkpoint::version) + "\n" + payload +
         "checksum " + checksum + "\n";
}

Checkpoint checkpoint_from_text(const std::string& text) {
  const std::string header = "popgnn-checkpoint v" + std::to_string(Checkpoint::version) + "\n";
  if (text.rfind(header, 0) != 0) {
    throw std::runtime_error("checkpoint: bad header or unsupported version");
  }
  const std::size_t checksum_pos = text.rfind("checksum ");
  if (checksum_pos == std::string::npos) throw std::runtime_error("checkpoint: no checksum");
  const std::string payload = text.substr(header.size(), checksum_pos - header.size());
  const std::string stated = text.substr(checksum_pos + 9, 16);
  char computed[32];
  std::snprintf(computed, sizeof(computed), "%016llx",
                static_cast<unsigned long long>(fnv1a(payload)));
  if (stated != computed) {
    throw std::runtime_error("checkpoint: checksum mismatch (stated " + stated + ", computed " +
                             computed + ")");
  }

  LineReader in(payload);
  Checkpoint ckpt;
  const std::string meta = in.next();
  ckpt.seed = std::stoull(meta_value(meta, "seed"));
  ckpt.task = meta_value(meta, "task");
  ckpt.mode = meta_value(meta, "mode");
  ckpt.pheno = meta_value(meta, "pheno");
  ckpt.smri_channel = meta_value(meta, "smri_channel");
  ckpt.sigma_rule = meta_value(meta, "sigma");
  ckpt.split_source = meta_value(meta, "split");

  const auto branches_line = tokens(in.next());
  if (branches_line.size() != 2 || branches_line[0] != "branches") {
    throw std::runtime_error("checkpoint: expected branches count");
  }
  const auto n_branches = static_cast<std::size_t>(std::stoull(branches_line[1]));
  for (std::size_t b = 0; b < n_branches; ++b) {
    const std::string bline = in.next();
    model::BranchModel branch;
    branch.arch = model::arch_from_string(meta_value(bline, "arch"));
    branch.k_order = std::stoi(meta_value(bline, "k_order"));
    branch.hidden = std::stoi(meta_value(bline, "hidden"));
    branch.dropout_rate = parse_hex_double(meta_value(bline, "dropout"));
    for (auto& layer : branch.layers) {
      const std::string lline = in.next();
      const auto blocks = static_cast<std::size_t>(std::stoull(meta_value(lline, "blocks")));
      const bool has_bias = meta_value(lline, "bias") == "1";
      for (std::size_t k = 0; k < blocks; ++k) layer.theta.push_back(parse_matrix(in));
      if (has_bias) layer.bias = parse_vector(in.next());
    }
    ckpt.model.branches.push_back(std::move(branch));
  }
  ckpt.model.validate();
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  dataio::write_file_atomic(path, to_text(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) {
  return checkpoint_from_text(dataio::read_file(path));
}

}  // namespace popgnn
