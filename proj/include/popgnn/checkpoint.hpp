#pragma once

#include <cstdint>
#include <string>

#include "popgnn/model.hpp"

namespace popgnn {

/// Versioned textual checkpoint. Weights are serialized as C99 hex floats,
/// so save -> load -> forward is bit-identical. A FNV-1a checksum over the
/// payload guards against truncation or edits. The meta block carries the
/// pipeline settings needed to rebuild the graph for evaluation.
struct Checkpoint {
  static constexpr int version = 1;

  model::DualBranchModel model;
  std::uint64_t seed = 0;
  std::string task;          // adnc | smcipmci
  std::string mode;          // single-smri | single-pet | dual | ...
  std::string pheno;         // similarity | gender+mmse | ...
  std::string smri_channel;  // gm | wm | gmwm
  std::string sigma_rule;    // "data" or a fixed value
  std::string split_source;  // "bundle" or "derived:<repeat>"
};

std::string to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace popgnn
