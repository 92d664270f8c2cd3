#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

#include "popgnn/matrix.hpp"

namespace popgnn {

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  return fnv1a(s.data(), s.size(), h);
}

inline std::uint64_t hash_matrix(const Matrix& m) {
  std::uint64_t h = fnv1a(&m, 0);  // seed only
  const std::size_t r = m.rows(), c = m.cols();
  h = fnv1a(&r, sizeof(r), h);
  h = fnv1a(&c, sizeof(c), h);
  return fnv1a(m.data(), m.size() * sizeof(double), h);
}

}  // namespace popgnn
