#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace popgnn {

/// Deterministic splittable RNG. One root seed fans out into named streams
/// (stream tag hashed into the state), so every pipeline stage draws from
/// its own sequence and is reproducible in isolation. The generator is
/// splitmix64; normal deviates use an explicit Box-Muller transform so the
/// byte-for-byte sequence does not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static std::uint64_t hash_tag(std::string_view tag);
  static Rng stream(std::uint64_t root_seed, std::string_view tag, std::uint64_t index = 0);

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal
  double normal(double mean, double sd) { return mean + sd * normal(); }
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)
  bool bernoulli(double p) { return uniform() < p; }
  /// Index drawn from unnormalized weights.
  std::size_t weighted(const std::vector<double>& weights);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i + 1));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace popgnn
