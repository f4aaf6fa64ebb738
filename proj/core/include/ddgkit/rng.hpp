#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ddgkit {

// Deterministic random source. The transforms on top of the mt19937_64
// stream (uniform doubles, Box-Muller normals, Fisher-Yates shuffles,
// rejection-sampled integers) are spelled out here instead of using
// std::*_distribution, whose output is implementation-defined. A fixed
// seed therefore yields the same draw sequence on any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Standard normal via Box-Muller; draws two uniforms per pair of outputs.
  double normal();

  // Uniform integer on [lo, hi], inclusive. Rejection sampling, no modulo bias.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (std::size_t i = v.size() - 1; i > 0; --i) {
      const auto j = static_cast<std::size_t>(
          uniform_int(0, static_cast<std::int64_t>(i)));
      std::swap(v[i], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace ddgkit
