#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "blockadmm/types.hpp"

namespace blockadmm {

/// Deterministic random generator: xoshiro256++ (Blackman & Vigna, 2019),
/// seeded through splitmix64. The draw sequence depends only on the seed,
/// not on platform or standard-library internals, so runs replay exactly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      // splitmix64
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result =
        rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1), 53-bit resolution.
  Scalar uniform() {
    return static_cast<Scalar>(next_u64() >> 11) * 0x1.0p-53;
  }

  Scalar uniform(Scalar lo, Scalar hi) {
    if (!(lo < hi)) {
      throw ConfigError("uniform: invalid range [" + std::to_string(lo) +
                        ", " + std::to_string(hi) + ")");
    }
    return lo + (hi - lo) * uniform();
  }

  /// N(0, sigma^2) via the Box-Muller transform; consumes two draws.
  Scalar normal(Scalar sigma = 1.0) {
    if (!(sigma > 0)) {
      throw ConfigError("normal: sigma must be positive");
    }
    // u1 in (0, 1] so the log is finite
    const Scalar u1 =
        (static_cast<Scalar>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const Scalar u2 = uniform();
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi_v<Scalar> * u2);
  }

  /// Uniform index in [0, n).
  Index index(Index n) { return static_cast<Index>(next_u64() % static_cast<std::uint64_t>(n)); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (Index i = static_cast<Index>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[index(i + 1)]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_{};
};

inline Matrix init_uniform(Index rows, Index cols, Scalar lo, Scalar hi,
                           Rng& rng) {
  if (!(lo < hi)) {
    throw ConfigError("init_uniform: invalid range");
  }
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = rng.uniform(lo, hi);
    }
  }
  return out;
}

inline Matrix init_normal(Index rows, Index cols, Scalar sigma, Rng& rng) {
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = rng.normal(sigma);
    }
  }
  return out;
}

}  // namespace blockadmm
