#pragma once

// Deterministic random number utilities. All distribution transforms are
// implemented here rather than via <random> distributions, so that a seed
// produces the same stream on every platform and standard library.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace fkm::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a base seed and stream indices.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
  h = splitmix64(h ^ (b + 0xbf58476d1ce4e5b9ULL));
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unbiased integer in [lo, hi] via rejection.
  std::uint64_t uniform_index(std::uint64_t bound) {
    // bound > 0; result in [0, bound)
    const std::uint64_t limit = bound * (std::numeric_limits<std::uint64_t>::max() / bound);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % bound;
  }

  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Box-Muller; consumes two uniforms per variate.
  double normal(double mean = 0.0, double sd = 1.0) {
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return mean + sd * r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Inverse CDF; rate > 0.
  double exponential(double rate = 1.0) { return -std::log1p(-uniform01()) / rate; }

  // Binomial(trials, 1/2) by counting fair coin flips.
  int binomial_half(int trials) {
    int count = 0;
    int left = trials;
    while (left > 0) {
      const int take = left < 64 ? left : 64;
      std::uint64_t bits = next_u64();
      if (take < 64) bits &= (1ULL << take) - 1;
      count += static_cast<int>(__builtin_popcountll(bits));
      left -= take;
    }
    return count;
  }

  // Fisher-Yates; pinned here because std::shuffle is implementation-defined.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = uniform_index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fkm::rng
