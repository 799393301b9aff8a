#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace coord {

// splitmix64; used for seed derivation and counter-based draws.
inline uint64_t mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
  return mix64(master ^ mix64(stream + 1));
}

// Deterministic wrapper around std::mt19937_64. Distribution mappings are
// implemented here because the std distributions are not pinned across
// standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Exponential with the given mean.
  double exponential(double mean) {
    return -mean * std::log1p(-uniform());
  }

  // Marsaglia polar method.
  double gaussian(double mean, double stddev) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + stddev * spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return mean + stddev * u * m;
  }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n) {
    // rejection sampling to avoid modulo bias
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Order-independent uniform draw keyed by (seed, a, b); every call with the
// same key yields the same value in [0, 1).
inline double keyed_uniform(uint64_t seed, uint64_t a, uint64_t b) {
  const uint64_t h = mix64(seed ^ mix64(a ^ 0x5851f42d4c957f2dULL) ^ mix64(b + 0x14057b7ef767814fULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace coord
