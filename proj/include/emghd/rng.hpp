#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace emghd {

// All randomness flows through mt19937_64 whose output sequence is fixed by
// the standard, plus the hand-rolled draws below. std::*_distribution is
// implementation-defined, so it is avoided everywhere reproducibility matters.
using Rng = std::mt19937_64;

namespace rng_detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace rng_detail

// Derives an independent stream seed from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t state = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  std::uint64_t a = rng_detail::splitmix64(state);
  std::uint64_t b = rng_detail::splitmix64(state);
  return a ^ (b << 1);
}

// Uniform integer in [0, n) by rejection sampling (no modulo bias).
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53-bit resolution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Standard normal deviates via Box-Muller, caching the second value.
class NormalSampler {
 public:
  explicit NormalSampler(Rng& rng) : rng_(&rng) {}

  double operator()() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1;
    do {
      u1 = uniform01(*rng_);
    } while (u1 <= 0.0);
    const double u2 = uniform01(*rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  Rng* rng_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace emghd
