#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cd {

// All stochastic code draws from std::mt19937_64. The transforms below are
// written out instead of using <random> distributions, whose output is
// implementation-defined; generated files must be byte-identical everywhere.
using Rng = std::mt19937_64;

// splitmix64 finalizer; derives independent stream seeds from (seed, stream).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Uniform in [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n) by rejection; n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r = rng();
  while (r >= limit) r = rng();
  return r % n;
}

// Box-Muller; one variate per call.
inline double normal(Rng& rng, double mean, double stddev) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) *
                    std::cos(2.0 * std::numbers::pi * u2);
}

// Poisson count by summing exponential inter-arrival times.
inline std::uint64_t poisson(Rng& rng, double lambda) {
  std::uint64_t count = 0;
  double t = 0.0;
  while (true) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    t -= std::log(u);
    if (t > lambda) return count;
    ++count;
  }
}

}  // namespace cd
