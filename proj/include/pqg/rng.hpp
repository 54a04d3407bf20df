#ifndef PQG_RNG_HPP
#define PQG_RNG_HPP

// Counter-based random numbers: every draw is a pure function of (seed, ctr),
// so initial conditions are reproducible bit-for-bit across machines and
// independent of evaluation order. The mixer is the splitmix64 finalizer.

#include <cmath>
#include <cstdint>
#include <utility>

namespace pqg::rng {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline std::uint64_t hash(std::uint64_t seed, std::uint64_t ctr) {
  return mix64(seed + (ctr + 1) * 0x9E3779B97F4A7C15ull);
}

// Uniform on [0,1) with 53 random bits.
inline double uniform01(std::uint64_t seed, std::uint64_t ctr) {
  return double(hash(seed, ctr) >> 11) * 0x1.0p-53;
}

// Independent standard normals via Box-Muller; consumes counters ctr, ctr+1.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint64_t ctr) {
  const double u1 = uniform01(seed, 2 * ctr);      // in [0,1)
  const double u2 = uniform01(seed, 2 * ctr + 1);
  const double r = std::sqrt(-2.0 * std::log1p(u1 - 1.0 + 0x1.0p-53));  // log of (0,1]
  const double a = 2.0 * M_PI * u2;
  return {r * std::cos(a), r * std::sin(a)};
}

}  // namespace pqg::rng

#endif  // PQG_RNG_HPP
