#pragma once

// Seeded sampling helpers with a fixed, library-independent mapping from the
// engine output to doubles, so seeded runs reproduce across standard libraries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace tns {

using Rng = std::mt19937_64;

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Standard normal by Box-Muller (one value per call).
inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Uniform sample from the l^2 ball of the given radius in dimension n;
/// nonnegative restricts to the orthant slice.
inline std::vector<double> ball_sample(Rng& rng, std::size_t n, double radius, bool nonnegative) {
  std::vector<double> x(n);
  double s = 0.0;
  for (auto& v : x) {
    v = standard_normal(rng);
    if (nonnegative) v = std::abs(v);
    s += v * v;
  }
  const double r = radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(n));
  const double scale = s > 0.0 ? r / std::sqrt(s) : 0.0;
  for (auto& v : x) v *= scale;
  return x;
}

}  // namespace tns
