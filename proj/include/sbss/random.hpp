#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "sbss/common.hpp"

namespace sbss {

// ============================================================================
// Normal distribution helpers
// ============================================================================

/// Standard normal CDF via the complementary error function.
inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

/// Standard normal density.
inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Inverse standard normal CDF, u in (0,1).
///
/// Safeguarded Newton iteration on norm_cdf; no tabulated quantile constants.
/// Converges to full double precision for u in [1e-300, 1 - 1e-16].
inline double inv_norm_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) throw Error(detail::str("inv_norm_cdf: u=", u, " outside (0,1)"));
  double lo = -40.0, hi = 40.0;
  // Tail-accurate starting point.
  double x = (u < 0.5) ? -std::sqrt(-2.0 * std::log(u)) : std::sqrt(-2.0 * std::log(1.0 - u));
  for (int it = 0; it < 200; ++it) {
    const double f = norm_cdf(x) - u;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double d = norm_pdf(x);
    double next = (d > 0.0) ? x - f / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-16 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  return x;
}

// ============================================================================
// Reproducible generator
// ============================================================================

/// Derives a decorrelated child seed from (seed, tag); used to give every
/// replicate and every purpose (locations, latent columns, drift) its own
/// stream, independent of scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based generator (splitmix64). All variates are produced by
/// inversion so a stream's content depends only on its seed, never on the
/// platform's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal by inversion.
  double normal() { return inv_norm_cdf(uniform()); }

  /// Beta(2,4) by inversion of its closed-form CDF.
  double beta24() { return beta24_quantile(uniform()); }

  /// Beta(2,4) CDF: regularized incomplete beta with integer parameters.
  static double beta24_cdf(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double y = 1.0 - x;
    return x * x * (10.0 * y * y * y + x * (10.0 * y * y + x * (5.0 * y + x)));
  }

  /// Beta(2,4) density: 20 x (1-x)^3.
  static double beta24_pdf(double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    const double y = 1.0 - x;
    return 20.0 * x * y * y * y;
  }

  static double beta24_quantile(double u) {
    if (!(u > 0.0 && u < 1.0)) throw Error(detail::str("beta24_quantile: u=", u, " outside (0,1)"));
    double lo = 0.0, hi = 1.0, x = 1.0 / 3.0;
    for (int it = 0; it < 200; ++it) {
      const double f = beta24_cdf(x) - u;
      if (f > 0.0)
        hi = x;
      else
        lo = x;
      const double d = beta24_pdf(x);
      double next = (d > 0.0) ? x - f / d : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - x) <= 1e-16) return next;
      x = next;
    }
    return x;
  }

 private:
  std::uint64_t state_;
};

}  // namespace sbss
