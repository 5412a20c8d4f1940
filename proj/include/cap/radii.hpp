#pragma once

// Radii polynomial p(r) = Z2 r^2 - (1 - Z0 - Z1) r + Y0 for quadratic zero
// finding problems. p(r0) < 0 yields a unique zero within r0 of the
// approximation.

#include <cmath>
#include <string>

#include "cap/errors.hpp"
#include "cap/interval.hpp"

namespace cap {

struct RadiiBounds {
  double Y0 = 0.0;
  double Z0 = 0.0;
  double Z1 = 0.0;
  double Z2 = 0.0;
};

/// Interval enclosure of p(r).
inline RealInterval radii_polynomial(const RadiiBounds& b, double r) {
  const RealInterval R = r;
  return RealInterval(b.Z2) * sqr(R) - (RealInterval(1.0) - RealInterval(b.Z0) - RealInterval(b.Z1)) * R +
         RealInterval(b.Y0);
}

/// True when p(r) < 0 holds rigorously.
inline bool radii_negative(const RadiiBounds& b, double r) {
  return r > 0.0 && std::isfinite(r) && radii_polynomial(b, r).hi() < 0.0;
}

/// Smallest radius (up to a relative 1e-12 margin) with p(r) < 0 verified.
inline double solve_radii(const RadiiBounds& b) {
  for (double x : {b.Y0, b.Z0, b.Z1, b.Z2}) {
    if (!std::isfinite(x) || x < 0.0) throw ValidationFailed("bounds", "radii bounds are not finite and nonnegative");
  }
  if (b.Z0 >= 1.0) throw ValidationFailed("Z0", "Z0 >= 1: approximate inverse too inaccurate");
  const double gap = 1.0 - b.Z0 - b.Z1;
  if (gap <= 0.0) throw ValidationFailed("Z1", "Z0 + Z1 >= 1");
  const double disc = gap * gap - 4.0 * b.Z2 * b.Y0;
  if (disc <= 0.0) throw ValidationFailed("Y0", "radii polynomial has no negative region (Y0 too large)");
  const double rmin = b.Z2 > 0.0 ? 2.0 * b.Y0 / (gap + std::sqrt(disc)) : b.Y0 / gap;
  const double rmax = b.Z2 > 0.0 ? (gap + std::sqrt(disc)) / (2.0 * b.Z2) : INFINITY;
  double base = rmin > 0.0 ? rmin : 1e-300;
  for (int j = 12; j >= 1; --j) {
    const double r = base * (1.0 + std::pow(10.0, -j));
    if (r < rmax && radii_negative(b, r)) return r;
  }
  const double r = std::sqrt(rmin * (std::isfinite(rmax) ? rmax : 2.0 * rmin + 1.0));
  if (radii_negative(b, r)) return r;
  throw ValidationFailed("Y0", "no radius with p(r) < 0 could be verified");
}

}  // namespace cap
