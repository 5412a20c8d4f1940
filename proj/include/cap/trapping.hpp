#pragma once

// Trapping region about the zero equilibrium. States a = z0 delta_0 + phi with
// Re(e^{i theta} z0) <= 0, |z0| <= rho0 and |phi|_nu <= rho1 |z0|^2 converge to
// zero whenever rho1 exp(pi/2 r rho0) < r for some r > 0, and then stay within
// r |zeta(t)|^2 of the homogeneous solution zeta(t) = z0 / (1 - z0 t e^{i theta}).

#include <cfloat>
#include <optional>
#include <string>

#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/seqspace.hpp"

namespace cap {

struct TrapParams {
  double rho0 = 0.0;
  double rho1 = 0.0;
  double r = 0.0;
  double theta = 0.0;
  ComplexBox z0;
  double phi_norm = 0.0;
};

struct SplitState {
  ComplexBox z0;
  double phi_norm = 0.0;
};

/// z0 = mode-0 box grown by the tail; phi_norm bounds the other modes plus the tail.
inline SplitState split_state(const BiSeq& a) {
  SplitState s;
  s.z0 = inflate(a[0], a.tail);
  if (a.tail == 0.0) s.z0 = a[0];
  const long K = static_cast<long>(a.order());
  double r = a.tail;
  for (long k = -K; k <= K; ++k) {
    if (k == 0) continue;
    const double m = abs_upper(a[k]);
    if (m != 0.0) r = add_up(r, mul_up(nu_power(a.nu, static_cast<std::size_t>(std::abs(k))).hi(), m));
  }
  s.phi_norm = r;
  return s;
}

/// True only if sup Re(e^{i theta} z0) <= 0 and sup |z0| <= rho0 over the box.
inline bool in_sector(const ComplexBox& z0, const Angle& theta, double rho0) {
  return (theta.phase * z0).re.hi() <= 0.0 && abs_upper(z0) <= rho0;
}

/// Interval check of rho1 exp(pi/2 r rho0) < r.
inline bool trap_inequality(double rho0, double rho1, double r) {
  const RealInterval lhs =
      RealInterval(rho1) * exp_real(pi_interval() * RealInterval(0.5) * RealInterval(r) * RealInterval(rho0));
  return lhs.hi() < r;
}

/// First r = 2^j rho1 (j = 1..60) satisfying the trap inequality.
inline std::optional<double> trap_radius(double rho0, double rho1) {
  for (int j = 1; j <= 60; ++j) {
    const double r = std::ldexp(rho1, j);
    if (trap_inequality(rho0, rho1, r)) return r;
  }
  return std::nullopt;
}

struct TrapResult {
  bool trapped = false;
  TrapParams params;
  std::string reason;  // why the check failed
};

inline TrapResult trap_check(const BiSeq& a, const Angle& theta) {
  TrapResult res;
  const SplitState s = split_state(a);
  TrapParams& p = res.params;
  p.theta = theta.value();
  p.z0 = s.z0;
  p.phi_norm = s.phi_norm;
  const double zl = abs_lower(s.z0);
  if (zl == 0.0) {
    res.reason = "z0 box contains 0";
    return res;
  }
  p.rho0 = abs_upper(s.z0);
  if (!in_sector(s.z0, theta, p.rho0)) {
    res.reason = "z0 outside the sector";
    return res;
  }
  p.rho1 = div_up(s.phi_norm, mul_down(zl, zl));
  if (p.rho1 == 0.0) p.rho1 = DBL_MIN;
  if (const auto r = trap_radius(p.rho0, p.rho1)) {
    p.r = *r;
    res.trapped = true;
  } else {
    res.reason = "no radius satisfies the trap inequality";
  }
  return res;
}

/// zeta(t) = z0 / (1 - z0 t e^{i theta}); throws NearBlowup when the
/// denominator box contains 0.
inline ComplexBox zeta(const ComplexBox& z0, const Angle& theta, const RealInterval& t) {
  const ComplexBox den = ComplexBox(1.0, 0.0) - z0 * t * theta.phase;
  if (den.contains_zero()) throw NearBlowup("zeta: denominator contains 0");
  return z0 / den;
}

}  // namespace cap
