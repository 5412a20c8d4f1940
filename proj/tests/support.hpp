#pragma once

// Shared oracles for the test suites and the acceptance binary: a 100-digit
// binary float for interval containment, brute-force convolution, and
// random sequence generators.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "cap/cap.hpp"

namespace cap::testing {

using Big = boost::multiprecision::cpp_bin_float_100;

inline bool encloses(const RealInterval& x, const Big& v) { return Big(x.lo()) <= v && v <= Big(x.hi()); }

/// Uniform point in [lo, hi], both endpoints reachable.
inline double sample(std::mt19937_64& rng, const RealInterval& x) {
  if (x.is_point()) return x.lo();
  std::uniform_int_distribution<int> pick(0, 9);
  const int p = pick(rng);
  if (p == 0) return x.lo();
  if (p == 1) return x.hi();
  std::uniform_real_distribution<double> u(x.lo(), x.hi());
  return u(rng);
}

/// Random interval: center spread over many binades, width from point to wide.
inline RealInterval random_interval(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  std::uniform_int_distribution<int> ex(-20, 20);
  std::uniform_int_distribution<int> kind(0, 3);
  const double c = std::ldexp(mant(rng), ex(rng));
  double w = 0.0;
  switch (kind(rng)) {
    case 0: w = 0.0; break;
    case 1: w = std::abs(c) * 1e-12; break;
    case 2: w = std::abs(c) * 0.1; break;
    default: w = std::ldexp(std::abs(mant(rng)), ex(rng)); break;
  }
  return {c - w, c + w};
}

inline ComplexBox random_box(std::mt19937_64& rng) { return {random_interval(rng), random_interval(rng)}; }

struct ContainmentTally {
  std::size_t operations = 0;
  std::size_t violations = 0;
};

/// One trial per call: a random operation on random operands, checked at a
/// random point against the 100-digit oracle.
inline void containment_trial(std::mt19937_64& rng, ContainmentTally& t) {
  std::uniform_int_distribution<int> op(0, 11);
  const int o = op(rng);
  ++t.operations;
  auto fail = [&] { ++t.violations; };
  if (o < 4) {  // real + - * /
    const RealInterval x = random_interval(rng), y = random_interval(rng);
    const double a = sample(rng, x), b = sample(rng, y);
    if (o == 3 && y.contains_zero()) {
      try {
        (void)(x / y);
        fail();
      } catch (const DivByZeroBox&) {
      }
      return;
    }
    const Big A(a), B(b);
    const RealInterval r = o == 0 ? x + y : o == 1 ? x - y : o == 2 ? x * y : x / y;
    const Big e = o == 0 ? Big(A + B) : o == 1 ? Big(A - B) : o == 2 ? Big(A * B) : Big(A / B);
    if (!encloses(r, e)) fail();
  } else if (o < 7) {  // complex + * /
    const ComplexBox x = random_box(rng), y = random_box(rng);
    const Big ar(sample(rng, x.re)), ai(sample(rng, x.im)), br(sample(rng, y.re)), bi(sample(rng, y.im));
    if (o == 4) {
      const ComplexBox r = x + y;
      if (!encloses(r.re, ar + br) || !encloses(r.im, ai + bi)) fail();
    } else if (o == 5) {
      const ComplexBox r = x * y;
      if (!encloses(r.re, ar * br - ai * bi) || !encloses(r.im, ar * bi + ai * br)) fail();
    } else {
      if (y.contains_zero()) {
        try {
          (void)(x / y);
          fail();
        } catch (const DivByZeroBox&) {
        }
        return;
      }
      ComplexBox r;
      try {
        r = x / y;
      } catch (const DivByZeroBox&) {
        return;  // |y|^2 box touched zero: a refusal, not a wrong answer
      }
      const Big d = br * br + bi * bi;
      if (!encloses(r.re, (ar * br + ai * bi) / d) || !encloses(r.im, (ai * br - ar * bi) / d)) fail();
    }
  } else if (o == 7) {  // exp
    std::uniform_real_distribution<double> u(-40.0, 40.0);
    const double c = u(rng);
    const RealInterval x(c, c + std::abs(u(rng)) * 1e-3);
    const Big v = boost::multiprecision::exp(Big(sample(rng, x)));
    if (!encloses(exp_real(x), v)) fail();
  } else if (o == 8 || o == 9) {  // sin, cos
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    const double c = u(rng);
    std::uniform_int_distribution<int> wk(0, 2);
    const double w = wk(rng) == 0 ? 0.0 : std::abs(u(rng)) * (wk(rng) == 1 ? 1e-6 : 0.1);
    const RealInterval x(c, c + w);
    const Big p(sample(rng, x));
    const Big v = o == 8 ? Big(boost::multiprecision::sin(p)) : Big(boost::multiprecision::cos(p));
    if (!encloses(o == 8 ? sin(x) : cos(x), v)) fail();
  } else if (o == 10) {  // sqrt
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> ex(-30, 30);
    const double c = std::ldexp(u(rng), ex(rng));
    const RealInterval x(c, c * (1.0 + u(rng) * 1e-3));
    const Big v = boost::multiprecision::sqrt(Big(sample(rng, x)));
    if (!encloses(sqrt(x), v)) fail();
  } else {  // abs bounds of a complex box
    const ComplexBox z = random_box(rng);
    const Big r(sample(rng, z.re)), i(sample(rng, z.im));
    const Big m = boost::multiprecision::sqrt(r * r + i * i);
    if (!(Big(abs_lower(z)) <= m && m <= Big(abs_upper(z)))) fail();
  }
}

/// Symmetric sequence a_0..a_N extended to -N..N.
inline std::vector<std::complex<double>> symmetric_extension(const SymSeq& a) {
  const long N = static_cast<long>(a.order());
  std::vector<std::complex<double>> v(static_cast<std::size_t>(2 * N + 1));
  for (long k = -N; k <= N; ++k) v[k + N] = a[static_cast<std::size_t>(std::abs(k))].mid();
  return v;
}

inline SymSeq random_sym(std::mt19937_64& rng, std::size_t N, double nu = 1.0, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  SymSeq a(N, nu);
  for (std::size_t k = 0; k <= N; ++k) a[k] = ComplexBox(g(rng) / (1.0 + k), g(rng) / (1.0 + k));
  return a;
}

inline BiSeq random_bi(std::mt19937_64& rng, std::size_t K, double nu = 1.0, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  BiSeq a(K, nu);
  for (auto& c : a.coeffs) c = ComplexBox(g(rng), g(rng));
  return a;
}

/// Exact convolution mode k of symmetric extensions, in 100-digit floats.
inline std::pair<Big, Big> exact_mode(const std::vector<std::complex<double>>& ea,
                                      const std::vector<std::complex<double>>& eb, long k) {
  const long Na = static_cast<long>(ea.size() / 2), Nb = static_cast<long>(eb.size() / 2);
  Big re = 0, im = 0;
  for (long i = -Na; i <= Na; ++i) {
    const long j = k - i;
    if (std::abs(j) > Nb) continue;
    const Big ar(ea[i + Na].real()), ai(ea[i + Na].imag()), br(eb[j + Nb].real()), bi(eb[j + Nb].imag());
    re += ar * br - ai * bi;
    im += ar * bi + ai * br;
  }
  return {re, im};
}

inline bool box_encloses(const ComplexBox& b, const std::pair<Big, Big>& z) {
  return encloses(b.re, z.first) && encloses(b.im, z.second);
}

/// High-precision norm of a point sequence (midpoints; tail excluded).
inline Big exact_norm(const SymSeq& a) {
  Big s = 0, w = 1;
  for (std::size_t k = 0; k <= a.order(); ++k) {
    const std::complex<double> z = a[k].mid();
    const Big m = boost::multiprecision::sqrt(Big(z.real()) * Big(z.real()) + Big(z.imag()) * Big(z.imag()));
    s += (k == 0 ? Big(1) : Big(2)) * w * m;
    w *= Big(a.nu);
  }
  return s;
}

inline Big exact_norm(const BiSeq& a) {
  Big s = 0;
  const long K = static_cast<long>(a.order());
  for (long k = -K; k <= K; ++k) {
    const std::complex<double> z = a[k].mid();
    const Big m = boost::multiprecision::sqrt(Big(z.real()) * Big(z.real()) + Big(z.imag()) * Big(z.imag()));
    s += boost::multiprecision::pow(Big(a.nu), static_cast<int>(std::abs(k))) * m;
  }
  return s;
}

/// One Banach-algebra trial on a random dense pair (N <= 8): the product norm
/// is submultiplicative and every mode of both the symmetric and two-sided
/// enclosures holds the exact convolution.
inline bool banach_trial(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> n(0, 8);
  std::uniform_real_distribution<double> w(1.0, 2.0);
  const double nu = w(rng);
  const SymSeq a = random_sym(rng, n(rng), nu), b = random_sym(rng, n(rng), nu);
  const SymSeq c = convolve(a, b);
  // Both sides are rounded upper bounds; allow the summation slack only.
  const double slack = 1.0 + 64.0 * std::numeric_limits<double>::epsilon();
  if (!(norm_upper(c) <= mul_up(norm_upper(a), norm_upper(b)) * slack)) return false;
  const auto ea = symmetric_extension(a), eb = symmetric_extension(b);
  const long Kc = static_cast<long>(c.order());
  for (long k = 0; k <= Kc; ++k) {
    if (!box_encloses(c[static_cast<std::size_t>(k)], exact_mode(ea, eb, k))) return false;
  }
  const BiSeq A = sym_to_bi(a), B = sym_to_bi(b);
  const BiSeq C = convolve_bi(A, B);
  for (long k = -Kc; k <= Kc; ++k) {
    if (!box_encloses(C[k], exact_mode(ea, eb, k))) return false;
  }
  return norm_upper(C) <= mul_up(norm_upper(A), norm_upper(B)) * slack;
}

/// g(rescale(a, n)) against n^4 spread(g(a), n): every mode's enclosures meet.
inline bool rescale_trial(std::mt19937_64& rng, unsigned n, const Angle& theta) {
  std::uniform_int_distribution<std::size_t> N(1, 10);
  const SymSeq a = random_sym(rng, N(rng));
  const SymSeq lhs = apply_g(rescale(a, n), theta);
  const double n4 = std::pow(static_cast<double>(n), 4);
  const SymSeq rhs = ComplexBox(n4, 0.0) * spread(apply_g(a, theta), n);
  if (lhs.order() != rhs.order()) return false;
  for (std::size_t k = 0; k <= lhs.order(); ++k) {
    if (!lhs[k].re.intersects(rhs[k].re) || !lhs[k].im.intersects(rhs[k].im)) return false;
  }
  return true;
}

/// Exact zeta(t) = z0 / (1 - z0 t e^{i theta}) in 100-digit arithmetic.
inline std::pair<Big, Big> exact_zeta(std::complex<double> z0, double theta, double t) {
  const Big c = boost::multiprecision::cos(Big(theta)), s = boost::multiprecision::sin(Big(theta));
  const Big zr(z0.real()), zi(z0.imag()), T(t);
  // 1 - z0 t e^{i theta}
  const Big dr = 1 - T * (zr * c - zi * s), di = -T * (zr * s + zi * c);
  const Big d = dr * dr + di * di;
  return {(zr * dr + zi * di) / d, (zi * dr - zr * di) / d};
}

/// Mode 0 of the step endpoint, widened by its ball, holds zeta(t_b).
inline bool endpoint_holds(const StepCertificate& s, std::complex<double> z0, double theta) {
  return box_encloses(inflate(s.endpoint[0], s.endpoint.tail), exact_zeta(z0, theta, s.t_b));
}

/// Smallest weighted l1 norm over the enclosure's finite part.
inline double norm_lower(const SymSeq& a) {
  double s = 0.0;
  for (std::size_t k = 0; k <= a.order(); ++k) s += (k == 0 ? 1.0 : 2.0) * std::pow(a.nu, k) * abs_lower(a[k]);
  return s;
}

}  // namespace cap::testing
