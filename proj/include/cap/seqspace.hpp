#pragma once

// Weighted l1_nu Fourier sequences on the period-1 circle.
//
// SymSeq stores a symmetric sequence (a_{-k} = a_k) by its modes k = 0..N with
// norm |a_0| + 2 sum_k |a_k| nu^k. BiSeq stores modes k = -K..K with norm
// sum_k |a_k| nu^|k|. In both, `tail` is the radius of an l1_nu ball around the
// stored boxes: the enclosed set is every sequence within `tail` of some
// sequence whose modes lie in the boxes and vanish beyond the stored range.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "cap/errors.hpp"
#include "cap/interval.hpp"

namespace cap {

/// nu^k, exact for nu = 1.
inline RealInterval nu_power(double nu, std::size_t k) {
  if (nu == 1.0) return 1.0;
  return pow(RealInterval(nu), static_cast<unsigned>(k));
}

/// Symmetric weight omega_k: 1 for k = 0, 2 nu^k otherwise.
inline RealInterval sym_weight(double nu, std::size_t k) {
  if (k == 0) return 1.0;
  return RealInterval(2.0) * nu_power(nu, k);
}

/// Upper bounds of the symmetric weights omega_0..omega_n.
inline std::vector<double> sym_weights_upper(double nu, std::size_t n) {
  std::vector<double> w(n + 1);
  for (std::size_t k = 0; k <= n; ++k) w[k] = sym_weight(nu, k).hi();
  return w;
}

inline void check_nu(double nu) {
  if (!(nu >= 1.0) || !std::isfinite(nu)) throw ConfigError("nu must be a finite number >= 1");
}

struct SymSeq {
  double nu = 1.0;
  std::vector<ComplexBox> coeffs;
  double tail = 0.0;

  SymSeq() : coeffs(1) {}
  SymSeq(std::size_t order, double nu_) : nu(nu_), coeffs(order + 1) { check_nu(nu_); }

  static SymSeq zeros(std::size_t order, double nu = 1.0) { return SymSeq(order, nu); }
  static SymSeq delta(std::size_t k, ComplexBox value = ComplexBox(1.0, 0.0), double nu = 1.0,
                      std::size_t order = 0) {
    SymSeq s(std::max(k, order), nu);
    s.coeffs[k] = value;
    return s;
  }
  static SymSeq from_points(const std::vector<std::complex<double>>& v, double nu = 1.0) {
    SymSeq s(v.empty() ? 0 : v.size() - 1, nu);
    for (std::size_t k = 0; k < v.size(); ++k) s.coeffs[k] = ComplexBox(v[k]);
    return s;
  }

  /// Highest stored mode N.
  std::size_t order() const noexcept { return coeffs.size() - 1; }
  const ComplexBox& operator[](std::size_t k) const { return coeffs[k]; }
  ComplexBox& operator[](std::size_t k) { return coeffs[k]; }
  ComplexBox at_or_zero(std::size_t k) const { return k < coeffs.size() ? coeffs[k] : ComplexBox(); }

  std::vector<std::complex<double>> mid() const {
    std::vector<std::complex<double>> v(coeffs.size());
    for (std::size_t k = 0; k < coeffs.size(); ++k) v[k] = coeffs[k].mid();
    return v;
  }
};

struct BiSeq {
  double nu = 1.0;
  std::vector<ComplexBox> coeffs;  // index k + K
  double tail = 0.0;

  BiSeq() : coeffs(1) {}
  BiSeq(std::size_t order, double nu_) : nu(nu_), coeffs(2 * order + 1) { check_nu(nu_); }

  static BiSeq zeros(std::size_t order, double nu = 1.0) { return BiSeq(order, nu); }
  static BiSeq delta(long k, ComplexBox value = ComplexBox(1.0, 0.0), double nu = 1.0,
                     std::size_t order = 0) {
    BiSeq s(std::max(static_cast<std::size_t>(std::abs(k)), order), nu);
    s[k] = value;
    return s;
  }

  std::size_t order() const noexcept { return coeffs.size() / 2; }
  ComplexBox& operator[](long k) { return coeffs[static_cast<std::size_t>(k + static_cast<long>(order()))]; }
  const ComplexBox& operator[](long k) const {
    return coeffs[static_cast<std::size_t>(k + static_cast<long>(order()))];
  }
  ComplexBox at_or_zero(long k) const {
    return static_cast<std::size_t>(std::abs(k)) <= order() ? (*this)[k] : ComplexBox();
  }
};

// ---------------------------------------------------------------------------
// Norms

/// Norm bound of the stored boxes alone.
inline double coeff_norm_upper(const SymSeq& a) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.coeffs.size(); ++k) {
    const double c = abs_upper(a.coeffs[k]);
    if (c != 0.0) s = add_up(s, mul_up(sym_weight(a.nu, k).hi(), c));
  }
  return s;
}

inline double coeff_norm_upper(const BiSeq& a) {
  const long K = static_cast<long>(a.order());
  double s = 0.0;
  for (long k = -K; k <= K; ++k) {
    const double c = abs_upper(a[k]);
    if (c != 0.0) s = add_up(s, mul_up(nu_power(a.nu, static_cast<std::size_t>(std::abs(k))).hi(), c));
  }
  return s;
}

inline double norm_upper(const SymSeq& a) { return add_up(coeff_norm_upper(a), a.tail); }
inline double norm_upper(const BiSeq& a) { return add_up(coeff_norm_upper(a), a.tail); }

// ---------------------------------------------------------------------------
// Linear operations

namespace detail {
inline void same_nu(double a, double b) {
  if (a != b) throw ConfigError("sequence weights nu differ");
}
}  // namespace detail

inline SymSeq operator+(const SymSeq& a, const SymSeq& b) {
  detail::same_nu(a.nu, b.nu);
  SymSeq c(std::max(a.order(), b.order()), a.nu);
  for (std::size_t k = 0; k <= c.order(); ++k) c[k] = a.at_or_zero(k) + b.at_or_zero(k);
  c.tail = add_up(a.tail, b.tail);
  return c;
}

inline SymSeq operator-(const SymSeq& a, const SymSeq& b) {
  detail::same_nu(a.nu, b.nu);
  SymSeq c(std::max(a.order(), b.order()), a.nu);
  for (std::size_t k = 0; k <= c.order(); ++k) c[k] = a.at_or_zero(k) - b.at_or_zero(k);
  c.tail = add_up(a.tail, b.tail);
  return c;
}

inline SymSeq operator*(const ComplexBox& s, const SymSeq& a) {
  SymSeq c = a;
  for (auto& x : c.coeffs) x = s * x;
  c.tail = mul_up(abs_upper(s), a.tail);
  return c;
}

inline BiSeq operator+(const BiSeq& a, const BiSeq& b) {
  detail::same_nu(a.nu, b.nu);
  BiSeq c(std::max(a.order(), b.order()), a.nu);
  const long K = static_cast<long>(c.order());
  for (long k = -K; k <= K; ++k) c[k] = a.at_or_zero(k) + b.at_or_zero(k);
  c.tail = add_up(a.tail, b.tail);
  return c;
}

inline BiSeq operator-(const BiSeq& a, const BiSeq& b) {
  detail::same_nu(a.nu, b.nu);
  BiSeq c(std::max(a.order(), b.order()), a.nu);
  const long K = static_cast<long>(c.order());
  for (long k = -K; k <= K; ++k) c[k] = a.at_or_zero(k) - b.at_or_zero(k);
  c.tail = add_up(a.tail, b.tail);
  return c;
}

inline BiSeq operator*(const ComplexBox& s, const BiSeq& a) {
  BiSeq c = a;
  for (auto& x : c.coeffs) x = s * x;
  c.tail = mul_up(abs_upper(s), a.tail);
  return c;
}

/// Keeps modes 0..n; the weighted mass of dropped modes moves into the tail.
inline SymSeq truncate(const SymSeq& a, std::size_t n) {
  if (n >= a.order()) {
    SymSeq c = a;
    c.coeffs.resize(n + 1);
    return c;
  }
  SymSeq c(n, a.nu);
  std::copy(a.coeffs.begin(), a.coeffs.begin() + static_cast<long>(n + 1), c.coeffs.begin());
  double cut = a.tail;
  for (std::size_t k = n + 1; k <= a.order(); ++k) {
    cut = add_up(cut, mul_up(sym_weight(a.nu, k).hi(), abs_upper(a[k])));
  }
  c.tail = cut;
  return c;
}

inline BiSeq truncate(const BiSeq& a, std::size_t n) {
  BiSeq c(n, a.nu);
  const long K = static_cast<long>(a.order());
  const long Kn = static_cast<long>(n);
  double cut = a.tail;
  for (long k = -K; k <= K; ++k) {
    if (std::abs(k) <= Kn) {
      c[k] = a[k];
    } else {
      cut = add_up(cut, mul_up(nu_power(a.nu, static_cast<std::size_t>(std::abs(k))).hi(), abs_upper(a[k])));
    }
  }
  c.tail = cut;
  return c;
}

/// Midpoint sequence with zero tail.
inline SymSeq midpoint(const SymSeq& a) {
  SymSeq c(a.order(), a.nu);
  for (std::size_t k = 0; k <= a.order(); ++k) c[k] = ComplexBox(a[k].mid());
  return c;
}

inline BiSeq midpoint(const BiSeq& a) {
  BiSeq c(a.order(), a.nu);
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) c.coeffs[i] = ComplexBox(a.coeffs[i].mid());
  return c;
}

// ---------------------------------------------------------------------------
// Convolution

namespace detail {
// Ball radius of a product of two balls around finite parts ca, cb.
inline double product_tail(double ca, double ta, double cb, double tb) {
  return add_up(add_up(mul_up(ca, tb), mul_up(ta, cb)), mul_up(ta, tb));
}
}  // namespace detail

/// Full symmetric convolution; the result holds modes 0..Na+Nb.
inline SymSeq convolve(const SymSeq& a, const SymSeq& b) {
  detail::same_nu(a.nu, b.nu);
  const long Na = static_cast<long>(a.order());
  const long Nb = static_cast<long>(b.order());
  SymSeq c(static_cast<std::size_t>(Na + Nb), a.nu);
  for (long k = 0; k <= Na + Nb; ++k) {
    ComplexBox s;
    const long jlo = std::max(-Na, k - Nb);
    const long jhi = std::min(Na, k + Nb);
    for (long j = jlo; j <= jhi; ++j) {
      s += a.coeffs[static_cast<std::size_t>(std::abs(j))] * b.coeffs[static_cast<std::size_t>(std::abs(k - j))];
    }
    c.coeffs[static_cast<std::size_t>(k)] = s;
  }
  if (a.tail > 0.0 || b.tail > 0.0) {
    c.tail = detail::product_tail(coeff_norm_upper(a), a.tail, coeff_norm_upper(b), b.tail);
  }
  return c;
}

/// Full two-sided convolution; the result holds modes -(Ka+Kb)..Ka+Kb.
inline BiSeq convolve_bi(const BiSeq& a, const BiSeq& b) {
  detail::same_nu(a.nu, b.nu);
  const long Ka = static_cast<long>(a.order());
  const long Kb = static_cast<long>(b.order());
  BiSeq c(static_cast<std::size_t>(Ka + Kb), a.nu);
  for (long i = -Ka; i <= Ka; ++i) {
    const ComplexBox& x = a[i];
    if (x == ComplexBox()) continue;
    for (long j = -Kb; j <= Kb; ++j) c[i + j] += x * b[j];
  }
  if (a.tail > 0.0 || b.tail > 0.0) {
    c.tail = detail::product_tail(coeff_norm_upper(a), a.tail, coeff_norm_upper(b), b.tail);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Vector field g(a) = e^{i theta}(L a + a*a), (L a)_k = -4 pi^2 k^2 a_k.

/// -4 pi^2 k^2 enclosure.
inline RealInterval laplace_multiplier(long k) {
  const double kk = static_cast<double>(k) * static_cast<double>(k);
  return RealInterval(-4.0 * kk) * pi_squared();
}

/// Encloses g(a) on all modes it touches (0..2N). The Laplacian is unbounded
/// on an l1 ball, so a nonzero tail is rejected.
inline SymSeq apply_g(const SymSeq& a, const ComplexBox& phase) {
  if (a.tail > 0.0) throw DomainError("apply_g: the Laplacian is unbounded on a sequence with a tail");
  SymSeq c = convolve(a, a);
  for (std::size_t k = 0; k <= a.order(); ++k) c[k] += laplace_multiplier(static_cast<long>(k)) * a[k];
  for (auto& x : c.coeffs) x = phase * x;
  return c;
}

inline BiSeq apply_g(const BiSeq& a, const ComplexBox& phase) {
  if (a.tail > 0.0) throw DomainError("apply_g: the Laplacian is unbounded on a sequence with a tail");
  BiSeq c = convolve_bi(a, a);
  const long K = static_cast<long>(a.order());
  for (long k = -K; k <= K; ++k) c[k] += laplace_multiplier(k) * a[k];
  for (auto& x : c.coeffs) x = phase * x;
  return c;
}

inline SymSeq apply_g(const SymSeq& a, const Angle& theta) { return apply_g(a, theta.phase); }
inline BiSeq apply_g(const BiSeq& a, const Angle& theta) { return apply_g(a, theta.phase); }

// ---------------------------------------------------------------------------
// Rescaling u(t, x) -> n^2 u(n^2 t, n x): b_{nk} = n^2 a_k.

/// Index spread b_{nk} = a_k without amplitude scaling.
inline SymSeq spread(const SymSeq& a, unsigned n) {
  if (n == 0) throw ConfigError("spread factor must be >= 1");
  if (n == 1) return a;
  if (a.tail > 0.0 && a.nu != 1.0) throw DomainError("spread: tail bound needs nu = 1");
  SymSeq c(a.order() * n, a.nu);
  for (std::size_t k = 0; k <= a.order(); ++k) c[k * n] = a[k];
  c.tail = a.tail;
  return c;
}

inline SymSeq rescale(const SymSeq& a, unsigned n) {
  if (n == 1) return a;
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  return ComplexBox(n2, 0.0) * spread(a, n);
}

// ---------------------------------------------------------------------------

/// b_k = a_{|k|}. Norms agree because omega_k = 2 nu^k counts both signs.
inline BiSeq sym_to_bi(const SymSeq& a) {
  BiSeq b(a.order(), a.nu);
  for (std::size_t k = 0; k <= a.order(); ++k) {
    b[static_cast<long>(k)] = a[k];
    b[-static_cast<long>(k)] = a[k];
  }
  b.tail = a.tail;
  return b;
}

/// BiSeq grown (zero padding) or cut (mass into the tail) to order n.
inline BiSeq resize(const BiSeq& a, std::size_t n) { return truncate(a, n); }

}  // namespace cap
