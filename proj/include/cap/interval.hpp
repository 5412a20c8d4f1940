#pragma once

// Outward-rounded real intervals and rectangular complex boxes.
//
// Every arithmetic result is the round-to-nearest value nudged one ulp
// outward at each endpoint, so it contains the exact real result for all
// inputs in the operands. No rounding-mode state is touched, which keeps the
// types safe to use from any thread.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "cap/errors.hpp"

namespace cap {

namespace detail {

inline double next_up(double x) noexcept {
  if (std::isnan(x) || x == std::numeric_limits<double>::infinity()) return x;
  if (x == 0.0) return std::numeric_limits<double>::denorm_min();
  auto bits = std::bit_cast<std::uint64_t>(x);
  bits = (x > 0.0) ? bits + 1 : bits - 1;
  return std::bit_cast<double>(bits);
}

inline double next_down(double x) noexcept { return -next_up(-x); }

// libm transcendentals are within 1 ulp on glibc; two steps covers binade edges.
inline double pad_up(double x) noexcept { return next_up(next_up(x)); }
inline double pad_down(double x) noexcept { return next_down(next_down(x)); }

}  // namespace detail

/// Scalar bounds rounded upward (for norms and other nonnegative bookkeeping).
// A zero sum of doubles is exact, as is a product with an exact zero factor.
inline double add_up(double a, double b) noexcept {
  const double s = a + b;
  return s == 0.0 ? 0.0 : detail::next_up(s);
}
inline double mul_up(double a, double b) noexcept {
  return (a == 0.0 || b == 0.0) ? 0.0 * a * b : detail::next_up(a * b);
}
inline double div_up(double a, double b) noexcept { return a == 0.0 ? a / b : detail::next_up(a / b); }
inline double add_down(double a, double b) noexcept {
  const double s = a + b;
  return s == 0.0 ? 0.0 : detail::next_down(s);
}
inline double mul_down(double a, double b) noexcept {
  return (a == 0.0 || b == 0.0) ? 0.0 * a * b : detail::next_down(a * b);
}
inline double div_down(double a, double b) noexcept { return a == 0.0 ? a / b : detail::next_down(a / b); }

class RealInterval {
 public:
  constexpr RealInterval() noexcept = default;
  // NOLINTNEXTLINE(google-explicit-constructor): a double is its exact point interval
  constexpr RealInterval(double v) noexcept : lo_(v), hi_(v) {}
  constexpr RealInterval(double lo, double hi) noexcept : lo_(lo), hi_(hi) {}

  static RealInterval hull(double a, double b) noexcept {
    return {std::min(a, b), std::max(a, b)};
  }
  /// Symmetric interval [-r, r].
  static RealInterval ball(double r) noexcept { return {-r, r}; }

  constexpr double lo() const noexcept { return lo_; }
  constexpr double hi() const noexcept { return hi_; }

  bool is_valid() const noexcept {
    return std::isfinite(lo_) && std::isfinite(hi_) && lo_ <= hi_;
  }
  bool is_point() const noexcept { return lo_ == hi_; }

  double mid() const noexcept { return lo_ == hi_ ? lo_ : 0.5 * lo_ + 0.5 * hi_; }
  /// Upper bound of the radius about mid().
  double rad() const noexcept {
    const double m = mid();
    return detail::next_up(std::max(m - lo_, hi_ - m));
  }
  double width() const noexcept { return detail::next_up(hi_ - lo_); }
  /// max |x| over the interval.
  double mag() const noexcept { return std::max(std::abs(lo_), std::abs(hi_)); }
  /// min |x| over the interval.
  double mig() const noexcept {
    if (lo_ <= 0.0 && hi_ >= 0.0) return 0.0;
    return std::min(std::abs(lo_), std::abs(hi_));
  }

  bool contains(double x) const noexcept { return lo_ <= x && x <= hi_; }
  bool contains(const RealInterval& x) const noexcept {
    return lo_ <= x.lo_ && x.hi_ <= hi_;
  }
  bool contains_zero() const noexcept { return contains(0.0); }
  bool intersects(const RealInterval& x) const noexcept {
    return lo_ <= x.hi_ && x.lo_ <= hi_;
  }

  RealInterval operator-() const noexcept { return {-hi_, -lo_}; }

  RealInterval& operator+=(const RealInterval& y) noexcept;
  RealInterval& operator-=(const RealInterval& y) noexcept;
  RealInterval& operator*=(const RealInterval& y) noexcept;
  RealInterval& operator/=(const RealInterval& y);

  friend bool operator==(const RealInterval&, const RealInterval&) = default;

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

inline RealInterval operator+(const RealInterval& x, const RealInterval& y) noexcept {
  return {add_down(x.lo(), y.lo()), add_up(x.hi(), y.hi())};
}

inline RealInterval operator-(const RealInterval& x, const RealInterval& y) noexcept {
  return {add_down(x.lo(), -y.hi()), add_up(x.hi(), -y.lo())};
}

inline RealInterval operator*(const RealInterval& x, const RealInterval& y) noexcept {
  if (x.is_point() && y.is_point()) return {mul_down(x.lo(), y.lo()), mul_up(x.lo(), y.lo())};
  if ((x.is_point() && x.lo() == 0.0) || (y.is_point() && y.lo() == 0.0)) return {0.0, 0.0};
  const double a = x.lo() * y.lo();
  const double b = x.lo() * y.hi();
  const double c = x.hi() * y.lo();
  const double d = x.hi() * y.hi();
  return {detail::next_down(std::min(std::min(a, b), std::min(c, d))),
          detail::next_up(std::max(std::max(a, b), std::max(c, d)))};
}

inline RealInterval operator/(const RealInterval& x, const RealInterval& y) {
  if (y.contains_zero()) throw DivByZeroBox();
  if (x.is_point() && x.lo() == 0.0) return {0.0, 0.0};
  const double a = x.lo() / y.lo();
  const double b = x.lo() / y.hi();
  const double c = x.hi() / y.lo();
  const double d = x.hi() / y.hi();
  return {detail::next_down(std::min(std::min(a, b), std::min(c, d))),
          detail::next_up(std::max(std::max(a, b), std::max(c, d)))};
}

inline RealInterval& RealInterval::operator+=(const RealInterval& y) noexcept {
  return *this = *this + y;
}
inline RealInterval& RealInterval::operator-=(const RealInterval& y) noexcept {
  return *this = *this - y;
}
inline RealInterval& RealInterval::operator*=(const RealInterval& y) noexcept {
  return *this = *this * y;
}
inline RealInterval& RealInterval::operator/=(const RealInterval& y) { return *this = *this / y; }

inline RealInterval hull(const RealInterval& x, const RealInterval& y) noexcept {
  return {std::min(x.lo(), y.lo()), std::max(x.hi(), y.hi())};
}

/// x², tighter than x*x when x straddles zero.
inline RealInterval sqr(const RealInterval& x) noexcept {
  const double m = x.mag();
  const double n = x.mig();
  return {std::max(0.0, detail::next_down(n * n)), detail::next_up(m * m)};
}

inline RealInterval abs(const RealInterval& x) noexcept { return {x.mig(), x.mag()}; }

inline RealInterval sqrt(const RealInterval& x) {
  if (x.hi() < 0.0) throw DomainError("sqrt of a negative interval");
  const double lo = x.lo() <= 0.0 ? 0.0 : std::max(0.0, detail::next_down(std::sqrt(x.lo())));
  return {lo, detail::next_up(std::sqrt(x.hi()))};
}

inline RealInterval exp_real(const RealInterval& x) noexcept {
  if (x.lo() == 0.0 && x.hi() == 0.0) return {1.0, 1.0};
  return {std::max(0.0, detail::pad_down(std::exp(x.lo()))), detail::pad_up(std::exp(x.hi()))};
}

/// x^n for n ≥ 0 by repeated squaring.
inline RealInterval pow(RealInterval x, unsigned n) noexcept {
  RealInterval r = 1.0;
  while (n > 0) {
    if (n & 1u) r = r * x;
    n >>= 1u;
    if (n > 0) x = sqr(x);
  }
  return r;
}

inline RealInterval pi_interval() noexcept {
  // std::numbers::pi rounds below π.
  return {std::numbers::pi, detail::next_up(std::numbers::pi)};
}

inline RealInterval pi_squared() noexcept { return sqr(pi_interval()); }

namespace detail {

// Range of a periodic function over x given its sampled endpoint values and
// its extrema at (n + offset)·π: maxima for even n, minima for odd n.
inline RealInterval trig_range(const RealInterval& x, double f_lo, double f_hi, double offset) {
  if (!x.is_valid()) return {std::numeric_limits<double>::quiet_NaN(), 0.0};
  const RealInterval pi = pi_interval();
  if (x.hi() - x.lo() >= 2.0 * pi.lo()) return {-1.0, 1.0};
  double lo = std::max(-1.0, pad_down(std::min(f_lo, f_hi)));
  double hi = std::min(1.0, pad_up(std::max(f_lo, f_hi)));
  const auto n_first = static_cast<long long>(std::floor(x.lo() / pi.hi() - offset)) - 1;
  const auto n_last = static_cast<long long>(std::ceil(x.hi() / pi.lo() - offset)) + 1;
  for (long long n = n_first; n <= n_last; ++n) {
    const RealInterval c = (static_cast<double>(n) + offset) * pi;
    if (!c.intersects(x)) continue;
    if (n % 2 == 0) {
      hi = 1.0;
    } else {
      lo = -1.0;
    }
  }
  return {lo, hi};
}

}  // namespace detail

inline RealInterval cos(const RealInterval& x) {
  return detail::trig_range(x, std::cos(x.lo()), std::cos(x.hi()), 0.0);
}

inline RealInterval sin(const RealInterval& x) {
  return detail::trig_range(x, std::sin(x.lo()), std::sin(x.hi()), 0.5);
}

inline std::ostream& operator<<(std::ostream& os, const RealInterval& x) {
  return os << '[' << x.lo() << ", " << x.hi() << ']';
}

// ---------------------------------------------------------------------------

/// Rectangular complex interval re × i·im.
struct ComplexBox {
  RealInterval re;
  RealInterval im;

  constexpr ComplexBox() noexcept = default;
  // NOLINTNEXTLINE(google-explicit-constructor)
  constexpr ComplexBox(RealInterval r, RealInterval i = 0.0) noexcept : re(r), im(i) {}
  // NOLINTNEXTLINE(google-explicit-constructor)
  constexpr ComplexBox(std::complex<double> z) noexcept : re(z.real()), im(z.imag()) {}
  constexpr ComplexBox(double r, double i) noexcept : re(r), im(i) {}

  bool is_valid() const noexcept { return re.is_valid() && im.is_valid(); }
  std::complex<double> mid() const noexcept { return {re.mid(), im.mid()}; }
  bool contains(std::complex<double> z) const noexcept {
    return re.contains(z.real()) && im.contains(z.imag());
  }
  bool contains(const ComplexBox& z) const noexcept {
    return re.contains(z.re) && im.contains(z.im);
  }
  bool contains_zero() const noexcept { return re.contains_zero() && im.contains_zero(); }

  ComplexBox operator-() const noexcept { return {-re, -im}; }
  ComplexBox& operator+=(const ComplexBox& y) noexcept;
  ComplexBox& operator-=(const ComplexBox& y) noexcept;
  ComplexBox& operator*=(const ComplexBox& y) noexcept;

  friend bool operator==(const ComplexBox&, const ComplexBox&) = default;
};

inline ComplexBox operator+(const ComplexBox& x, const ComplexBox& y) noexcept {
  return {x.re + y.re, x.im + y.im};
}
inline ComplexBox operator-(const ComplexBox& x, const ComplexBox& y) noexcept {
  return {x.re - y.re, x.im - y.im};
}
inline ComplexBox operator*(const ComplexBox& x, const ComplexBox& y) noexcept {
  return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
}
inline ComplexBox operator*(const RealInterval& s, const ComplexBox& z) noexcept {
  return {s * z.re, s * z.im};
}
inline ComplexBox operator*(const ComplexBox& z, const RealInterval& s) noexcept { return s * z; }

inline ComplexBox conj(const ComplexBox& z) noexcept { return {z.re, -z.im}; }

/// |z|² enclosure.
inline RealInterval norm_sq(const ComplexBox& z) noexcept { return sqr(z.re) + sqr(z.im); }

inline ComplexBox operator/(const ComplexBox& x, const ComplexBox& y) {
  if (y.contains_zero()) throw DivByZeroBox();
  const RealInterval d = norm_sq(y);
  const ComplexBox n = x * conj(y);
  return {n.re / d, n.im / d};
}
inline ComplexBox operator/(const ComplexBox& x, const RealInterval& s) {
  if (s.contains_zero()) throw DivByZeroBox();
  return {x.re / s, x.im / s};
}

inline ComplexBox& ComplexBox::operator+=(const ComplexBox& y) noexcept { return *this = *this + y; }
inline ComplexBox& ComplexBox::operator-=(const ComplexBox& y) noexcept { return *this = *this - y; }
inline ComplexBox& ComplexBox::operator*=(const ComplexBox& y) noexcept { return *this = *this * y; }

/// Upper bound of |z| over the box.
inline double abs_upper(const ComplexBox& z) noexcept {
  const double a = z.re.mag();
  const double b = z.im.mag();
  // A box on an axis has modulus exactly its other magnitude.
  if (a == 0.0 || b == 0.0) return a + b;
  return detail::next_up(std::sqrt(detail::next_up(detail::next_up(a * a) + detail::next_up(b * b))));
}

/// Lower bound of |z| over the box; zero when the box meets the origin.
inline double abs_lower(const ComplexBox& z) noexcept {
  const double a = z.re.mig();
  const double b = z.im.mig();
  if (a == 0.0 && b == 0.0) return 0.0;
  const double s = detail::next_down(detail::next_down(a * a) + detail::next_down(b * b));
  return std::max(0.0, detail::next_down(std::sqrt(std::max(0.0, s))));
}

inline ComplexBox hull(const ComplexBox& x, const ComplexBox& y) noexcept {
  return {hull(x.re, y.re), hull(x.im, y.im)};
}

/// Box grown by r in both real and imaginary directions (covers the disc of radius r).
inline ComplexBox inflate(const ComplexBox& z, double r) noexcept {
  return {z.re + RealInterval::ball(r), z.im + RealInterval::ball(r)};
}

inline ComplexBox unit_phase(const RealInterval& theta) { return {cos(theta), sin(theta)}; }

/// exp of a complex box.
inline ComplexBox exp(const ComplexBox& z) { return exp_real(z.re) * unit_phase(z.im); }

/// Argument enclosure; the box must stay off the closed negative real axis.
inline RealInterval arg(const ComplexBox& z) {
  if (z.re.lo() <= 0.0 && z.im.contains_zero()) {
    throw DomainError("arg: box meets the branch cut");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double x : {z.re.lo(), z.re.hi()}) {
    for (double y : {z.im.lo(), z.im.hi()}) {
      const double a = std::atan2(y, x);
      lo = std::min(lo, a);
      hi = std::max(hi, a);
    }
  }
  return {detail::pad_down(lo), detail::pad_up(hi)};
}

inline std::ostream& operator<<(std::ostream& os, const ComplexBox& z) {
  return os << '(' << z.re << " + i" << z.im << ')';
}

// ---------------------------------------------------------------------------

/// Rotation angle θ of the equation together with a rigorous box for e^{iθ}.
/// The named angles carry exact or near-exact phase boxes (e^{iπ/2} = i exactly).
struct Angle {
  std::string name;
  RealInterval theta;
  ComplexBox phase;

  static Angle zero() { return {"0", 0.0, ComplexBox(1.0, 0.0)}; }
  static Angle quarter_pi() {
    const RealInterval s = sqrt(RealInterval(0.5));
    return {"pi4", pi_interval() * RealInterval(0.25), ComplexBox(s, s)};
  }
  static Angle half_pi() { return {"pi2", pi_interval() * RealInterval(0.5), ComplexBox(0.0, 1.0)}; }
  /// Named by its round-trip decimal form, so parse(name) gives the same angle.
  static Angle radians(double t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", t);
    return {buf, t, unit_phase(t)};
  }

  /// "0", "pi4", "pi2" or a decimal number of radians.
  static Angle parse(const std::string& s) {
    if (s == "0") return zero();
    if (s == "pi4") return quarter_pi();
    if (s == "pi2") return half_pi();
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ConfigError("unrecognized angle '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("unrecognized angle '" + s + "'");
    return radians(v);
  }

  double value() const noexcept { return theta.mid(); }
};

}  // namespace cap
