#pragma once

// Fourier-Taylor sequences p = (p_m)_{m>=0}, p_m in l1_nu (symmetric), with
// norm sum_m |p_m|_nu. `taylor_tail` is the radius of an X^nu ball around the
// stored grid (rows m > M and modes k > N included); `r0` is an additional
// validated radius carried by manifold certificates.

#include <algorithm>
#include <cstddef>
#include <vector>

#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/seqspace.hpp"

namespace cap {

struct FourierTaylor {
  double nu = 1.0;
  std::size_t N = 0;
  std::size_t M = 0;
  std::vector<ComplexBox> c;  // row-major in m
  double taylor_tail = 0.0;
  double r0 = 0.0;

  FourierTaylor() : c(1) {}
  FourierTaylor(std::size_t n, std::size_t m, double nu_) : nu(nu_), N(n), M(m), c((n + 1) * (m + 1)) {
    check_nu(nu_);
  }

  ComplexBox& at(std::size_t k, std::size_t m) { return c[m * (N + 1) + k]; }
  const ComplexBox& at(std::size_t k, std::size_t m) const { return c[m * (N + 1) + k]; }

  SymSeq row(std::size_t m) const {
    SymSeq s(N, nu);
    for (std::size_t k = 0; k <= N; ++k) s[k] = at(k, m);
    return s;
  }
  void set_row(std::size_t m, const SymSeq& s) {
    for (std::size_t k = 0; k <= N; ++k) at(k, m) = s.at_or_zero(k);
  }

  /// Total ball radius around the grid.
  double radius() const { return add_up(taylor_tail, r0); }
};

inline double row_norm_upper(const FourierTaylor& p, std::size_t m) {
  double s = 0.0;
  for (std::size_t k = 0; k <= p.N; ++k) {
    const double a = abs_upper(p.at(k, m));
    if (a != 0.0) s = add_up(s, mul_up(sym_weight(p.nu, k).hi(), a));
  }
  return s;
}

inline double grid_norm_upper(const FourierTaylor& p) {
  double s = 0.0;
  for (std::size_t m = 0; m <= p.M; ++m) s = add_up(s, row_norm_upper(p, m));
  return s;
}

inline double norm_upper(const FourierTaylor& p) { return add_up(grid_norm_upper(p), p.radius()); }

/// (p *_TF q)_m = sum_{l<=m} p_l * q_{m-l}, kept on the same grid. Modes
/// k > N and orders m > M of the exact product move into taylor_tail.
inline FourierTaylor tf_product(const FourierTaylor& p, const FourierTaylor& q) {
  if (p.N != q.N || p.M != q.M) throw ConfigError("tf_product: grid shapes differ");
  if (p.nu != q.nu) throw ConfigError("tf_product: sequence weights nu differ");
  const std::size_t N = p.N;
  const std::size_t M = p.M;
  FourierTaylor r(N, M, p.nu);
  std::vector<SymSeq> prow(M + 1), qrow(M + 1);
  for (std::size_t m = 0; m <= M; ++m) {
    prow[m] = p.row(m);
    qrow[m] = q.row(m);
  }
  double overflow = 0.0;
  for (std::size_t m = 0; m <= 2 * M; ++m) {
    SymSeq acc(2 * N, p.nu);
    bool any = false;
    for (std::size_t l = (m > M ? m - M : 0); l <= std::min(m, M); ++l) {
      acc = acc + convolve(prow[l], qrow[m - l]);
      any = true;
    }
    if (!any) continue;
    if (m <= M) {
      SymSeq cut = truncate(acc, N);
      r.set_row(m, cut);
      overflow = add_up(overflow, cut.tail);
    } else {
      overflow = add_up(overflow, norm_upper(acc));
    }
  }
  const double tp = p.radius();
  const double tq = q.radius();
  double t = overflow;
  if (tp > 0.0 || tq > 0.0) {
    t = add_up(t, detail::product_tail(grid_norm_upper(p), tp, grid_norm_upper(q), tq));
  }
  r.taylor_tail = t;
  return r;
}

namespace detail {
// Horner evaluation on the grid only.
inline SymSeq horner(const FourierTaylor& p, const ComplexBox& sigma) {
  SymSeq acc = p.row(p.M);
  for (std::size_t m = p.M; m-- > 0;) {
    SymSeq row = p.row(m);
    for (std::size_t k = 0; k <= p.N; ++k) row[k] += sigma * acc[k];
    acc = std::move(row);
  }
  return acc;
}
}  // namespace detail

/// Encloses P(sigma) for every sigma in the box, assuming |sigma| <= 1 holds
/// for the exact value (e.g. a unit-circle box). No domain check.
inline SymSeq eval_on_disc(const FourierTaylor& p, const ComplexBox& sigma) {
  SymSeq s = detail::horner(p, sigma);
  s.tail = p.radius();
  return s;
}

/// P(sigma) = sum_m p_m sigma^m for sigma in the closed unit disc.
inline SymSeq eval(const FourierTaylor& p, const ComplexBox& sigma) {
  if (abs_upper(sigma) > 1.0) throw DomainError("eval: sigma box leaves the closed unit disc");
  return eval_on_disc(p, sigma);
}

/// DP(sigma) = sum_m m p_m sigma^{m-1}. The ball part is bounded by the
/// Cauchy estimate radius / (1 - s)^2 with s = sup |sigma|.
inline SymSeq eval_derivative(const FourierTaylor& p, const ComplexBox& sigma) {
  const double s = abs_upper(sigma);
  const double rad = p.radius();
  if (s > 1.0 || (rad > 0.0 && s >= 1.0)) {
    throw DomainError("eval_derivative: sigma must satisfy |sigma| < 1");
  }
  SymSeq acc(p.N, p.nu);
  if (p.M >= 1) {
    for (std::size_t m = p.M; m >= 1; --m) {
      SymSeq row = p.row(m);
      const RealInterval mm = static_cast<double>(m);
      for (std::size_t k = 0; k <= p.N; ++k) row[k] = mm * row[k] + (m < p.M ? sigma * acc[k] : ComplexBox());
      acc = std::move(row);
    }
  }
  if (rad > 0.0) {
    const double gap = (RealInterval(1.0) - RealInterval(s)).lo();
    acc.tail = div_up(rad, mul_down(gap, gap));
  }
  return acc;
}

}  // namespace cap
