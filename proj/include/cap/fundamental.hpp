#pragma once

// Sharp bounds for the evolution operator U(t, s) of the linearization
//   b' = e^{i theta}(L b + 2 a_bar*b)
// along a polynomial-in-time approximation a_bar on a step J.
//
// Modes split into a finite block F = {|k| <= K'} and the tail T = {|k| > K'}.
// The block's fundamental matrix U_F is approximated by a Chebyshev matrix
// polynomial and validated through its defect. The tail is controlled by the
// diagonal semigroup, which decays at rate mu >= 4 pi^2 (K'+1)^2 Re e^{i theta}
// - 2 sup Re(e^{i theta} a_bar_0). Cross-couplings F <-> T are closed with a
// 2x2 comparison system in (sup |b_F|, sup |b_T|).
//
// Besides the operator norms, a step yields a floating-point reference matrix
// M on F and bounds of the blocks of U(t_b, t_a) - diag(M, 0):
//   |P_F U P_F - M| <= alpha, |P_F U P_T| <= beta,
//   |P_T U P_F| <= gamma,     |P_T U P_T| <= delta.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/seqspace.hpp"

namespace cap {

/// Chebyshev time series of a two-sided sequence: series[m] multiplies T_m(s).
using TimeSeries = std::vector<BiSeq>;

/// Upper bound of sup_s |c(s)| for each mode of a time series.
inline std::vector<double> mode_sup(const TimeSeries& C) {
  std::vector<double> s(C[0].coeffs.size(), 0.0);
  for (const auto& c : C) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = add_up(s[i], abs_upper(c.coeffs[i]));
  }
  return s;
}

namespace detail {

inline double fb_weight(double nu, long k) { return nu_power(nu, static_cast<std::size_t>(std::abs(k))).hi(); }
inline double fb_weight_lo(double nu, long k) { return nu_power(nu, static_cast<std::size_t>(std::abs(k))).lo(); }

/// Entrywise factor bounding the rounding error of a complex inner product of
/// length n relative to |a|^T|b|, in any summation order, with slack.
inline double dot_gamma(std::size_t n) {
  const double k = 4.0 * (static_cast<double>(n) + 2.0) * 0x1p-53;
  return k / (1.0 - k) * (1.0 + 1e-6);
}

/// C = fl(A B) and R >= |A B - C| entrywise.
inline void bounded_product(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B, Eigen::MatrixXcd& C,
                            Eigen::MatrixXd& R) {
  C.noalias() = A * B;
  R.noalias() = A.cwiseAbs() * B.cwiseAbs();
  R *= dot_gamma(static_cast<std::size_t>(A.cols()));
  R.array() += 1e-300 * static_cast<double>(A.cols());  // underflow guard
}

/// Weighted l1 column norm bound max_j sum_i w_i / w_j (|X_ij| + R_ij) for a
/// square block on modes -Kf..Kf.
inline double block_norm(const Eigen::MatrixXcd& X, const Eigen::MatrixXd* R, double nu) {
  const long n = X.rows();
  const long Kf = n / 2;
  double best = 0.0;
  for (long j = 0; j < n; ++j) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
      double a = abs_upper(ComplexBox(X(i, j)));
      if (R) a = add_up(a, (*R)(i, j));
      if (a != 0.0) s = add_up(s, nu == 1.0 ? a : mul_up(fb_weight(nu, i - Kf), a));
    }
    best = std::max(best, nu == 1.0 ? s : div_up(s, fb_weight_lo(nu, j - Kf)));
  }
  return best;
}

/// Coupling part 2 phase C(a(s)) of A_F(s) on |k| <= Kf, with a(s) the
/// midpoint series evaluated by Clenshaw.
inline Eigen::MatrixXcd block_matrix(const TimeSeries& C, std::complex<double> phase, long Kf, double s) {
  const long K = static_cast<long>(C[0].order());
  const long n = 2 * Kf + 1;
  std::vector<std::complex<double>> a(static_cast<std::size_t>(2 * K + 1), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::complex<double> b1 = 0.0, b2 = 0.0;
    for (std::size_t m = C.size(); m-- > 1;) {
      const std::complex<double> b0 = 2.0 * s * b1 - b2 + C[m].coeffs[i].mid();
      b2 = b1;
      b1 = b0;
    }
    a[i] = s * b1 - b2 + C[0].coeffs[i].mid();
  }
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
  for (long i = -Kf; i <= Kf; ++i) {
    for (long j = -Kf; j <= Kf; ++j) {
      const long d = i - j;
      if (std::abs(d) <= K) A(i + Kf, j + Kf) = 2.0 * phase * a[static_cast<std::size_t>(d + K)];
    }
  }
  return A;
}

}  // namespace detail

struct FundamentalBound {
  std::size_t K_fin = 0;
  std::size_t p = 0;       // Chebyshev degree of the approximate fundamental matrix
  double h = 0.0;          // upper bound of the interval length
  double ubar_sup = 0.0;   // sup_s |U_bar(s)|
  double ubar_end = 0.0;   // |U_bar(1)|
  double e0 = 0.0;         // |I - U_bar(-1)|
  double defect = 0.0;     // sup_t |U_bar' - A_F U_bar|
  double lognorm = 0.0;    // upper bound of the l1_nu log-norm of A_F
  double g = 1.0;          // exp(h max(0, lognorm))
  double err = 0.0;        // g (e0 + h defect) >= sup |U_F - U_bar|
  double ref_err = 0.0;    // |U_bar(1) - ref|
  double sup_norm = 0.0;   // >= sup_t |U_F(t, t_a)|
  double end_norm = 0.0;   // >= |U_F(t_b, t_a)|
  Eigen::MatrixXcd ref;    // floating-point U_bar(1)
};

/// Validates the fundamental matrix of the finite block on an interval of
/// length enclosed by `h`, with the linearization series C in s in [-1, 1].
inline FundamentalBound fundamental_bound(const TimeSeries& C, const Angle& theta, std::size_t K_fin,
                                          const RealInterval& h, std::size_t p) {
  using cd = std::complex<double>;
  const long K = static_cast<long>(C[0].order());
  const long Kf = static_cast<long>(K_fin);
  const long n = 2 * Kf + 1;
  const std::size_t q = C.size() - 1;
  const double nu = C[0].nu;
  const cd phase = theta.phase.mid();
  if (Kf > K) throw ConfigError("fundamental_bound: finite block exceeds the Galerkin order");
  if (p < 2) throw ConfigError("fundamental_bound: degree must be >= 2");

  FundamentalBound fb;
  fb.K_fin = K_fin;
  fb.p = p;
  fb.h = h.hi();
  const std::vector<double> asup = mode_sup(C);
  auto A_sup = [&](long d) { return std::abs(d) <= K ? asup[static_cast<std::size_t>(d + K)] : 0.0; };

  // Diagonal Lambda_k = phase (-4 pi^2 k^2), per unit t.
  std::vector<cd> lam(static_cast<std::size_t>(n));
  for (long k = -Kf; k <= Kf; ++k) {
    lam[static_cast<std::size_t>(k + Kf)] = phase * (-4.0 * std::numbers::pi * std::numbers::pi * double(k * k));
  }

  // Floating-point solve at the Lobatto nodes, integrating-factor RK4.
  std::vector<double> nodes(p + 1);
  for (std::size_t l = 0; l <= p; ++l) nodes[l] = -std::cos(std::numbers::pi * double(l) / double(p));
  nodes[0] = -1.0;
  nodes[p] = 1.0;
  double coup = 0.0;
  for (long d = -2 * Kf; d <= 2 * Kf; ++d) coup += A_sup(d);
  const double hm = h.mid();
  const double dt_target = 0.05 / std::max(1.0, 2.0 * coup);
  std::vector<Eigen::MatrixXcd> U(p + 1);
  U[0] = Eigen::MatrixXcd::Identity(n, n);
  Eigen::MatrixXcd Y = U[0];
  auto lmul = [&](const std::vector<cd>& e, const Eigen::MatrixXcd& X) {
    Eigen::MatrixXcd R = X;
    for (long i = 0; i < n; ++i) R.row(i) *= e[static_cast<std::size_t>(i)];
    return R;
  };
  for (std::size_t l = 0; l < p; ++l) {
    const double ds = nodes[l + 1] - nodes[l];
    const double dt_all = 0.5 * hm * ds;
    const int sub = std::max(2, static_cast<int>(std::ceil(dt_all / dt_target)));
    const double dt = dt_all / sub;
    std::vector<cd> Eh(static_cast<std::size_t>(n)), E(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) {
      Eh[static_cast<std::size_t>(i)] = std::exp(lam[static_cast<std::size_t>(i)] * (0.5 * dt));
      E[static_cast<std::size_t>(i)] = std::exp(lam[static_cast<std::size_t>(i)] * dt);
    }
    for (int j = 0; j < sub; ++j) {
      const double s0 = nodes[l] + ds * double(j) / sub;
      const double s1 = nodes[l] + ds * double(j + 1) / sub;
      const Eigen::MatrixXcd N0 = detail::block_matrix(C, phase, Kf, s0);
      const Eigen::MatrixXcd Nm = detail::block_matrix(C, phase, Kf, 0.5 * (s0 + s1));
      const Eigen::MatrixXcd N1 = detail::block_matrix(C, phase, Kf, s1);
      const Eigen::MatrixXcd k1 = N0 * Y;
      const Eigen::MatrixXcd k2 = Nm * lmul(Eh, Y + (0.5 * dt) * k1);
      const Eigen::MatrixXcd k3 = Nm * (lmul(Eh, Y) + (0.5 * dt) * k2);
      const Eigen::MatrixXcd k4 = N1 * (lmul(E, Y) + dt * lmul(Eh, k3));
      Y = lmul(E, Y) + (dt / 6.0) * (lmul(E, k1) + 2.0 * lmul(Eh, k2 + k3) + k4);
    }
    U[l + 1] = Y;
  }

  // Chebyshev coefficients V_m (DCT-I); these nodes run from s = -1 to 1.
  // From here on U_bar is by definition sum_m V_m T_m with these exact doubles.
  std::vector<Eigen::MatrixXcd> V(p + 1, Eigen::MatrixXcd::Zero(n, n));
  for (std::size_t m = 0; m <= p; ++m) {
    for (std::size_t l = 0; l <= p; ++l) {
      // T_m(-cos(pi l / p)) = (-1)^m cos(pi m l / p)
      double w = std::cos(std::numbers::pi * double(m * l % (2 * p)) / double(p));
      if (m % 2 == 1) w = -w;
      if (l == 0 || l == p) w *= 0.5;
      V[m] += w * U[l];
    }
    V[m] *= (m == 0 || m == p ? 1.0 : 2.0) / double(p);
  }
  U.clear();

  const std::size_t nn = static_cast<std::size_t>(n);
  auto idx = [nn](long i, long j) { return static_cast<std::size_t>(i) * nn + static_cast<std::size_t>(j); };
  std::vector<double> w_hi(nn), w_lo(nn);
  for (long i = 0; i < n; ++i) {
    w_hi[static_cast<std::size_t>(i)] = detail::fb_weight(nu, i - Kf);
    w_lo[static_cast<std::size_t>(i)] = detail::fb_weight_lo(nu, i - Kf);
  }
  auto col_norm = [&](const std::vector<double>& absval) {
    double best = 0.0;
    for (long j = 0; j < n; ++j) {
      double s = 0.0;
      for (long i = 0; i < n; ++i) s = add_up(s, mul_up(w_hi[static_cast<std::size_t>(i)], absval[idx(i, j)]));
      best = std::max(best, div_up(s, w_lo[static_cast<std::size_t>(j)]));
    }
    return best;
  };

  // sup |U_bar|, the reference U_bar(1) and |I - U_bar(-1)|.
  fb.ref = Eigen::MatrixXcd::Zero(n, n);
  for (std::size_t m = 0; m <= p; ++m) fb.ref += V[m];
  {
    std::vector<double> acc(nn * nn, 0.0), dev(nn * nn, 0.0), startv(nn * nn, 0.0), endv(nn * nn, 0.0);
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        ComplexBox e(0.0, 0.0), st(i == j ? 1.0 : 0.0, 0.0);
        double a = 0.0;
        for (std::size_t m = 0; m <= p; ++m) {
          const ComplexBox v(V[m](i, j));
          a = add_up(a, abs_upper(v));
          e += v;
          if (m % 2 == 0) st -= v; else st += v;
        }
        acc[idx(i, j)] = a;
        endv[idx(i, j)] = abs_upper(e);
        dev[idx(i, j)] = abs_upper(e - ComplexBox(fb.ref(i, j)));
        startv[idx(i, j)] = abs_upper(st);
      }
    }
    fb.ubar_sup = col_norm(acc);
    fb.ubar_end = col_norm(endv);
    fb.ref_err = col_norm(dev);
    fb.e0 = col_norm(startv);
  }

  // Defect D = (2 / h) dU_bar/ds - A_F U_bar, coefficients of degree <= q + p.
  // The coupling part 2 a(s) U_bar(s) is formed in floating point via
  // T_i T_j = (T_{i+j} + T_{|i-j|}) / 2, with the rounding bounded entrywise.
  {
    const std::size_t deg = q + p;
    std::vector<Eigen::MatrixXcd> Pf(deg + 1, Eigen::MatrixXcd::Zero(n, n));
    std::vector<Eigen::MatrixXd> Pabs(deg + 1, Eigen::MatrixXd::Zero(n, n));
    std::vector<Eigen::MatrixXd> Prad(deg + 1, Eigen::MatrixXd::Zero(n, n));
    std::vector<Eigen::MatrixXd> Vabs(p + 1);
    for (std::size_t m = 0; m <= p; ++m) Vabs[m] = V[m].cwiseAbs();
    Eigen::MatrixXcd Tm(n, n), Cp(n, n);
    Eigen::MatrixXd Tr(n, n), Ap(n, n);
    for (std::size_t m1 = 0; m1 <= q; ++m1) {
      bool has_rad = false;
      for (long i = 0; i < n; ++i) {
        for (long l = 0; l < n; ++l) {
          const long d = i - l;
          if (std::abs(d) > K) {
            Tm(i, l) = 0.0;
            Tr(i, l) = 0.0;
            continue;
          }
          const ComplexBox c = C[m1][d];
          const cd mid = c.mid();
          Tm(i, l) = 2.0 * mid;
          const double r = mul_up(2.0, abs_upper(c - ComplexBox(mid)));
          Tr(i, l) = r;
          has_rad = has_rad || r != 0.0;
        }
      }
      const Eigen::MatrixXd Tabs = Tm.cwiseAbs();
      for (std::size_t m2 = 0; m2 <= p; ++m2) {
        Cp.noalias() = Tm * V[m2];
        Ap.noalias() = Tabs * Vabs[m2];
        const std::size_t hi = m1 + m2;
        const std::size_t lo = m1 > m2 ? m1 - m2 : m2 - m1;
        Pf[hi] += 0.5 * Cp;
        Pf[lo] += 0.5 * Cp;
        Pabs[hi] += 0.5 * Ap;
        Pabs[lo] += 0.5 * Ap;
        if (has_rad) {
          const Eigen::MatrixXd Rr = Tr * Vabs[m2];
          Prad[hi] += 0.5 * Rr;
          Prad[lo] += 0.5 * Rr;
        }
      }
    }
    // Each Pf entry sums at most 2(q + 1) products of length n; Pabs and
    // Prad are sums of nonnegative terms, computed to within 1e-6 relative.
    const double gam = (detail::dot_gamma(nn) + detail::dot_gamma(2 * (q + 1))) * 1.01;
    std::vector<std::vector<ComplexBox>> Dv(p + 1, std::vector<ComplexBox>(nn * nn, ComplexBox(0.0, 0.0)));
    for (std::size_t m = p; m >= 1; --m) {
      for (std::size_t e = 0; e < nn * nn; ++e) {
        const long i = static_cast<long>(e / nn), j = static_cast<long>(e % nn);
        ComplexBox x = RealInterval(2.0 * double(m)) * ComplexBox(V[m](i, j));
        if (m + 1 <= p) x += Dv[m + 1][e];
        Dv[m - 1][e] = x;
      }
    }
    for (auto& x : Dv[0]) x = RealInterval(0.5) * x;
    const RealInterval ds_dt = RealInterval(2.0) / h;
    std::vector<double> acc(nn * nn, 0.0);
    for (std::size_t m = 0; m <= deg; ++m) {
      for (long i = 0; i < n; ++i) {
        const RealInterval lk = laplace_multiplier(i - Kf);
        for (long j = 0; j < n; ++j) {
          const double r = add_up(mul_up(gam, Pabs[m](i, j)), mul_up(1.000001, Prad[m](i, j)));
          ComplexBox x = inflate(ComplexBox(Pf[m](i, j)), add_up(r, 1e-300));
          if (m <= p) x += lk * ComplexBox(V[m](i, j));
          x = theta.phase * x;
          if (m <= p) x = ds_dt * Dv[m][idx(i, j)] - x;
          acc[idx(i, j)] = add_up(acc[idx(i, j)], abs_upper(x));
        }
      }
    }
    fb.defect = col_norm(acc);
  }

  // Log-norm of A_F over the interval: column j gives
  // sup Re(A_jj) + sum_{i != j} w_i / w_j |A_ij|.
  {
    double r0 = (theta.phase * C[0][0]).re.hi();
    for (std::size_t m = 1; m <= q; ++m) r0 = add_up(r0, abs_upper(theta.phase * C[m][0]));
    const double pmag = abs_upper(theta.phase);
    double best = -INFINITY;
    for (long j = -Kf; j <= Kf; ++j) {
      const RealInterval dj = (theta.phase * ComplexBox(laplace_multiplier(j), RealInterval(0.0))).re;
      double s = add_up(dj.hi(), mul_up(2.0, r0));
      double off = 0.0;
      for (long i = -Kf; i <= Kf; ++i) {
        if (i == j) continue;
        const double a = A_sup(i - j);
        if (a != 0.0) off = add_up(off, mul_up(detail::fb_weight(nu, i), a));
      }
      off = mul_up(mul_up(2.0, pmag), div_up(off, detail::fb_weight_lo(nu, j)));
      best = std::max(best, add_up(s, off));
    }
    fb.lognorm = best;
    fb.g = best <= 0.0 ? 1.0 : exp_real(RealInterval(fb.h) * RealInterval(best)).hi();
  }
  fb.err = mul_up(fb.g, add_up(fb.e0, mul_up(fb.h, fb.defect)));
  fb.sup_norm = std::max(1.0, add_up(fb.ubar_sup, fb.err));
  fb.end_norm = add_up(fb.ubar_end, fb.err);
  return fb;
}

// ---------------------------------------------------------------------------

struct RefinedOptions {
  std::size_t K_fin = 0;      // finite block |k| <= K_fin; 0 picks it from the step length
  double stiffness = 16.0;    // automatic K_fin keeps h 2 pi^2 K_fin^2 below this
  std::size_t p = 0;          // 0 picks the degree from the block stiffness
  std::size_t p_max = 96;
};

/// Scalars of the comparison system, recorded so that the combination can be
/// re-checked without the flow.
struct RefinedRecord {
  std::size_t K_fin = 0;
  std::size_t p = 0;
  double h = 0.0;
  double WF_sup = 0.0;   // sup_t |U_F(t, t_a)|
  double WF_end = 0.0;   // |U_F(t_b, t_a)|
  double ref_dev = 0.0;  // |U_F(t_b, t_a) - ref|
  double ref_norm = 0.0; // |ref|
  double G = 0.0;        // sup_{s <= t} |U_F(t, s)|
  double mu = 0.0;       // lower bound of the tail decay rate (may be negative)
  double c_ft = 0.0;     // |P_F (2 e^{i theta} a_bar * b_T)| <= c_ft |b_T|
  double c_tf = 0.0;     // |P_T (2 e^{i theta} a_bar * b_F)| <= c_tf |b_F|
  double c_tt = 0.0;     // |P_T (2 e^{i theta} (a_bar - a_bar_0) * b_T)| <= c_tt |b_T|
  double defect = 0.0;   // fundamental-matrix defect, for diagnostics
  bool closed = false;   // comparison system solvable
  double W_sup = INFINITY;
  double W_end = INFINITY;
  double W_all = INFINITY;
  double alpha = INFINITY;
  double beta = INFINITY;
  double gamma = INFINITY;
  double delta = INFINITY;
  Eigen::MatrixXcd ref;  // reference matrix on F (not serialized)
};

struct ComparisonBounds {
  bool closed = false;
  double W_sup = INFINITY;
  double W_end = INFINITY;
  double W_all = INFINITY;
  double alpha = INFINITY;
  double beta = INFINITY;
  double gamma = INFINITY;
  double delta = INFINITY;
};

/// Closes the comparison system
///   X <= WF x0 + G c_ft Z,   Y <= m y0 + I (c_tf X + c_tt Y),
///   Z <= I y0 + h I (c_tf X + c_tt Y)
/// with I >= sup_t int_{t_a}^t e^{-mu (t - u)} du and m >= sup e^{-mu (t - t_a)},
/// and returns max over x0 + y0 = 1 of X + Y, its endpoint analogue, and the
/// block bounds, where alpha = ref_dev + (F -> T -> F) feedback.
inline ComparisonBounds combine_refined(double h, double WF_sup, double WF_end, double G, double mu, double c_ft,
                                        double c_tf, double c_tt, double ref_dev = INFINITY) {
  ComparisonBounds out;
  const RealInterval H(h), M(mu);
  const RealInterval mh = M * H;
  // I = min(h max(1, e^{-mu h}), 1/mu if mu > 0); e_end = e^{-mu h}.
  const RealInterval e_end = exp_real(-mh);
  double I = mul_up(h, std::max(1.0, e_end.hi()));
  if (M.lo() > 0.0) I = std::min(I, (RealInterval(1.0) / M).hi());
  const double m = std::max(1.0, e_end.hi());
  const RealInterval Ii(I), Gi(G), cft(c_ft), ctf(c_tf), ctt(c_tt);
  struct Vertex {
    double Xe_coupling = 0.0, Ye = 0.0;
  };
  auto solve = [&](const RealInterval& WF, const RealInterval& Gx, double* sup_out, double* end_out,
                   const RealInterval* WFend, Vertex* verts) {
    // Unknowns X, Y. Substituting Z:
    // X <= WF x0 + Gx c_ft I y0 + Gx c_ft h I (c_tf X + c_tt Y)
    // Y <= m y0 + I (c_tf X + c_tt Y)
    const RealInterval M11 = Gx * cft * H * Ii * ctf;
    const RealInterval M12 = Gx * cft * H * Ii * ctt;
    const RealInterval M21 = Ii * ctf;
    const RealInterval M22 = Ii * ctt;
    const RealInterval a11 = RealInterval(1.0) - M11;
    const RealInterval a22 = RealInterval(1.0) - M22;
    const RealInterval det = a11 * a22 - M12 * M21;
    if (!(a11.lo() > 0.0 && a22.lo() > 0.0 && det.lo() > 0.0)) return false;
    double best_sup = 0.0, best_end = 0.0;
    for (int v = 0; v < 2; ++v) {
      const RealInterval x0(v == 0 ? 1.0 : 0.0), y0(v == 1 ? 1.0 : 0.0);
      const RealInterval r1 = WF * x0 + Gx * cft * Ii * y0;
      const RealInterval r2 = RealInterval(m) * y0;
      // (1 - M)^{-1} is entrywise nonnegative here; upper ends suffice.
      const RealInterval X = RealInterval((a22 * r1 + M12 * r2).hi()) / RealInterval(det.lo());
      const RealInterval Y = RealInterval((M21 * r1 + a11 * r2).hi()) / RealInterval(det.lo());
      const RealInterval Xu(X.hi()), Yu(Y.hi());
      best_sup = std::max(best_sup, (Xu + Yu).hi());
      if (end_out) {
        const RealInterval drive = ctf * Xu + ctt * Yu;
        const RealInterval Z = Ii * y0 + H * Ii * drive;
        const RealInterval Xc = Gx * cft * Z;
        const RealInterval Xe = *WFend * x0 + Xc;
        const RealInterval Ye = RealInterval(e_end.hi()) * y0 + Ii * drive;
        best_end = std::max(best_end, (Xe + Ye).hi());
        if (verts) verts[v] = {Xc.hi(), Ye.hi()};
      }
    }
    *sup_out = best_sup;
    if (end_out) *end_out = best_end;
    return true;
  };
  double s1 = INFINITY, e1 = INFINITY, s2 = INFINITY;
  Vertex verts[2];
  const RealInterval WFs(WF_sup), WFe(WF_end);
  if (!solve(WFs, Gi, &s1, &e1, &WFe, verts)) return out;
  if (!solve(Gi, Gi, &s2, nullptr, nullptr, nullptr)) return out;
  out.closed = true;
  out.W_sup = s1;
  out.W_end = e1;
  out.W_all = std::max(s2, s1);
  out.alpha = add_up(ref_dev, verts[0].Xe_coupling);
  out.gamma = verts[0].Ye;
  out.beta = verts[1].Xe_coupling;
  out.delta = verts[1].Ye;
  return out;
}

/// Block size used for a step of length h when none is fixed.
inline std::size_t auto_block(double h, std::size_t K, const RefinedOptions& opt) {
  if (opt.K_fin > 0) return std::min(opt.K_fin, K);
  const double kf = std::floor(std::sqrt(opt.stiffness / (2.0 * std::numbers::pi * std::numbers::pi * h)));
  return static_cast<std::size_t>(std::clamp(kf, 1.0, static_cast<double>(K)));
}

/// Refined evolution bounds for a step whose approximation has Chebyshev time
/// series C (degree q, two-sided order K) on an interval of length enclosed by h.
inline RefinedRecord refined_evolution(const TimeSeries& C, const Angle& theta, const RealInterval& h,
                                       const RefinedOptions& opt = {}) {
  RefinedRecord rec;
  const long K = static_cast<long>(C[0].order());
  const long Kf = static_cast<long>(auto_block(h.hi(), C[0].order(), opt));
  const double nu = C[0].nu;
  rec.K_fin = static_cast<std::size_t>(Kf);
  rec.h = h.hi();
  if (theta.phase.re.lo() < 0.0) throw ConfigError("refined_evolution: Re e^{i theta} must be >= 0");

  // Degree from stiffness: the fastest block mode moves by s_k = h 2 pi^2 Kf^2
  // per unit s; decay needs ~ sqrt(s_k) nodes, rotation ~ s_k.
  std::size_t p = opt.p;
  if (p == 0) {
    const double sk = 0.5 * h.hi() * 4.0 * std::numbers::pi * std::numbers::pi * double(Kf * Kf);
    const double rot = std::abs(theta.phase.im.mid()) * sk;
    p = static_cast<std::size_t>(
        std::clamp(std::ceil(12.0 + 2.0 * std::sqrt(20.0 * sk) + 1.3 * rot), 12.0, static_cast<double>(opt.p_max)));
  }
  rec.p = p;

  FundamentalBound main = fundamental_bound(C, theta, static_cast<std::size_t>(Kf), h, p);
  rec.WF_sup = main.sup_norm;
  rec.WF_end = main.end_norm;
  rec.defect = main.defect;
  rec.ref_dev = add_up(main.err, main.ref_err);
  rec.ref_norm = detail::block_norm(main.ref, nullptr, nu);
  rec.G = std::max(main.g, rec.WF_sup);
  rec.ref = std::move(main.ref);

  // Tail decay and couplings.
  const std::vector<double> asup = mode_sup(C);
  auto A_sup = [&](long d) { return std::abs(d) <= K ? asup[static_cast<std::size_t>(d + K)] : 0.0; };
  double r0 = (theta.phase * C[0][0]).re.hi();
  for (std::size_t m = 1; m < C.size(); ++m) r0 = add_up(r0, abs_upper(theta.phase * C[m][0]));
  const RealInterval k1 = RealInterval(static_cast<double>(Kf + 1));
  const RealInterval decay = RealInterval(4.0) * pi_squared() * k1 * k1 * RealInterval(theta.phase.re.lo());
  rec.mu = (decay - RealInterval(2.0) * RealInterval(r0)).lo();

  const double two_p = mul_up(2.0, abs_upper(theta.phase));
  double phin = 0.0;
  for (long d = -K; d <= K; ++d) {
    if (d != 0 && A_sup(d) != 0.0) phin = add_up(phin, mul_up(detail::fb_weight(nu, d), A_sup(d)));
  }
  rec.c_tt = mul_up(two_p, phin);
  double ctf = 0.0;
  for (long m = -Kf; m <= Kf; ++m) {
    double s = 0.0;
    for (long nn = -(K + Kf); nn <= K + Kf; ++nn) {
      if (std::abs(nn) <= Kf) continue;
      const double a = A_sup(nn - m);
      if (a != 0.0) s = add_up(s, mul_up(detail::fb_weight(nu, nn), a));
    }
    ctf = std::max(ctf, div_up(s, detail::fb_weight_lo(nu, m)));
  }
  rec.c_tf = mul_up(two_p, ctf);
  double cft = 0.0;
  for (long nn = -(K + Kf); nn <= K + Kf; ++nn) {
    if (std::abs(nn) <= Kf) continue;
    double s = 0.0;
    for (long m = -Kf; m <= Kf; ++m) {
      const double a = A_sup(m - nn);
      if (a != 0.0) s = add_up(s, mul_up(detail::fb_weight(nu, m), a));
    }
    cft = std::max(cft, div_up(s, detail::fb_weight_lo(nu, nn)));
  }
  rec.c_ft = mul_up(two_p, cft);

  const ComparisonBounds cb =
      combine_refined(rec.h, rec.WF_sup, rec.WF_end, rec.G, rec.mu, rec.c_ft, rec.c_tf, rec.c_tt, rec.ref_dev);
  rec.closed = cb.closed;
  rec.W_sup = cb.W_sup;
  rec.W_end = cb.W_end;
  rec.W_all = cb.W_all;
  rec.alpha = cb.alpha;
  rec.beta = cb.beta;
  rec.gamma = cb.gamma;
  rec.delta = cb.delta;
  return rec;
}

}  // namespace cap
