#pragma once

// Nontrivial equilibrium of u_t = e^{i theta}(u_xx + u^2) and its unstable
// eigenpair: floating-point Newton and eigen-solves, then radii-polynomial
// validation in l1_nu.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/linalg.hpp"
#include "cap/radii.hpp"
#include "cap/seqspace.hpp"

namespace cap {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;

// ---------------------------------------------------------------------------
// Floating-point helpers on symmetric modes 0..N

namespace fp {

inline double four_pi2_k2(long k) {
  return 4.0 * std::numbers::pi * std::numbers::pi * static_cast<double>(k) * static_cast<double>(k);
}

/// Symmetric convolution truncated to modes 0..n.
inline CVec convolve(const CVec& a, const CVec& b, Eigen::Index n) {
  const long Na = static_cast<long>(a.size()) - 1;
  const long Nb = static_cast<long>(b.size()) - 1;
  CVec c = CVec::Zero(n + 1);
  for (long k = 0; k <= n; ++k) {
    cplx s = 0.0;
    for (long j = std::max(-Na, k - Nb); j <= std::min(Na, k + Nb); ++j) s += a(std::abs(j)) * b(std::abs(k - j));
    c(k) = s;
  }
  return c;
}

/// L a + a*a on modes 0..N (no phase).
inline CVec g(const CVec& a) {
  const Eigen::Index N = a.size() - 1;
  CVec c = convolve(a, a, N);
  for (Eigen::Index k = 0; k <= N; ++k) c(k) -= four_pi2_k2(k) * a(k);
  return c;
}

/// Matrix of h -> v*h on symmetric modes 0..n.
inline Eigen::MatrixXcd conv_matrix(const CVec& v, Eigen::Index n) {
  const Eigen::Index Nv = v.size() - 1;
  auto at = [&](Eigen::Index i) { return i <= Nv ? v(i) : cplx(0.0); };
  Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n + 1, n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) {
    C(k, 0) = at(k);
    for (Eigen::Index j = 1; j <= n; ++j) C(k, j) = at(std::abs(k - j)) + at(k + j);
  }
  return C;
}

/// Dg(a) = L + 2 C(a) without phase.
inline Eigen::MatrixXcd jacobian(const CVec& a) {
  const Eigen::Index N = a.size() - 1;
  Eigen::MatrixXcd J = 2.0 * conv_matrix(a, N);
  for (Eigen::Index k = 0; k <= N; ++k) J(k, k) -= four_pi2_k2(k);
  return J;
}

inline double sym_norm(const CVec& a, double nu = 1.0) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) s += (k == 0 ? 1.0 : 2.0 * std::pow(nu, static_cast<double>(k))) * std::abs(a(k));
  return s;
}

inline CVec to_vec(const SymSeq& a) {
  CVec v(static_cast<Eigen::Index>(a.coeffs.size()));
  for (std::size_t k = 0; k < a.coeffs.size(); ++k) v(static_cast<Eigen::Index>(k)) = a[k].mid();
  return v;
}

inline SymSeq to_seq(const CVec& v, double nu = 1.0) {
  SymSeq s(static_cast<std::size_t>(v.size() - 1), nu);
  for (Eigen::Index k = 0; k < v.size(); ++k) s[static_cast<std::size_t>(k)] = ComplexBox(v(k));
  return s;
}

inline CVec resized(const CVec& v, Eigen::Index n) {
  CVec r = CVec::Zero(n + 1);
  const Eigen::Index m = std::min<Eigen::Index>(n + 1, v.size());
  r.head(m) = v.head(m);
  return r;
}

}  // namespace fp

// ---------------------------------------------------------------------------
// Interval helpers

/// Box matrix of h -> v*h on symmetric modes 0..n.
inline BoxMatrix conv_matrix(const SymSeq& v, std::size_t n) {
  BoxMatrix C(n + 1, n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    C(k, 0) = v.at_or_zero(k);
    for (std::size_t j = 1; j <= n; ++j) {
      const std::size_t d = k > j ? k - j : j - k;
      C(k, j) = v.at_or_zero(d) + v.at_or_zero(k + j);
    }
  }
  return C;
}

/// Enclosures of the symmetric weights omega_0..omega_n.
inline std::vector<RealInterval> sym_weights(double nu, std::size_t n) {
  std::vector<RealInterval> w(n + 1);
  for (std::size_t k = 0; k <= n; ++k) w[k] = sym_weight(nu, k);
  return w;
}

/// V_k = max_{n<j<=2n} (|v_{j-k}| + |v_{j+k}|) / omega_j: the coupling of a
/// unit tail column j > n of h -> v*h into row k <= n.
inline std::vector<double> tail_coupling(const SymSeq& v, std::size_t n) {
  std::vector<double> V(n + 1, 0.0);
  const std::size_t Nv = v.order();
  for (std::size_t k = 0; k <= n; ++k) {
    double best = 0.0;
    for (std::size_t j = n + 1; j <= n + Nv + 1 && j <= k + Nv; ++j) {
      const double s = add_up(abs_upper(v.at_or_zero(j - k)), abs_upper(v.at_or_zero(j + k)));
      best = std::max(best, div_up(s, sym_weight(v.nu, j).lo()));
    }
    V[k] = best;
  }
  return V;
}

// ---------------------------------------------------------------------------
// Seed

/// Fourier coefficients of -6 wp(x + tau/2) for the lattice with periods 1
/// and tau (a stationary solution of u_xx + u^2 = 0 when g2 vanishes).
inline CVec lattice_seed(cplx tau, std::size_t N) {
  const double pi = std::numbers::pi;
  const cplx I(0.0, 1.0);
  const cplx q = std::exp(2.0 * pi * I * tau);
  const cplx qh = std::exp(pi * I * tau);
  CVec a = CVec::Zero(static_cast<Eigen::Index>(N + 1));
  for (std::size_t k = 1; k <= N; ++k) {
    const double kk = static_cast<double>(k);
    a(static_cast<Eigen::Index>(k)) = 24.0 * pi * pi * kk * std::pow(qh, kk) / (1.0 - std::pow(q, kk));
  }
  cplx s = 0.0;
  for (int n = 1; n < 80; ++n) {
    const cplx qn = std::pow(q, n);
    s += qn / ((1.0 - qn) * (1.0 - qn));
  }
  a(0) = 24.0 * pi * pi * (1.0 / 12.0 - 2.0 * s);
  return a;
}

/// Seed for u_1: the equianharmonic lattice tau = e^{i pi/3}.
inline SymSeq u1_seed(std::size_t N, double nu = 1.0) {
  return fp::to_seq(lattice_seed(std::exp(cplx(0.0, std::numbers::pi / 3.0)), N), nu);
}

/// Seed for u_2: tau = 1/2 + i sqrt(3)/6.
inline SymSeq u2_seed(std::size_t N, double nu = 1.0) {
  return fp::to_seq(lattice_seed(cplx(0.5, std::sqrt(3.0) / 6.0), N), nu);
}

// ---------------------------------------------------------------------------
// Newton

/// Newton's method for the truncated equation L a + a*a = 0 on the guess's modes.
inline SymSeq newton_equilibrium(const SymSeq& guess, int max_iter = 50, double tol = 1e-12) {
  CVec a = fp::to_vec(guess);
  for (int it = 0; it <= max_iter; ++it) {
    if (!a.allFinite()) throw NewtonFailed("Newton iterate is not finite");
    const CVec r = fp::g(a);
    const double res = fp::sym_norm(r, guess.nu);
    if (res < tol) return fp::to_seq(a, guess.nu);
    if (it == max_iter) break;
    const CVec step = fp::jacobian(a).fullPivLu().solve(r);
    if (!step.allFinite()) throw NewtonFailed("Newton step is not finite");
    a -= step;
    // Stagnation at rounding level counts as convergence once the residual is small.
    if (fp::sym_norm(step) <= 1e-15 * (1.0 + fp::sym_norm(a))) {
      const double res2 = fp::sym_norm(fp::g(a), guess.nu);
      if (res2 < 1e3 * tol * (1.0 + fp::sym_norm(a))) return fp::to_seq(a, guess.nu);
    }
  }
  throw NewtonFailed("Newton did not converge");
}

// ---------------------------------------------------------------------------
// Equilibrium validation

struct EquilibriumCertificate {
  SymSeq a_tilde;  // midpoint approximation, zero tail
  double r_eq = 0.0;
  double nu = 1.0;
  RadiiBounds bounds;
  double residual = 0.0;  // norm bound of g(a_tilde)

  /// Ball containing the true equilibrium.
  SymSeq enclosure() const {
    SymSeq s = a_tilde;
    s.tail = add_up(s.tail, r_eq);
    return s;
  }
};

/// Radii-polynomial bounds for g(a) = L a + a*a = 0 around a_bar (midpoints).
inline RadiiBounds equilibrium_bounds(const SymSeq& a_bar, double* residual = nullptr) {
  const SymSeq a = midpoint(a_bar);
  const std::size_t N = a.order();
  const double nu = a.nu;
  const auto w = sym_weights(nu, N);

  BoxMatrix DF = conv_matrix(a, N);
  for (auto& x : DF.v) x = RealInterval(2.0) * x;
  for (std::size_t k = 0; k <= N; ++k) DF(k, k) += laplace_multiplier(static_cast<long>(k));

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(mid(DF));
  if (!lu.isInvertible()) throw ValidationFailed("SingularApproxInverse", "truncated Jacobian is singular");
  const Eigen::MatrixXcd A = lu.inverse();
  if (!A.allFinite()) throw ValidationFailed("SingularApproxInverse", "approximate inverse is not finite");

  RadiiBounds b;
  const SymSeq F = apply_g(a, ComplexBox(1.0, 0.0));
  if (residual) *residual = norm_upper(F);
  std::vector<ComplexBox> Ff(F.coeffs.begin(), F.coeffs.begin() + static_cast<long>(N + 1));
  double y = weighted_norm_upper(multiply(A, Ff), sym_weights_upper(nu, N));
  for (std::size_t k = N + 1; k <= F.order(); ++k) {
    const RealInterval lam = -laplace_multiplier(static_cast<long>(k));
    y = add_up(y, div_up(mul_up(sym_weight(nu, k).hi(), abs_upper(F[k])), lam.lo()));
  }
  b.Y0 = y;

  b.Z0 = op_norm_upper(identity_minus(multiply(A, DF)), w);

  const double tail_inv = div_up(1.0, (-laplace_multiplier(static_cast<long>(N + 1))).lo());
  std::vector<double> V = tail_coupling(a, N);
  for (auto& x : V) x = mul_up(2.0, x);
  const double z1a = weighted_norm_upper(abs_multiply_upper(A, V), sym_weights_upper(nu, N));
  b.Z1 = add_up(z1a, mul_up(mul_up(2.0, norm_upper(a)), tail_inv));

  const double normA = std::max(op_norm_upper(A, w), tail_inv);
  b.Z2 = mul_up(2.0, normA);
  return b;
}

inline EquilibriumCertificate validate_equilibrium(const SymSeq& a_bar) {
  EquilibriumCertificate c;
  c.a_tilde = midpoint(a_bar);
  c.nu = a_bar.nu;
  c.bounds = equilibrium_bounds(a_bar, &c.residual);
  c.r_eq = solve_radii(c.bounds);
  return c;
}

// ---------------------------------------------------------------------------
// Spectrum

struct EigenPair {
  cplx value;
  CVec vector;
};

/// Eigenpairs of e^{i theta} Dg(a) truncated to modes 0..n_modes, sorted by
/// decreasing real part.
inline std::vector<EigenPair> eig_finite(const SymSeq& a_tilde, double theta, std::size_t n_modes) {
  const CVec a = fp::resized(fp::to_vec(a_tilde), static_cast<Eigen::Index>(n_modes));
  const cplx phase = std::polar(1.0, theta);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(phase * fp::jacobian(a));
  std::vector<EigenPair> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back({es.eigenvalues()(i), es.eigenvectors().col(i)});
  std::stable_sort(out.begin(), out.end(), [](const EigenPair& x, const EigenPair& y) {
    return x.value.real() > y.value.real();
  });
  return out;
}

/// Eigenvector rescaled so its largest-modulus coefficient equals `target`.
inline CVec normalize_eigenvector(const CVec& v, cplx target, Eigen::Index* k_star = nullptr) {
  Eigen::Index k = 0;
  v.cwiseAbs().maxCoeff(&k);
  if (k_star) *k_star = k;
  if (std::abs(v(k)) == 0.0) return v;
  return v * (target / v(k));
}

/// Newton refinement of (lambda, b) for e^{i theta} Dg(a) with b_{k*} pinned.
inline std::pair<cplx, CVec> refine_eigenpair(const SymSeq& a_tilde, cplx phase, cplx lambda, CVec b,
                                              Eigen::Index k_star, int iters = 6) {
  const Eigen::Index N = b.size() - 1;
  const CVec a = fp::resized(fp::to_vec(a_tilde), N);
  const Eigen::MatrixXcd J = phase * fp::jacobian(a);
  for (int it = 0; it < iters; ++it) {
    const Eigen::Index n = N + 2;
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);
    CVec F(n);
    F(0) = 0.0;
    D(0, 1 + k_star) = 1.0;
    F.tail(N + 1) = J * b - lambda * b;
    D.block(1, 0, N + 1, 1) = -b;
    D.block(1, 1, N + 1, N + 1) = J - lambda * Eigen::MatrixXcd::Identity(N + 1, N + 1);
    const CVec d = D.fullPivLu().solve(F);
    if (!d.allFinite()) break;
    lambda -= d(0);
    b -= d.tail(N + 1);
  }
  return {lambda, b};
}

struct EigenCertificate {
  ComplexBox lambda_tilde;
  cplx lambda_bar;
  SymSeq b_tilde;  // midpoint approximation, zero tail
  double r_eig = 0.0;
  std::size_t k_star = 0;
  cplx target;
  RadiiBounds bounds;
  std::string theta_name;

  SymSeq enclosure() const {
    SymSeq s = b_tilde;
    s.tail = add_up(s.tail, r_eig);
    return s;
  }
};

/// Validates (lambda, b) with e^{i theta}(L b + 2 a*b) = lambda b and
/// b_{k*} = b_bar_{k*} around the equilibrium ball of `eq`. The eigenvector's
/// order fixes the truncation; equilibrium modes beyond it join r_eq.
inline EigenCertificate validate_eigenpair(const EquilibriumCertificate& eq, cplx lambda_bar, const SymSeq& b_in,
                                           const Angle& theta, std::optional<std::size_t> k_star_opt = {}) {
  const SymSeq b = midpoint(b_in);
  const std::size_t N = b.order();
  const double nu = b.nu;
  if (coeff_norm_upper(b) == 0.0) throw ValidationFailed("normalization", "eigenvector is zero");

  const SymSeq a_cut = truncate(eq.a_tilde, N);
  const SymSeq a = midpoint(a_cut);
  const double r_eq = add_up(eq.r_eq, a_cut.tail);

  std::size_t k_star = 0;
  if (k_star_opt) {
    k_star = *k_star_opt;
  } else {
    double best = -1.0;
    for (std::size_t k = 0; k <= N; ++k) {
      const double m = std::abs(b[k].mid());
      if (m > best) {
        best = m;
        k_star = k;
      }
    }
  }

  const ComplexBox phase = theta.phase;
  const ComplexBox mu = lambda_bar;
  const std::size_t n = N + 2;
  std::vector<RealInterval> w(n);
  w[0] = 1.0;
  for (std::size_t k = 0; k <= N; ++k) w[1 + k] = sym_weight(nu, k);
  std::vector<double> wu(n);
  for (std::size_t i = 0; i < n; ++i) wu[i] = w[i].hi();

  BoxMatrix C = conv_matrix(a, N);
  BoxMatrix DF(n, n);
  DF(0, 1 + k_star) = ComplexBox(1.0, 0.0);
  for (std::size_t k = 0; k <= N; ++k) {
    DF(1 + k, 0) = -b[k];
    for (std::size_t j = 0; j <= N; ++j) {
      ComplexBox x = RealInterval(2.0) * C(k, j);
      if (j == k) x += ComplexBox(laplace_multiplier(static_cast<long>(k)));
      x = phase * x;
      if (j == k) x -= mu;
      DF(1 + k, 1 + j) = x;
    }
  }

  Eigen::FullPivLU<Eigen::MatrixXcd> lu(mid(DF));
  if (!lu.isInvertible()) throw ValidationFailed("SingularApproxInverse", "eigen Jacobian is singular");
  const Eigen::MatrixXcd A = lu.inverse();
  if (!A.allFinite()) throw ValidationFailed("SingularApproxInverse", "approximate inverse is not finite");

  // F(x_bar) with e^{i theta}(L b + 2 a*b) - mu b on modes 0..2N.
  SymSeq ab = convolve(a, b);
  SymSeq Fe(2 * N, nu);
  for (std::size_t k = 0; k <= 2 * N; ++k) {
    ComplexBox x = RealInterval(2.0) * ab.at_or_zero(k);
    if (k <= N) x += laplace_multiplier(static_cast<long>(k)) * b[k];
    x = phase * x;
    if (k <= N) x -= mu * b[k];
    Fe[k] = x;
  }
  std::vector<ComplexBox> Ff(n);
  Ff[0] = b[k_star] - b[k_star];
  for (std::size_t k = 0; k <= N; ++k) Ff[1 + k] = Fe[k];

  const double mu_abs = abs_upper(mu);
  const RealInterval phase_low = abs_lower(phase);
  auto tail_lambda_lower = [&](std::size_t k) {
    return (phase_low * -laplace_multiplier(static_cast<long>(k)) - RealInterval(mu_abs)).lo();
  };
  const double lam_min = tail_lambda_lower(N + 1);
  if (!(lam_min > 0.0)) throw ValidationFailed("Z1", "truncation too small for the tail operator");
  const double tail_inv = div_up(1.0, lam_min);
  const double phase_abs = abs_upper(phase);

  const double normA = std::max(op_norm_upper(A, w), tail_inv);
  const double b_norm = norm_upper(b);

  RadiiBounds bd;
  double y = weighted_norm_upper(multiply(A, Ff), wu);
  for (std::size_t k = N + 1; k <= 2 * N; ++k) {
    y = add_up(y, div_up(mul_up(sym_weight(nu, k).hi(), abs_upper(Fe[k])), tail_lambda_lower(k)));
  }
  const double eq_coupling = mul_up(mul_up(2.0, phase_abs), r_eq);
  y = add_up(y, mul_up(mul_up(normA, eq_coupling), b_norm));
  bd.Y0 = y;

  bd.Z0 = op_norm_upper(identity_minus(multiply(A, DF)), w);

  std::vector<double> V(n, 0.0);
  const auto Va = tail_coupling(a, N);
  for (std::size_t k = 0; k <= N; ++k) V[1 + k] = mul_up(mul_up(2.0, phase_abs), Va[k]);
  double z1 = weighted_norm_upper(abs_multiply_upper(A, V), wu);
  z1 = add_up(z1, mul_up(mul_up(mul_up(2.0, phase_abs), norm_upper(a)), tail_inv));
  z1 = add_up(z1, mul_up(normA, eq_coupling));
  bd.Z1 = z1;
  bd.Z2 = normA;

  EigenCertificate c;
  c.bounds = bd;
  c.r_eig = solve_radii(bd);
  c.lambda_bar = lambda_bar;
  c.lambda_tilde = inflate(mu, c.r_eig);
  c.b_tilde = b;
  c.k_star = k_star;
  c.target = b[k_star].mid();
  c.theta_name = theta.name;
  return c;
}

// ---------------------------------------------------------------------------
// Morse index

struct MorseIndex {
  bool determinate = true;
  int count = 0;
};

/// Counts Re(e^{i theta} lambda) > 0 over enclosures of theta = 0 eigenvalues.
inline MorseIndex morse_index(const Angle& theta, const std::vector<ComplexBox>& lambdas) {
  MorseIndex mi;
  for (const auto& l : lambdas) {
    const RealInterval re = (theta.phase * l).re;
    if (re.lo() > 0.0) {
      ++mi.count;
    } else if (re.hi() >= 0.0) {
      mi.determinate = false;
    }
  }
  return mi;
}

/// theta* = pi/2 + arg(lambda) for the lower half-plane eigenvalue lambda;
/// beyond it the conjugate partner has Re(e^{i theta} conj(lambda)) < 0.
inline RealInterval morse_boundary(const ComplexBox& lambda_lower) {
  return pi_interval() * RealInterval(0.5) + arg(lambda_lower);
}

}  // namespace cap
