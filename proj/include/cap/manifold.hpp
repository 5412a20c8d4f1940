#pragma once

// Fourier-Taylor parameterization P(sigma) = sum_m p_m sigma^m of the strong
// unstable manifold of the equilibrium, with the invariance equation
// g(P(sigma)) = lambda sigma DP(sigma), P(0) = a, DP(0) = b.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "cap/equilibria.hpp"
#include "cap/errors.hpp"
#include "cap/interval.hpp"
#include "cap/linalg.hpp"
#include "cap/radii.hpp"
#include "cap/seqspace.hpp"
#include "cap/taylor_fourier.hpp"

namespace cap {

struct ManifoldCertificate {
  FourierTaylor p;  // grid p_bar with p.r0 validated
  ComplexBox lambda;
  std::string theta_name;
  double theta = 0.0;
  RadiiBounds bounds;
  double r_eq = 0.0;   // equilibrium radius used (after truncation)
  double r_eig = 0.0;  // eigenpair radius used
};

// ---------------------------------------------------------------------------

/// Homological equations (lambda m - e^{i theta}(L + 2 a*)) p_m =
/// e^{i theta} sum_{l=1}^{m-1} p_l * p_{m-l} for m = 2..M on modes 0..N.
inline FourierTaylor solve_homological(const EquilibriumCertificate& eq, const EigenCertificate& eig,
                                       const Angle& theta, std::size_t N, std::size_t M) {
  if (!(eig.lambda_tilde.re.lo() > 0.0)) {
    throw DomainError("solve_homological: eigenvalue is not provably unstable");
  }
  const double nu = eq.nu;
  const cplx phase = theta.phase.mid();
  const cplx lambda = eig.lambda_bar;
  const CVec a = fp::resized(fp::to_vec(eq.a_tilde), static_cast<Eigen::Index>(N));
  const CVec b = fp::resized(fp::to_vec(eig.b_tilde), static_cast<Eigen::Index>(N));
  const Eigen::MatrixXcd J = phase * fp::jacobian(a);
  const auto n = static_cast<Eigen::Index>(N);

  std::vector<CVec> rows(M + 1, CVec::Zero(n + 1));
  rows[0] = a;
  if (M >= 1) rows[1] = b;
  for (std::size_t m = 2; m <= M; ++m) {
    CVec rhs = CVec::Zero(n + 1);
    for (std::size_t l = 1; l < m; ++l) rhs += fp::convolve(rows[l], rows[m - l], n);
    rhs *= phase;
    if (rhs.isZero(0.0)) continue;
    const Eigen::MatrixXcd op = lambda * static_cast<double>(m) * Eigen::MatrixXcd::Identity(n + 1, n + 1) - J;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(op);
    if (!(lu.rcond() > 1e-13)) throw ResonanceError("homological operator is nearly singular at m = " + std::to_string(m));
    rows[m] = lu.solve(rhs);
  }
  FourierTaylor p(N, M, nu);
  for (std::size_t m = 0; m <= M; ++m)
    for (std::size_t k = 0; k <= N; ++k) p.at(k, m) = ComplexBox(rows[m](static_cast<Eigen::Index>(k)));
  return p;
}

// ---------------------------------------------------------------------------

namespace detail {

// C += A * D for a floating-point block A and a box block D.
inline void multiply_accumulate(BoxMatrix& C, const Eigen::MatrixXcd& A, const BoxMatrix& D) {
  const auto n = static_cast<std::size_t>(A.rows());
  const auto inner = static_cast<std::size_t>(A.cols());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < inner; ++l) {
      const cplx a = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      if (a == cplx(0.0, 0.0)) continue;
      ComplexBox* crow = &C.v[i * C.cols];
      const ComplexBox* drow = &D.v[l * D.cols];
      for (std::size_t j = 0; j < D.cols; ++j) accumulate(crow[j], a, drow[j]);
    }
  }
}

// All products (p *_TF p)_m for m = 0..2M on modes 0..2N.
inline std::vector<SymSeq> tf_square_rows(const std::vector<SymSeq>& rows) {
  const std::size_t M = rows.size() - 1;
  const std::size_t N = rows[0].order();
  std::vector<SymSeq> S(2 * M + 1, SymSeq(2 * N, rows[0].nu));
  for (std::size_t i = 0; i <= M; ++i) {
    for (std::size_t j = i; j <= M; ++j) {
      SymSeq c = convolve(rows[i], rows[j]);
      if (i != j) {
        for (auto& x : c.coeffs) x = RealInterval(2.0) * x;
      }
      S[i + j] = S[i + j] + c;
    }
  }
  return S;
}

}  // namespace detail

/// Lower bound of |lambda m + 4 e^{i theta} pi^2 k^2| over the tail index set
/// {m >= 2, k > N or m > M}. Requires Re(lambda conj(e^{i theta})) >= 0, which
/// makes the modulus increasing in m and k.
inline double manifold_tail_lower(const ComplexBox& lambda, const ComplexBox& phase, std::size_t N, std::size_t M) {
  if (!((lambda * conj(phase)).re.lo() >= 0.0)) {
    throw ValidationFailed("Z1", "tail operator is not monotone for this angle");
  }
  const RealInterval kk = -laplace_multiplier(static_cast<long>(N + 1));
  const double a = abs_lower(lambda * RealInterval(static_cast<double>(M + 1)));
  const double b = abs_lower(lambda * RealInterval(2.0) + phase * kk);
  return std::min(a, b);
}

/// Radii-polynomial validation of p_bar for the invariance equation.
inline ManifoldCertificate validate_manifold(const FourierTaylor& p_bar, const EquilibriumCertificate& eq,
                                             const EigenCertificate& eig, const Angle& theta) {
  const std::size_t N = p_bar.N;
  const std::size_t M = p_bar.M;
  const std::size_t B = N + 1;  // block size
  const std::size_t n = B * (M + 1);
  const double nu = p_bar.nu;
  const ComplexBox phase = theta.phase;
  const double phase_abs = abs_upper(phase);
  const ComplexBox lam = eig.lambda_tilde;
  const ComplexBox lam_bar = eig.lambda_bar;

  std::vector<SymSeq> rows(M + 1);
  for (std::size_t m = 0; m <= M; ++m) rows[m] = midpoint(p_bar.row(m));

  const SymSeq a_cut = truncate(eq.a_tilde, N);
  const SymSeq b_cut = truncate(eig.b_tilde, N);
  const double r_eq = add_up(add_up(eq.r_eq, a_cut.tail), coeff_norm_upper(a_cut - rows[0]));
  const double r_eig = M >= 1 ? add_up(add_up(eig.r_eig, b_cut.tail), coeff_norm_upper(b_cut - rows[1])) : 0.0;

  const auto wk = sym_weights(nu, N);
  std::vector<RealInterval> w(n);
  for (std::size_t m = 0; m <= M; ++m)
    for (std::size_t k = 0; k <= N; ++k) w[m * B + k] = wk[k];
  std::vector<double> wu(n);
  for (std::size_t i = 0; i < n; ++i) wu[i] = w[i].hi();

  // Jacobian blocks: diag[m] = D_{m,m}, conv[d] = -2 e^{i theta} C(p_d) (for d >= 1).
  std::vector<BoxMatrix> diag(M + 1), conv(M + 1);
  for (std::size_t d = 0; d <= M; ++d) {
    BoxMatrix C = conv_matrix(rows[d], N);
    for (auto& x : C.v) x = RealInterval(-2.0) * (phase * x);
    conv[d] = std::move(C);
  }
  for (std::size_t m = 0; m <= M; ++m) {
    if (m < 2) {
      diag[m] = BoxMatrix::identity(B);
      continue;
    }
    BoxMatrix D = conv[0];
    const ComplexBox lm = lam * RealInterval(static_cast<double>(m));
    for (std::size_t k = 0; k <= N; ++k) D(k, k) += lm - phase * laplace_multiplier(static_cast<long>(k));
    diag[m] = std::move(D);
  }
  auto block = [&](std::size_t i, std::size_t l) -> const BoxMatrix* {
    if (i == l) return &diag[i];
    if (i < 2 || i < l) return nullptr;
    return &conv[i - l];
  };

  Eigen::MatrixXcd DFm = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i <= M; ++i)
    for (std::size_t l = 0; l <= i; ++l)
      if (const BoxMatrix* D = block(i, l))
        DFm.block(static_cast<Eigen::Index>(i * B), static_cast<Eigen::Index>(l * B), static_cast<Eigen::Index>(B),
                  static_cast<Eigen::Index>(B)) = mid(*D);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(DFm);
  if (!(lu.rcond() > 1e-15)) throw ValidationFailed("SingularApproxInverse", "manifold Jacobian is singular");
  Eigen::MatrixXcd A = lu.inverse();
  if (!A.allFinite()) throw ValidationFailed("SingularApproxInverse", "approximate inverse is not finite");
  for (std::size_t i = 0; i <= M; ++i)
    for (std::size_t l = i + 1; l <= M; ++l)
      A.block(static_cast<Eigen::Index>(i * B), static_cast<Eigen::Index>(l * B), static_cast<Eigen::Index>(B),
              static_cast<Eigen::Index>(B))
          .setZero();
  auto Ablock = [&](std::size_t i, std::size_t l) -> Eigen::MatrixXcd {
    return A.block(static_cast<Eigen::Index>(i * B), static_cast<Eigen::Index>(l * B), static_cast<Eigen::Index>(B),
                   static_cast<Eigen::Index>(B));
  };

  const double tail_low = manifold_tail_lower(lam_bar, phase, N, M);
  if (!(tail_low > 0.0)) throw ValidationFailed("Z1", "tail operator not invertible");
  const double tail_inv = div_up(1.0, tail_low);

  // Z0 by column blocks of I - A DF (block lower triangular).
  double Z0 = 0.0;
  for (std::size_t l = 0; l <= M; ++l) {
    std::vector<double> colsum(B, 0.0);
    for (std::size_t m = l; m <= M; ++m) {
      BoxMatrix P(B, B);
      for (std::size_t i = l; i <= m; ++i)
        if (const BoxMatrix* D = block(i, l)) detail::multiply_accumulate(P, Ablock(m, i), *D);
      for (std::size_t k = 0; k < B; ++k)
        for (std::size_t j = 0; j < B; ++j) {
          ComplexBox e = -P(k, j);
          if (m == l && k == j) e += ComplexBox(1.0, 0.0);
          colsum[j] = add_up(colsum[j], mul_up(wk[k].hi(), abs_upper(e)));
        }
    }
    for (std::size_t j = 0; j < B; ++j) Z0 = std::max(Z0, div_up(colsum[j], wk[j].lo()));
  }

  // Norm of A and its column blocks 0 and 1.
  const auto cn = column_norms_upper(A, w);
  double normAF = 0.0;
  for (double x : cn) normAF = std::max(normAF, x);
  double cn0 = 1.0, cn1 = 1.0;
  for (std::size_t k = 0; k < B; ++k) {
    cn0 = std::max(cn0, cn[k]);
    if (M >= 1) cn1 = std::max(cn1, cn[B + k]);
  }
  const double normA = std::max({normAF, tail_inv, 1.0});

  // Y0.
  const auto S = detail::tf_square_rows(rows);
  std::vector<ComplexBox> f(n);
  for (std::size_t m = 2; m <= M; ++m) {
    const ComplexBox lm = lam * RealInterval(static_cast<double>(m));
    for (std::size_t k = 0; k <= N; ++k) {
      const ComplexBox pk = rows[m][k];
      f[m * B + k] = (lm - phase * laplace_multiplier(static_cast<long>(k))) * pk - phase * S[m].at_or_zero(k);
    }
  }
  double Y0 = weighted_norm_upper(multiply(A, f), wu);
  for (std::size_t m = 2; m <= 2 * M; ++m) {
    const ComplexBox lm = lam_bar * RealInterval(static_cast<double>(m));
    const std::size_t k0 = m <= M ? N + 1 : 0;
    for (std::size_t k = k0; k <= S[m].order(); ++k) {
      const double fk = abs_upper(phase * S[m][k]);
      if (fk == 0.0) continue;
      const double den = abs_lower(lm - phase * laplace_multiplier(static_cast<long>(k)));
      Y0 = add_up(Y0, div_up(mul_up(wk.size() > k ? wk[k].hi() : sym_weight(nu, k).hi(), fk), den));
    }
  }
  Y0 = add_up(Y0, add_up(mul_up(cn0, r_eq), mul_up(cn1, r_eig)));

  // Z1: Fourier-tail columns coupling into the finite rows, tail rows, and
  // the spread of lambda against the tail operator built on lambda_bar.
  std::vector<std::vector<double>> U(M + 1);
  for (std::size_t d = 0; d <= M; ++d) {
    U[d] = tail_coupling(rows[d], N);
    for (auto& x : U[d]) x = mul_up(mul_up(2.0, phase_abs), x);
  }
  double z1a = 0.0;
  for (std::size_t j = 0; j <= M; ++j) {
    std::vector<double> v(n, 0.0);
    for (std::size_t m = std::max<std::size_t>(j, 2); m <= M; ++m)
      for (std::size_t k = 0; k <= N; ++k) v[m * B + k] = U[m - j][k];
    z1a = std::max(z1a, weighted_norm_upper(abs_multiply_upper(A, v), wu));
  }
  const double grid_norm = grid_norm_upper(p_bar);
  const double z1b = mul_up(mul_up(mul_up(2.0, phase_abs), grid_norm), tail_inv);
  const double lam_spread = add_up(abs_upper(lam - lam_bar), 0.0);
  const double z1c = div_up(lam_spread, abs_lower(lam_bar));
  const double Z1 = add_up(add_up(z1a, z1b), z1c);

  RadiiBounds bd{Y0, Z0, Z1, mul_up(mul_up(2.0, phase_abs), normA)};

  ManifoldCertificate c;
  c.bounds = bd;
  c.p = FourierTaylor(N, M, nu);
  for (std::size_t m = 0; m <= M; ++m) c.p.set_row(m, rows[m]);
  c.p.r0 = solve_radii(bd);
  c.lambda = lam;
  c.theta_name = theta.name;
  c.theta = theta.value();
  c.r_eq = r_eq;
  c.r_eig = r_eig;
  return c;
}

// ---------------------------------------------------------------------------

/// Enclosure of the validated P(e^{i psi}); psi may be an interval.
inline SymSeq manifold_point(const ManifoldCertificate& cert, const RealInterval& psi) {
  return eval_on_disc(cert.p, unit_phase(psi));
}

/// Enclosure of P(sigma) for a sigma box inside the closed unit disc.
inline SymSeq manifold_point_sigma(const ManifoldCertificate& cert, const ComplexBox& sigma) {
  return eval(cert.p, sigma);
}

/// P(e^{lambda t} e^{i psi}) for t <= 0: the backward orbit through the point.
inline SymSeq orbit_on_manifold(const ManifoldCertificate& cert, const RealInterval& psi, double t) {
  if (t > 0.0) throw DomainError("orbit_on_manifold: t must be <= 0");
  if (!(cert.lambda.re.lo() > 0.0)) throw DomainError("orbit_on_manifold: eigenvalue not provably unstable");
  if (t == 0.0) return manifold_point(cert, psi);
  const ComplexBox z = cert.lambda * RealInterval(t);
  const ComplexBox sigma = exp_real(z.re) * unit_phase(z.im + psi);
  // |sigma| = e^{Re(lambda) t} <= 1 holds exactly even if the box pokes outside.
  return eval_on_disc(cert.p, sigma);
}

// ---------------------------------------------------------------------------

/// Coefficients fhat_m of g(P(sigma)) - lambda sigma DP(sigma) = sum_m fhat_m sigma^m
/// for the grid polynomial, m = 0..2M on modes 0..2N.
inline std::vector<SymSeq> invariance_coefficients(const FourierTaylor& p, const ComplexBox& lambda,
                                                   const ComplexBox& phase) {
  std::vector<SymSeq> rows(p.M + 1);
  for (std::size_t m = 0; m <= p.M; ++m) rows[m] = p.row(m);
  auto S = detail::tf_square_rows(rows);
  for (std::size_t m = 0; m < S.size(); ++m) {
    for (std::size_t k = 0; k <= S[m].order(); ++k) {
      ComplexBox x = S[m][k];
      if (m <= p.M && k <= p.N) {
        x += laplace_multiplier(static_cast<long>(k)) * rows[m][k];
        x = phase * x - lambda * RealInterval(static_cast<double>(m)) * rows[m][k];
      } else {
        x = phase * x;
      }
      S[m][k] = x;
    }
  }
  return S;
}

/// sum_m |fhat_m| s^m: the invariance residual bound on |sigma| <= s.
inline double invariance_residual_bound(const FourierTaylor& p, const ComplexBox& lambda, const ComplexBox& phase,
                                        double s) {
  const auto F = invariance_coefficients(p, lambda, phase);
  double acc = 0.0;
  double sm = 1.0;
  for (const auto& f : F) {
    acc = add_up(acc, mul_up(norm_upper(f), sm));
    sm = mul_up(sm, s);
  }
  return acc;
}

/// Direct enclosure of g(P(sigma)) - lambda sigma DP(sigma) for the grid polynomial.
inline SymSeq invariance_residual(const FourierTaylor& p, const ComplexBox& lambda, const ComplexBox& phase,
                                  const ComplexBox& sigma) {
  FourierTaylor grid = p;
  grid.taylor_tail = 0.0;
  grid.r0 = 0.0;
  const SymSeq P = detail::horner(grid, sigma);
  const SymSeq DP = eval_derivative(grid, sigma);
  SymSeq g = apply_g(P, phase);
  const ComplexBox ls = lambda * sigma;
  for (std::size_t k = 0; k <= DP.order(); ++k) g[k] -= ls * DP[k];
  return g;
}

}  // namespace cap
