#pragma once

// Rigorous forward integration of a' = e^{i theta}(L a + a*a) in l1_nu.
//
// Each step J = [t_a, t_b] carries a polynomial-in-time approximation a_bar
// (Chebyshev series of degree q in s, t = t_a + h(1 + s)/2). With
//   eps     >= |a(t_a) - a_bar(t_a)|,
//   delta   >= sup_J |a_bar' - e^{i theta}(L a_bar + a_bar*a_bar)|,
//   W       >= sup_{s<=t in J} |U(t, s)|   (linearization along a_bar),
//   W_start >= sup_{t in J} |U(t, t_a)|,
// any rho with W_start eps + W h(2 rho^2 + delta) <= rho encloses the true
// solution in the sup-norm ball of radius rho about a_bar over J, and at t_b
// the error is at most W_end eps + W h(2 rho^2 + delta) with W_end >= |U(t_b, t_a)|.
//
// Across steps the endpoint error is also bounded by discrete variation of
// constants. Write U_n = diag(M_n, 0) + Pi_n with M_n the reference matrix of
// step n on its finite block. With w_0 = eps_1, w_i = e_i + reanchor_{i+1},
// e_i = W_i h_i (2 rho_i^2 + delta_i) and Q(n, i) = M_n ... M_{i+1},
//   |b(t_n)| <= sum_{i<n} |Q(n, i)| (w_i + m_i eps_i) + e_n + |Pi_n| eps_n,
// where m_i bounds the part of Pi_i that Q(n, i) sees (m_0 eps_0 = 0). This
// follows the true growth of the block instead of the product of step norms.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cap/classical.hpp"
#include "cap/errors.hpp"
#include "cap/fundamental.hpp"
#include "cap/interval.hpp"
#include "cap/seqspace.hpp"

namespace cap {

struct ApproxFlow {
  double t_a = 0.0;
  double t_b = 0.0;
  std::size_t K = 0;
  std::size_t q = 0;
  double nu = 1.0;
  std::vector<ModeVec> cheb;  // cheb[j][k + K]

  /// Rigorous enclosure of t_b - t_a.
  RealInterval h() const { return RealInterval(t_b) - RealInterval(t_a); }

  /// Coefficient series of degree j as an exact BiSeq.
  BiSeq coefficient(std::size_t j) const {
    BiSeq s(K, nu);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] = ComplexBox(cheb[j][i]);
    return s;
  }

  /// a_bar at s = -1 (t_a) or s = +1 (t_b), enclosed.
  BiSeq at_end(bool right) const {
    BiSeq s(K, nu);
    for (std::size_t j = 0; j <= q; ++j) {
      const double sign = (right || j % 2 == 0) ? 1.0 : -1.0;
      for (std::size_t i = 0; i < s.coeffs.size(); ++i) s.coeffs[i] += ComplexBox(sign * cheb[j][i]);
    }
    return s;
  }
  BiSeq at_start() const { return at_end(false); }
  BiSeq at_finish() const { return at_end(true); }

  /// Floating-point value at time t in J.
  ModeVec value(double t) const {
    const double s = std::clamp(2.0 * (t - t_a) / (t_b - t_a) - 1.0, -1.0, 1.0);
    ModeVec v(cheb[0].size(), 0.0);
    double tm = 1.0, tc = s;
    for (std::size_t j = 0; j <= q; ++j) {
      const double T = j == 0 ? 1.0 : (j == 1 ? s : 2.0 * s * tc - tm);
      if (j >= 2) {
        tm = tc;
        tc = T;
      }
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += T * cheb[j][i];
    }
    return v;
  }
};

/// Chebyshev-Lobatto nodes s_l = cos(pi l / q), l = 0..q (s_0 = 1).
inline std::vector<double> lobatto_nodes(std::size_t q) {
  std::vector<double> s(q + 1);
  for (std::size_t l = 0; l <= q; ++l) s[l] = std::cos(std::numbers::pi * static_cast<double>(l) / static_cast<double>(q));
  s[q] = -1.0;
  s[0] = 1.0;
  if (q % 2 == 0) s[q / 2] = 0.0;
  return s;
}

/// Chebyshev coefficients from values at the Lobatto nodes (DCT-I).
inline std::vector<ModeVec> chebyshev_from_nodes(const std::vector<ModeVec>& f) {
  const std::size_t q = f.size() - 1;
  const std::size_t n = f[0].size();
  std::vector<ModeVec> c(q + 1, ModeVec(n, 0.0));
  for (std::size_t j = 0; j <= q; ++j) {
    for (std::size_t l = 0; l <= q; ++l) {
      double w = std::cos(std::numbers::pi * static_cast<double>(j * l % (2 * q)) / static_cast<double>(q));
      if (l == 0 || l == q) w *= 0.5;
      for (std::size_t i = 0; i < n; ++i) c[j][i] += w * f[l][i];
    }
    const double scale = (j == 0 || j == q ? 1.0 : 2.0) / static_cast<double>(q);
    for (std::size_t i = 0; i < n; ++i) c[j][i] *= scale;
  }
  return c;
}

inline ModeVec to_modes(const BiSeq& a, std::size_t K) {
  ModeVec v(2 * K + 1, 0.0);
  const long Ka = static_cast<long>(a.order());
  const long Kl = static_cast<long>(K);
  for (long k = -std::min(Ka, Kl); k <= std::min(Ka, Kl); ++k) v[static_cast<std::size_t>(k + Kl)] = a[k].mid();
  return v;
}

/// Classical solve on [t_a, t_b] sampled at the Lobatto nodes, then
/// interpolated in time. Throws ApproxFailed when the classical solver breaks down.
inline ApproxFlow approx_step(const BiSeq& phi_bar, const Angle& theta, double t_a, double t_b, std::size_t K,
                              std::size_t q = 8, const ClassicalOptions& opt = {}) {
  if (!(t_b > t_a)) throw ConfigError("approx_step: step length must be positive");
  if (q < 1) throw ConfigError("approx_step: degree must be >= 1");
  const auto s = lobatto_nodes(q);
  std::vector<double> targets;
  for (std::size_t l = q; l-- > 0;) targets.push_back(t_a + 0.5 * (t_b - t_a) * (1.0 + s[l]));
  targets.back() = t_b;
  ModeVec y0 = to_modes(phi_bar, K);
  LawsonDP54 solver(theta.phase.mid(), K, opt);
  double h = std::min(opt.h_init, (t_b - t_a) / 4.0);
  auto vals = solver.solve(y0, t_a, targets, &h);
  std::vector<ModeVec> f(q + 1);
  f[q] = y0;
  for (std::size_t l = 0; l < q; ++l) f[l] = vals[q - 1 - l];
  ApproxFlow flow;
  flow.t_a = t_a;
  flow.t_b = t_b;
  flow.K = K;
  flow.q = q;
  flow.nu = phi_bar.nu;
  flow.cheb = chebyshev_from_nodes(f);
  return flow;
}

// ---------------------------------------------------------------------------

/// Upper bound of sup_J |a_bar' - e^{i theta}(L a_bar + a_bar*a_bar)|_nu from
/// the exact Chebyshev expansion of the defect (|T_j| <= 1 on [-1, 1]).
inline double defect_bound(const ApproxFlow& flow, const Angle& theta) {
  const std::size_t q = flow.q;
  const std::size_t K = flow.K;
  std::vector<BiSeq> C(q + 1);
  for (std::size_t j = 0; j <= q; ++j) C[j] = flow.coefficient(j);

  // d/ds coefficients.
  std::vector<BiSeq> D(q + 1, BiSeq(K, flow.nu));
  for (std::size_t j = q; j >= 1; --j) {
    BiSeq x = RealInterval(2.0 * static_cast<double>(j)) * C[j];
    if (j + 1 <= q) x = x + D[j + 1];
    D[j - 1] = x;
  }
  for (auto& x : D[0].coeffs) x = RealInterval(0.5) * x;
  const RealInterval ds_dt = RealInterval(2.0) / flow.h();

  // Time products via T_i T_j = (T_{i+j} + T_{|i-j|}) / 2.
  std::vector<BiSeq> P(2 * q + 1, BiSeq(2 * K, flow.nu));
  for (std::size_t i = 0; i <= q; ++i) {
    for (std::size_t j = i; j <= q; ++j) {
      BiSeq c = convolve_bi(C[i], C[j]);
      const RealInterval f = i == j ? RealInterval(0.5) : RealInterval(1.0);
      for (std::size_t m = 0; m < c.coeffs.size(); ++m) {
        const ComplexBox v = f * c.coeffs[m];
        P[i + j].coeffs[m] += v;
        P[j - i].coeffs[m] += v;
      }
    }
  }

  const long K2 = static_cast<long>(2 * K);
  double delta = 0.0;
  for (std::size_t n = 0; n <= 2 * q; ++n) {
    for (long k = -K2; k <= K2; ++k) {
      ComplexBox x = P[n][k];
      if (n <= q && std::abs(k) <= static_cast<long>(K)) x += laplace_multiplier(k) * C[n][k];
      x = theta.phase * x;
      if (n <= q && std::abs(k) <= static_cast<long>(K)) x = ds_dt * D[n][k] - x;
      const double mag = abs_upper(x);
      if (mag != 0.0) delta = add_up(delta, mul_up(nu_power(flow.nu, static_cast<std::size_t>(std::abs(k))).hi(), mag));
    }
  }
  return delta;
}

enum class EvolutionMode { Baseline, Split, Refined };

struct EvolutionBound {
  double W = 1.0;        // >= sup_{s <= t} |U(t, s)|
  double W_start = 1.0;  // >= sup_t |U(t, t_a)|
  double W_end = 1.0;    // >= |U(t_b, t_a)|
  double rate = 0.0;     // Gronwall rate: exp(2 h rate) bounds all three
  std::optional<RefinedRecord> refined;
};

inline TimeSeries time_series(const ApproxFlow& flow) {
  TimeSeries C(flow.q + 1);
  for (std::size_t j = 0; j <= flow.q; ++j) C[j] = flow.coefficient(j);
  return C;
}

/// Bound of the evolution operator of b' = e^{i theta}(L b + 2 a_bar*b) over J.
/// Baseline: Gronwall against the contraction semigroup, rate = sup |a_bar|.
/// Split: the mode-0 multiplier 2 e^{i theta} a_bar_0 is integrated exactly,
/// rate = max(0, sup Re(e^{i theta} a_bar_0) + sup |a_bar - a_bar_0|).
/// Refined: Split, tightened by the finite-block/tail bounds where they close.
inline EvolutionBound evolution_bound(const ApproxFlow& flow, const Angle& theta,
                                      EvolutionMode mode = EvolutionMode::Baseline,
                                      const RefinedOptions& refined = {}) {
  if (theta.phase.re.lo() < 0.0) throw ConfigError("evolution_bound: Re e^{i theta} must be >= 0");
  if (flow.nu > 1.0 && theta.phase.re.contains_zero()) {
    throw ConfigError("evolution_bound: nu > 1 is not covered at theta = +-pi/2");
  }
  const bool split = mode != EvolutionMode::Baseline;
  const long K = static_cast<long>(flow.K);
  double rest = 0.0;
  for (long k = -K; k <= K; ++k) {
    if (split && k == 0) continue;
    double s = 0.0;
    for (std::size_t j = 0; j <= flow.q; ++j) s = add_up(s, abs_upper(ComplexBox(flow.cheb[j][static_cast<std::size_t>(k + K)])));
    rest = add_up(rest, mul_up(nu_power(flow.nu, static_cast<std::size_t>(std::abs(k))).hi(), s));
  }
  double rate = rest;
  if (split) {
    const std::size_t i0 = static_cast<std::size_t>(K);
    double r0 = (theta.phase * ComplexBox(flow.cheb[0][i0])).re.hi();
    for (std::size_t j = 1; j <= flow.q; ++j) r0 = add_up(r0, abs_upper(theta.phase * ComplexBox(flow.cheb[j][i0])));
    rate = std::max(0.0, add_up(r0, rest));
  }
  EvolutionBound e;
  e.rate = rate;
  e.W = rate == 0.0 ? 1.0 : exp_real(RealInterval(2.0) * flow.h().hi() * RealInterval(rate)).hi();
  e.W_start = e.W;
  e.W_end = e.W;
  if (mode == EvolutionMode::Refined && flow.K >= 1) {
    RefinedRecord rec = refined_evolution(time_series(flow), theta, flow.h(), refined);
    if (rec.closed) {
      e.W = std::min(e.W, rec.W_all);
      e.W_start = std::min(e.W_start, rec.W_sup);
      e.W_end = std::min(e.W_end, rec.W_end);
    }
    e.refined = rec;
  }
  return e;
}

/// Interval evaluation of f_eps(rho) = W_start eps + W h(2 rho^2 + delta).
inline RealInterval step_map(double W_start, double W, double eps, double h, double delta, double rho) {
  const RealInterval r = rho;
  return RealInterval(W_start) * RealInterval(eps) +
         RealInterval(W) * RealInterval(h) * (RealInterval(2.0) * sqr(r) + RealInterval(delta));
}

/// Single-constant form W[eps + h(2 rho^2 + delta)].
inline RealInterval step_map(double W, double eps, double h, double delta, double rho) {
  return step_map(W, W, eps, h, delta, rho);
}

/// Smallest verified rho with f_eps(rho) <= rho. Throws StepFailed when the
/// quadratic 2 W h rho^2 - rho + (W_start eps + W h delta) has no real root.
inline double step_radius(double W_start, double W, double eps, double h, double delta) {
  if (eps == 0.0 && delta == 0.0) return 0.0;
  const double e = W_start * eps + W * h * delta;
  const double disc = 1.0 - 8.0 * W * h * e;
  if (!(disc > 0.0)) throw StepFailed("step validation: no fixed-point radius exists");
  const double rho0 = 2.0 * e / (1.0 + std::sqrt(disc));
  for (int j = 40; j >= 4; j -= 4) {
    const double rho = rho0 * (1.0 + std::ldexp(1.0, -j));
    if (step_map(W_start, W, eps, h, delta, rho).hi() <= rho) return rho;
  }
  throw StepFailed("step validation: fixed-point inequality could not be verified");
}

inline double step_radius(double W, double eps, double h, double delta) { return step_radius(W, W, eps, h, delta); }

struct StepCertificate {
  double t_a = 0.0;
  double t_b = 0.0;
  double h = 0.0;       // upper bound of t_b - t_a
  double epsilon = 0.0;
  double reanchor = 0.0;  // epsilon = previous endpoint error + reanchor (or initial ball + reanchor)
  double delta = 0.0;
  double W = 1.0;
  double W_start = 1.0;
  double W_end = 1.0;
  double rate = 0.0;
  double rho = 0.0;      // sup over J of the error
  double local = 0.0;    // W h(2 rho^2 + delta)
  double rho_end = 0.0;  // error at t_b, <= rho
  std::optional<RefinedRecord> refined;
  // Variation-of-constants record: the term pushed at this step, and the
  // bounds |Q(n, i)| of the live terms, whose indices i are prop_index.
  double prop_coeff = 0.0;
  std::vector<std::size_t> prop_index;
  std::vector<double> prop_norms;
  double prop_bound = INFINITY;
  // Terms merged after this step: (i, j) adds |Q(j, i)| coeff_i to coeff_j, with
  // |Q(j, i)| read from the record of step j.
  std::vector<std::pair<std::size_t, std::size_t>> merges;
  BiSeq endpoint;  // a_bar(t_b) boxes with tail rho_end
  double endpoint_norm = 0.0;  // norm_upper(endpoint), kept when the boxes are dropped
};

/// True when the step carries a reference matrix.
inline bool has_reference(const StepCertificate& c) { return c.refined && c.refined->closed; }

/// Bound of |Pi_n| = |U_n - diag(M_n, 0)|; the whole U_n without a reference.
inline double perturbation_norm(const StepCertificate& c) {
  if (!has_reference(c)) return c.W_end;
  const RefinedRecord& r = *c.refined;
  return std::max(add_up(r.alpha, r.gamma), add_up(r.beta, r.delta));
}

/// Bound of |P_{F_next} Pi_prev|: only the block rows survive when the next
/// block is contained in this one.
inline double carry_factor(const StepCertificate& prev, const StepCertificate& next) {
  if (has_reference(prev) && has_reference(next) && next.refined->K_fin <= prev.refined->K_fin) {
    return std::max(prev.refined->alpha, prev.refined->beta);
  }
  return perturbation_norm(prev);
}

/// Coefficient of the term pushed at step `next`: w_prev + m_prev eps_prev.
inline double propagation_coeff(const StepCertificate& prev, const StepCertificate& next) {
  const double w = add_up(prev.local, next.reanchor);
  return add_up(w, mul_up(carry_factor(prev, next), prev.epsilon));
}

/// sum_i prop_norms[i] coeff_i + e_n + |Pi_n| eps_n, rounded up.
inline double propagation_bound(const std::vector<double>& norms, const std::vector<double>& coeffs,
                                const StepCertificate& c) {
  double s = add_up(c.local, mul_up(perturbation_norm(c), c.epsilon));
  for (std::size_t i = 0; i < norms.size(); ++i) s = add_up(s, mul_up(norms[i], coeffs[i]));
  return s;
}

/// sup over the enclosure of |x - y_box|_nu: box differences plus both tails.
inline double distance_upper(const BiSeq& x, const BiSeq& y) { return norm_upper(x - y); }

/// Validates one step given data enclosure phi for a(t_a).
inline StepCertificate step_validate(const BiSeq& phi, double prior_ball, const ApproxFlow& flow, double delta,
                                     const EvolutionBound& W) {
  StepCertificate c;
  c.t_a = flow.t_a;
  c.t_b = flow.t_b;
  c.h = flow.h().hi();
  BiSeq boxes = phi;
  boxes.tail = 0.0;
  c.reanchor = distance_upper(boxes, flow.at_start());
  c.epsilon = add_up(add_up(prior_ball, phi.tail), c.reanchor);
  c.delta = delta;
  c.W = W.W;
  c.W_start = W.W_start;
  c.W_end = W.W_end;
  c.rate = W.rate;
  c.refined = W.refined;
  c.rho = step_radius(c.W_start, c.W, c.epsilon, c.h, c.delta);
  c.local = (RealInterval(c.W) * RealInterval(c.h) * (RealInterval(2.0) * sqr(RealInterval(c.rho)) +
                                                        RealInterval(c.delta))).hi();
  c.rho_end = std::min(c.rho, step_map(c.W_end, c.W, c.epsilon, c.h, c.delta, c.rho).hi());
  c.endpoint = flow.at_finish();
  c.endpoint.tail = c.rho_end;
  return c;
}

/// Live terms of the variation-of-constants sum, with products of reference
/// matrices kept in floating point plus a rigorous deviation bound.
class Propagator {
 public:
  explicit Propagator(double nu, std::size_t max_terms = 40) : nu_(nu), max_terms_(std::max<std::size_t>(2, max_terms)) {}

  /// Folds the accepted step c (following prev, if any) into the sum, fills
  /// its record, and returns the endpoint error bound.
  double advance(StepCertificate& c, const StepCertificate* prev, const std::vector<StepCertificate>& history) {
    const std::size_t idx = count_++;
    c.prop_coeff = prev ? propagation_coeff(*prev, c) : c.epsilon;
    c.prop_norms.clear();
    c.prop_index.clear();
    c.merges.clear();
    if (!has_reference(c)) {
      terms_.clear();
      c.prop_bound = propagation_bound({}, {}, c);
      return c.prop_bound;
    }
    const Eigen::MatrixXcd& ref = c.refined->ref;
    const long Kf = static_cast<long>(c.refined->K_fin);
    if (Kf > Kc_) {
      for (auto& t : terms_) t.P = embed(t.P, Kc_, Kf);
      Kc_ = Kf;
    }
    terms_.push_back({Eigen::MatrixXcd::Identity(2 * Kc_ + 1, 2 * Kc_ + 1), 0.0, c.prop_coeff, idx});
    const Eigen::MatrixXcd M = embed(ref, Kf, Kc_);
    const double Mn = detail::block_norm(M, nullptr, nu_);
    Eigen::MatrixXcd Pn;
    Eigen::MatrixXd R;
    std::vector<double> coeffs;
    for (auto& t : terms_) {
      detail::bounded_product(M, t.P, Pn, R);
      t.perr = add_up(mul_up(Mn, t.perr), detail::block_norm(Eigen::MatrixXcd::Zero(R.rows(), R.cols()), &R, nu_));
      t.P = Pn;
      t.norm = add_up(detail::block_norm(t.P, nullptr, nu_), t.perr);
      c.prop_norms.push_back(t.norm);
      c.prop_index.push_back(t.index);
      coeffs.push_back(t.coeff);
    }
    c.prop_bound = propagation_bound(c.prop_norms, coeffs, c);
    // Merge the smallest contribution into its successor while over budget.
    while (terms_.size() > max_terms_) {
      std::size_t best = 0;
      double best_v = INFINITY;
      for (std::size_t k = 0; k + 1 < terms_.size(); ++k) {
        const double v = terms_[k].norm * terms_[k].coeff;
        if (v < best_v) {
          best_v = v;
          best = k;
        }
      }
      Term& from = terms_[best];
      Term& to = terms_[best + 1];
      // Q(n, i) = Q(n, j) Q(j, i); |Q(j, i)| sits in the record of step j,
      // stored at history[j - 1] (steps count from 1, the record from 0).
      const StepCertificate& sj = history[to.index - 1];
      const auto it = std::find(sj.prop_index.begin(), sj.prop_index.end(), from.index);
      if (it == sj.prop_index.end()) throw StepFailed("propagation: merge source missing from the record");
      const double qji = sj.prop_norms[static_cast<std::size_t>(it - sj.prop_index.begin())];
      to.coeff = add_up(to.coeff, mul_up(qji, from.coeff));
      c.merges.emplace_back(from.index, to.index);
      terms_.erase(terms_.begin() + static_cast<long>(best));
    }
    return c.prop_bound;
  }

 private:
  struct Term {
    Eigen::MatrixXcd P;
    double perr = 0.0;
    double coeff = 0.0;
    std::size_t index = 0;
    double norm = 0.0;
  };

  static Eigen::MatrixXcd embed(const Eigen::MatrixXcd& X, long from, long to) {
    if (from == to) return X;
    Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(2 * to + 1, 2 * to + 1);
    const long off = to - from;
    Y.block(off, off, 2 * from + 1, 2 * from + 1) = X;
    return Y;
  }

  double nu_;
  std::size_t max_terms_;
  std::vector<Term> terms_;
  long Kc_ = 0;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------

struct StepPolicy {
  double h0 = 1e-3;
  double grow = 1.5;
  double shrink = 0.5;
  double h_min = 1e-8;
  double h_max = 0.01;
  double rel_tol = 0.05;   // accept when h delta <= max(rel_tol eps, abs_tol)
  double abs_tol = 1e-13;
  std::size_t q = 8;
  EvolutionMode mode = EvolutionMode::Refined;
  RefinedOptions refined{};
  std::size_t max_terms = 40;  // live variation-of-constants terms
  ClassicalOptions classical{};
};

enum class StopReason { Horizon, Callback, StepFailed, ApproxFailed };

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::Horizon: return "HorizonReached";
    case StopReason::Callback: return "Stopped";
    case StopReason::StepFailed: return "StepFailed";
    case StopReason::ApproxFailed: return "ApproxFailed";
  }
  return "?";
}

struct IntegrationResult {
  std::vector<StepCertificate> steps;
  StopReason reason = StopReason::Horizon;
  std::string message;
  BiSeq final_state;
};

/// Chains validated steps from the enclosure phi (plus an extra ball eps0)
/// at t = 0 up to T. After every step `on_step` may stop the chain.
inline IntegrationResult integrate(const BiSeq& phi, double eps0, const Angle& theta, double T, std::size_t K,
                                   const StepPolicy& policy = {},
                                   const std::function<bool(const StepCertificate&)>& on_step = {}) {
  IntegrationResult res;
  BiSeq cur = truncate(phi, K);
  double ball = eps0;
  Propagator prop(phi.nu, policy.max_terms);
  double t = 0.0;
  double h = policy.h0;
  res.final_state = cur;
  while (t < T) {
    h = std::min({h, policy.h_max, T - t});
    const double t_b = (T - t <= h) ? T : t + h;
    ApproxFlow flow;
    try {
      BiSeq start = midpoint(cur);
      flow = approx_step(start, theta, t, t_b, K, policy.q, policy.classical);
    } catch (const ApproxFailed& e) {
      res.reason = StopReason::ApproxFailed;
      res.message = e.what();
      return res;
    }
    const double delta = defect_bound(flow, theta);
    const EvolutionBound W = evolution_bound(flow, theta, policy.mode, policy.refined);
    std::optional<StepCertificate> cert;
    std::string why;
    try {
      StepCertificate c = step_validate(cur, ball, flow, delta, W);
      const double hd = mul_up(c.h, delta);
      if (hd <= std::max(policy.rel_tol * c.epsilon, policy.abs_tol)) {
        cert = std::move(c);
      } else {
        why = "defect above tolerance";
      }
    } catch (const StepFailed& e) {
      why = e.what();
    }
    if (!cert) {
      h = (t_b - t) * policy.shrink;
      if (h < policy.h_min) {
        res.reason = StopReason::StepFailed;
        res.message = why;
        return res;
      }
      continue;
    }
    {
      const StepCertificate* prev = res.steps.empty() ? nullptr : &res.steps.back();
      const double pb = prop.advance(*cert, prev, res.steps);
      cert->rho_end = std::min(cert->rho_end, pb);
      cert->endpoint.tail = cert->rho_end;
      cert->endpoint_norm = norm_upper(cert->endpoint);
      if (cert->refined) cert->refined->ref = Eigen::MatrixXcd();
    }
    res.steps.push_back(*cert);
    cur = cert->endpoint;
    ball = 0.0;
    t = t_b;
    res.final_state = cur;
    h = (t_b - flow.t_a) * policy.grow;
    if (on_step && on_step(res.steps.back())) {
      res.reason = StopReason::Callback;
      return res;
    }
  }
  res.reason = StopReason::Horizon;
  return res;
}

}  // namespace cap
