#pragma once

// Per-angle proof pipeline: validated equilibrium and eigenpair, validated
// unstable-manifold chart, rigorous integration from P(e^{i psi_k}), and the
// trapping-region check after every step.

#include <chrono>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "cap/classical.hpp"
#include "cap/equilibria.hpp"
#include "cap/errors.hpp"
#include "cap/integrator.hpp"
#include "cap/interval.hpp"
#include "cap/manifold.hpp"
#include "cap/seqspace.hpp"
#include "cap/trapping.hpp"

namespace cap {

struct PipelineConfig {
  std::size_t N = 30;  // Fourier modes of the equilibrium and manifold
  std::size_t M = 25;  // Taylor order of the manifold
  std::size_t K = 32;  // two-sided Galerkin order of the integrator
  double nu = 1.0;
  double horizon = 2.0;
  double eigen_scale = 5.0;       // |b_{k*}| of the normalized eigenvector
  double eigen_phase_deg = 22.0;  // arg b_{k*}
  StepPolicy policy{};
};

enum class Verdict { Heteroclinic, StepFailed, ApproxFailed, HorizonReached };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Heteroclinic: return "Heteroclinic";
    case Verdict::StepFailed: return "StepFailed";
    case Verdict::ApproxFailed: return "ApproxFailed";
    case Verdict::HorizonReached: return "HorizonReached";
  }
  return "?";
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "Heteroclinic") return Verdict::Heteroclinic;
  if (s == "StepFailed") return Verdict::StepFailed;
  if (s == "ApproxFailed") return Verdict::ApproxFailed;
  if (s == "HorizonReached") return Verdict::HorizonReached;
  throw ConfigError("unknown verdict '" + s + "'");
}

/// Everything that depends on theta only, built once per sweep.
struct ThetaContext {
  Angle theta;
  PipelineConfig config;
  EquilibriumCertificate eq;
  EigenCertificate eig;
  ManifoldCertificate manifold;
};

/// Unstable eigenpair of Dg(u_1) at theta = 0 with the configured
/// normalization: the eigenvalue with negative imaginary part of the pair
/// with largest real part. Rotating theta multiplies the eigenvalue by e^{i theta}.
inline std::pair<cplx, CVec> base_eigenpair(const SymSeq& a_tilde, const PipelineConfig& cfg) {
  const auto ev = eig_finite(a_tilde, 0.0, cfg.N);
  if (ev.size() < 2) throw ConfigError("base_eigenpair: need at least two modes");
  const std::size_t idx = ev[0].value.imag() < 0.0 ? 0 : 1;
  Eigen::Index ks = 0;
  const cplx target = std::polar(cfg.eigen_scale, cfg.eigen_phase_deg * std::numbers::pi / 180.0);
  const CVec b = normalize_eigenvector(ev[idx].vector, target, &ks);
  return refine_eigenpair(a_tilde, 1.0, ev[idx].value, b, ks);
}

inline ThetaContext build_context(const Angle& theta, const PipelineConfig& cfg) {
  ThetaContext ctx;
  ctx.theta = theta;
  ctx.config = cfg;
  const SymSeq a = newton_equilibrium(u1_seed(cfg.N, cfg.nu));
  ctx.eq = validate_equilibrium(a);
  const auto [lam, b] = base_eigenpair(ctx.eq.a_tilde, cfg);
  ctx.eig = validate_eigenpair(ctx.eq, lam * theta.phase.mid(), fp::to_seq(b, cfg.nu), theta);
  ctx.manifold = validate_manifold(solve_homological(ctx.eq, ctx.eig, theta, cfg.N, cfg.M), ctx.eq, ctx.eig, theta);
  return ctx;
}

/// psi_k = 2 pi k / 360, enclosed.
inline RealInterval psi_of(long k) {
  return pi_interval() * RealInterval(2.0 * static_cast<double>(k)) / RealInterval(360.0);
}

struct ProofCertificate {
  std::string theta_name;
  double theta = 0.0;
  long k = 0;
  RealInterval psi;
  std::size_t N = 0, M = 0, K = 0;
  double nu = 1.0;
  bool from_manifold = true;  // false: explicit initial data, no upstream proofs
  double horizon = 0.0;
  // Upstream certificates, enough to re-check their radii inequalities.
  RadiiBounds eq_bounds, eig_bounds, manifold_bounds;
  double r_eq = 0.0, r_eig = 0.0, r0 = 0.0;
  ComplexBox lambda;  // e^{i theta} times the unstable eigenvalue
  // Initial data: P(e^{i psi}) enclosure norm and its l1 ball radius.
  double initial_norm = 0.0;
  double initial_tail = 0.0;
  std::vector<StepCertificate> steps;
  std::optional<TrapParams> trap;
  BiSeq final_state;  // last endpoint enclosure
  Verdict verdict = Verdict::HorizonReached;
  std::string message;
  double wall_time = 0.0;  // seconds; kept out of the certificate JSON

  double t_final() const { return steps.empty() ? 0.0 : steps.back().t_b; }
};

namespace detail {

/// Integrates from phi, stopping at the first trapped endpoint.
inline void run_chain(ProofCertificate& pc, const BiSeq& phi, const Angle& theta, const PipelineConfig& cfg) {
  std::optional<TrapParams> trap;
  IntegrationResult res = integrate(phi, 0.0, theta, cfg.horizon, cfg.K, cfg.policy, [&](const StepCertificate& s) {
    const TrapResult tr = trap_check(s.endpoint, theta);
    if (tr.trapped) trap = tr.params;
    return tr.trapped;
  });
  pc.steps = std::move(res.steps);
  pc.final_state = res.final_state;
  pc.message = res.message;
  pc.trap = trap;
  switch (res.reason) {
    case StopReason::Callback: pc.verdict = Verdict::Heteroclinic; break;
    case StopReason::Horizon: pc.verdict = Verdict::HorizonReached; break;
    case StopReason::StepFailed: pc.verdict = Verdict::StepFailed; break;
    case StopReason::ApproxFailed: pc.verdict = Verdict::ApproxFailed; break;
  }
}

}  // namespace detail

/// Runs integrate + trap from P(e^{i psi}) for any psi enclosure.
inline ProofCertificate prove_psi(const ThetaContext& ctx, long k, const RealInterval& psi) {
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineConfig& cfg = ctx.config;
  ProofCertificate pc;
  pc.theta_name = ctx.theta.name;
  pc.theta = ctx.theta.value();
  pc.k = k;
  pc.psi = psi;
  pc.N = cfg.N;
  pc.M = cfg.M;
  pc.K = cfg.K;
  pc.nu = cfg.nu;
  pc.horizon = cfg.horizon;
  pc.eq_bounds = ctx.eq.bounds;
  pc.eig_bounds = ctx.eig.bounds;
  pc.manifold_bounds = ctx.manifold.bounds;
  pc.r_eq = ctx.eq.r_eq;
  pc.r_eig = ctx.eig.r_eig;
  pc.r0 = ctx.manifold.p.r0;
  pc.lambda = ctx.manifold.lambda;

  const BiSeq phi = sym_to_bi(manifold_point(ctx.manifold, psi));
  pc.initial_norm = norm_upper(phi);
  pc.initial_tail = phi.tail;

  detail::run_chain(pc, phi, ctx.theta, cfg);
  // The backward limit needs a provably unstable direction.
  if (pc.verdict == Verdict::Heteroclinic && !(pc.lambda.re.lo() > 0.0)) {
    pc.verdict = Verdict::HorizonReached;
    pc.message = "eigenvalue not provably unstable";
  }
  pc.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return pc;
}

inline ProofCertificate prove_angle(const ThetaContext& ctx, long k) { return prove_psi(ctx, k, psi_of(k)); }

/// Integrate + trap from an explicit enclosure phi, without the manifold.
/// The forward half of the orbit only; no backward limit is claimed.
inline ProofCertificate prove_data(const BiSeq& phi, const Angle& theta, const PipelineConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  ProofCertificate pc;
  pc.theta_name = theta.name;
  pc.theta = theta.value();
  pc.K = cfg.K;
  pc.nu = phi.nu;
  pc.horizon = cfg.horizon;
  pc.from_manifold = false;
  pc.initial_norm = norm_upper(phi);
  pc.initial_tail = phi.tail;
  detail::run_chain(pc, phi, theta, cfg);
  pc.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return pc;
}

// ---------------------------------------------------------------------------

/// One CSV row of a time series: (k, t, sup-norm upper bound, rho).
struct SeriesRow {
  long k = 0;
  double t = 0.0;
  double supnorm = 0.0;
  double rho = 0.0;
};

/// t = 0 row from the initial data, then one row per step endpoint. The
/// sup norm of u(t, .) is at most |a(t)|_1.
inline std::vector<SeriesRow> series_rows(const ProofCertificate& pc) {
  std::vector<SeriesRow> rows;
  rows.push_back({pc.k, 0.0, pc.initial_norm, pc.initial_tail});
  for (const auto& s : pc.steps) rows.push_back({pc.k, s.t_b, s.endpoint_norm, s.rho});
  return rows;
}

struct FailureRange {
  long lo = 0;
  long hi = 0;
};

/// Maximal runs of consecutive failing entries in the sorted request list.
inline std::vector<FailureRange> failure_ranges(const std::vector<long>& ks, const std::vector<bool>& failed) {
  std::vector<FailureRange> out;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (!failed[i]) continue;
    if (i > 0 && failed[i - 1] && !out.empty()) {
      out.back().hi = ks[i];
    } else {
      out.push_back({ks[i], ks[i]});
    }
  }
  return out;
}

/// Number of failure bands when the request list is read as a circle of
/// angles (a band through 360 = 0 counts once).
inline std::size_t circular_bands(const std::vector<bool>& failed) {
  const std::size_t n = failed.size();
  if (n == 0) return 0;
  std::size_t starts = 0;
  bool all = true;
  for (std::size_t i = 0; i < n; ++i) {
    all = all && failed[i];
    if (failed[i] && !failed[(i + n - 1) % n]) ++starts;
  }
  return all ? 1 : starts;
}

/// Proves every k in `ks` with up to `jobs` worker threads. Each worker owns
/// its orbit; certificates come back in the order of `ks`. `on_done` runs
/// under a lock as each angle finishes.
inline std::vector<ProofCertificate> sweep(const ThetaContext& ctx, const std::vector<long>& ks, unsigned jobs = 1,
                                           const std::function<void(const ProofCertificate&)>& on_done = {}) {
  std::vector<ProofCertificate> out(ks.size());
  std::mutex mu;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next == ks.size()) return;
        i = next++;
      }
      ProofCertificate pc = prove_angle(ctx, ks[i]);
      std::lock_guard<std::mutex> lock(mu);
      out[i] = std::move(pc);
      if (on_done) on_done(out[i]);
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(ks.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

/// k = round(360 i / n), i = 0..n-1.
inline std::vector<long> even_angles(std::size_t n) {
  std::vector<long> ks;
  for (std::size_t i = 0; i < n; ++i) ks.push_back(std::lround(360.0 * static_cast<double>(i) / static_cast<double>(n)));
  return ks;
}

// ---------------------------------------------------------------------------

struct NonrigorousOptions {
  double dt_sample = 0.001;
  double resolution = 1e-2;  // tail-fraction threshold of the breakdown test
  std::size_t tail_modes = 4;
  double max_norm = 1e6;
  double h_min = 1e-10;
  // Galerkin order of the classical run, independent of the rigorous K: the
  // breakdown test must see a lost resolution only where higher orders lose it too.
  std::size_t K = 48;
};

struct NonrigorousRun {
  long k = 0;
  bool breakdown = false;
  std::string reason;
  double t_end = 0.0;  // breakdown time or the horizon
  double max_norm = 0.0;
  double max_tail_fraction = 0.0;
  std::vector<std::pair<double, double>> samples;  // (t, |a(t)|_1)
};

/// Classical Galerkin run from the manifold point midpoint; breakdown is a
/// norm blowup, a step-size collapse or lost resolution.
inline NonrigorousRun nonrigorous_run(const ThetaContext& ctx, long k, const NonrigorousOptions& opt = {}) {
  const PipelineConfig& cfg = ctx.config;
  NonrigorousRun run;
  run.k = k;
  const BiSeq phi = sym_to_bi(manifold_point(ctx.manifold, psi_of(k)));
  ModeVec y = to_modes(phi, opt.K);
  ClassicalOptions co = cfg.policy.classical;
  co.max_norm = opt.max_norm;
  co.h_min = opt.h_min;
  co.max_tail_fraction = opt.resolution;
  co.tail_modes = opt.tail_modes;
  LawsonDP54 solver(ctx.theta.phase.mid(), opt.K, co);
  run.samples.emplace_back(0.0, detail::l1(y));
  double t = 0.0, h = 0.0;
  const long n = std::max(1L, std::lround(cfg.horizon / opt.dt_sample));
  for (long i = 1; i <= n; ++i) {
    const double target = i == n ? cfg.horizon : static_cast<double>(i) * opt.dt_sample;
    try {
      y = solver.solve(y, t, {target}, &h).back();
    } catch (const ApproxFailed& e) {
      run.breakdown = true;
      run.reason = e.what();
      run.t_end = t;
      break;
    }
    t = target;
    run.samples.emplace_back(t, detail::l1(y));
    run.t_end = t;
  }
  run.max_norm = solver.stats().max_norm;
  run.max_tail_fraction = solver.stats().max_tail_fraction;
  return run;
}

}  // namespace cap
