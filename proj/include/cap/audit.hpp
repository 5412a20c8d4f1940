#pragma once

// Independent re-check of a certificate from its JSON form alone. Nothing is
// re-solved: every recorded inequality is re-evaluated in interval
// arithmetic from the stored numbers, and the bookkeeping of the
// variation-of-constants sum is replayed term by term.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cap/fundamental.hpp"
#include "cap/integrator.hpp"
#include "cap/io.hpp"
#include "cap/pipeline.hpp"
#include "cap/radii.hpp"
#include "cap/trapping.hpp"

namespace cap {

struct AuditReport {
  std::size_t checks = 0;
  std::vector<std::string> discrepancies;

  bool ok() const { return discrepancies.empty(); }
};

namespace detail {

class Auditor {
 public:
  explicit Auditor(AuditReport& r) : r_(r) {}

  void require(bool cond, const std::string& what) {
    ++r_.checks;
    if (!cond) r_.discrepancies.push_back(what);
  }

  static std::string at(std::size_t i, const std::string& what) {
    std::ostringstream os;
    os << "step " << i << ": " << what;
    return os.str();
  }

 private:
  AuditReport& r_;
};

inline double crude_W(double h, double rate) {
  return rate == 0.0 ? 1.0 : exp_real(RealInterval(2.0) * h * RealInterval(rate)).hi();
}

inline void audit_refined(Auditor& a, std::size_t i, const StepCertificate& s) {
  const RefinedRecord& r = *s.refined;
  const ComparisonBounds cb = combine_refined(r.h, r.WF_sup, r.WF_end, r.G, r.mu, r.c_ft, r.c_tf, r.c_tt, r.ref_dev);
  a.require(r.h >= s.h, Auditor::at(i, "refined step length below h"));
  a.require(!r.closed || cb.closed, Auditor::at(i, "refined comparison system does not close"));
  if (!r.closed) return;
  a.require(r.W_sup >= cb.W_sup, Auditor::at(i, "refined W_sup below recomputed bound"));
  a.require(r.W_end >= cb.W_end, Auditor::at(i, "refined W_end below recomputed bound"));
  a.require(r.W_all >= cb.W_all, Auditor::at(i, "refined W_all below recomputed bound"));
  a.require(r.alpha >= cb.alpha, Auditor::at(i, "alpha below recomputed bound"));
  a.require(r.beta >= cb.beta, Auditor::at(i, "beta below recomputed bound"));
  a.require(r.gamma >= cb.gamma, Auditor::at(i, "gamma below recomputed bound"));
  a.require(r.delta >= cb.delta, Auditor::at(i, "delta below recomputed bound"));
}

struct LiveTerm {
  std::size_t index = 0;
  double coeff = 0.0;
};

}  // namespace detail

/// Re-verifies every inequality recorded in the certificate.
inline AuditReport audit_certificate(const ProofCertificate& pc, std::size_t max_terms = 40) {
  AuditReport rep;
  detail::Auditor a(rep);
  using detail::Auditor;

  if (pc.from_manifold) {
    a.require(radii_negative(pc.eq_bounds, pc.r_eq), "equilibrium radii polynomial not negative at r_eq");
    a.require(radii_negative(pc.eig_bounds, pc.r_eig), "eigenpair radii polynomial not negative at r_eig");
    a.require(radii_negative(pc.manifold_bounds, pc.r0), "manifold radii polynomial not negative at r0");
    a.require(pc.initial_tail >= pc.r0, "initial ball smaller than the manifold radius");
    const RealInterval psi = psi_of(pc.k);
    a.require(pc.psi.lo() <= psi.lo() && psi.hi() <= pc.psi.hi(), "psi does not enclose 2 pi k / 360");
  }

  const auto& st = pc.steps;
  a.require(!st.empty() || pc.verdict != Verdict::Heteroclinic, "Heteroclinic verdict without steps");
  std::vector<detail::LiveTerm> live;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const StepCertificate& s = st[i];
    // Time chain.
    a.require(s.t_a == (i == 0 ? 0.0 : st[i - 1].t_b), Auditor::at(i, "gap in the time chain"));
    a.require(s.t_b > s.t_a, Auditor::at(i, "empty step"));
    a.require(s.h >= (RealInterval(s.t_b) - RealInterval(s.t_a)).hi(), Auditor::at(i, "h below t_b - t_a"));
    a.require(s.t_b <= pc.horizon, Auditor::at(i, "step beyond the horizon"));
    // Epsilon chain: previous endpoint ball plus re-anchoring.
    const double prior = i == 0 ? pc.initial_tail : st[i - 1].rho_end;
    a.require(s.epsilon >= add_up(prior, s.reanchor), Auditor::at(i, "epsilon below prior ball + reanchor"));
    a.require(s.reanchor >= 0.0 && s.delta >= 0.0, Auditor::at(i, "negative reanchor or defect"));
    // Evolution bounds: each is at least the smaller of two valid bounds.
    double lo_all = detail::crude_W(s.h, s.rate), lo_sup = lo_all, lo_end = lo_all;
    a.require(s.rate >= 0.0, Auditor::at(i, "negative Gronwall rate"));
    if (s.refined) {
      detail::audit_refined(a, i, s);
      if (s.refined->closed) {
        lo_all = std::min(lo_all, s.refined->W_all);
        lo_sup = std::min(lo_sup, s.refined->W_sup);
        lo_end = std::min(lo_end, s.refined->W_end);
      }
    }
    a.require(s.W >= lo_all, Auditor::at(i, "W below its bounds"));
    a.require(s.W_start >= lo_sup, Auditor::at(i, "W_start below its bounds"));
    a.require(s.W_end >= lo_end, Auditor::at(i, "W_end below its bounds"));
    // Fixed point and local error.
    a.require(std::isfinite(s.rho) && step_map(s.W_start, s.W, s.epsilon, s.h, s.delta, s.rho).hi() <= s.rho,
              Auditor::at(i, "fixed-point inequality fails"));
    const double local = (RealInterval(s.W) * RealInterval(s.h) *
                          (RealInterval(2.0) * sqr(RealInterval(s.rho)) + RealInterval(s.delta))).hi();
    a.require(s.local >= local, Auditor::at(i, "local error below W h (2 rho^2 + delta)"));

    // Variation-of-constants replay.
    const double coeff = i == 0 ? s.epsilon : propagation_coeff(st[i - 1], s);
    a.require(s.prop_coeff >= coeff, Auditor::at(i, "pushed coefficient below its bound"));
    std::vector<double> coeffs;
    if (!has_reference(s)) {
      live.clear();
      a.require(s.prop_index.empty() && s.merges.empty(), Auditor::at(i, "terms kept across a step without reference"));
    } else {
      live.push_back({i, s.prop_coeff});
      bool same = s.prop_index.size() == live.size() && s.prop_norms.size() == live.size();
      for (std::size_t j = 0; same && j < live.size(); ++j) same = s.prop_index[j] == live[j].index;
      a.require(same, Auditor::at(i, "live terms differ from the record"));
      for (const auto& t : live) coeffs.push_back(t.coeff);
    }
    const bool sized = coeffs.size() == s.prop_norms.size();
    const double pb = sized ? propagation_bound(s.prop_norms, coeffs, s) : INFINITY;
    a.require(sized && s.prop_bound >= pb, Auditor::at(i, "propagation bound below the replayed sum"));
    for (const auto& [from, to] : s.merges) {
      auto f = std::find_if(live.begin(), live.end(), [&](const auto& t) { return t.index == from; });
      auto g = std::find_if(live.begin(), live.end(), [&](const auto& t) { return t.index == to; });
      const bool found = f != live.end() && g != live.end() && g == f + 1 && to >= 1 && to - 1 < st.size();
      a.require(found, Auditor::at(i, "merge of terms that are not adjacent and live"));
      if (!found) break;
      const StepCertificate& sj = st[to - 1];
      const auto it = std::find(sj.prop_index.begin(), sj.prop_index.end(), from);
      a.require(it != sj.prop_index.end(), Auditor::at(i, "merge without a recorded |Q(j, i)|"));
      if (it == sj.prop_index.end()) break;
      const double q = sj.prop_norms[static_cast<std::size_t>(it - sj.prop_index.begin())];
      g->coeff = add_up(g->coeff, mul_up(q, f->coeff));
      live.erase(f);
    }
    a.require(live.size() <= std::max<std::size_t>(2, max_terms), Auditor::at(i, "live terms above the budget"));

    // Endpoint error: the smaller of the per-step and propagated bounds.
    const double per_step = std::min(s.rho, step_map(s.W_end, s.W, s.epsilon, s.h, s.delta, s.rho).hi());
    a.require(s.rho_end <= s.rho, Auditor::at(i, "endpoint error above rho"));
    a.require(s.rho_end >= std::min(per_step, pb), Auditor::at(i, "endpoint error below both bounds"));
  }

  // Final state and trap.
  if (!st.empty()) {
    a.require(pc.final_state.tail >= st.back().rho_end, "final state tail below the last endpoint error");
    a.require(pc.final_state.nu == pc.nu, "final state weight differs from nu");
  }
  if (pc.verdict == Verdict::Heteroclinic) {
    a.require(pc.trap.has_value(), "Heteroclinic verdict without trap parameters");
    const TrapResult tr = trap_check(pc.final_state, Angle::parse(pc.theta_name));
    a.require(tr.trapped, "trap check fails on the final state: " + tr.reason);
    if (pc.trap) {
      const TrapParams& p = *pc.trap;
      a.require(trap_inequality(p.rho0, p.rho1, p.r), "recorded trap inequality fails");
      a.require(p.rho0 >= tr.params.rho0 && p.rho1 >= tr.params.rho1, "recorded trap radii below recomputed");
      a.require(in_sector(tr.params.z0, Angle::parse(pc.theta_name), p.rho0), "z0 outside the sector");
    }
    if (pc.from_manifold) a.require(pc.lambda.re.lo() > 0.0, "eigenvalue not provably unstable");
  }
  return rep;
}

inline AuditReport audit_json(const json& j, std::size_t max_terms = 40) {
  return audit_certificate(certificate_from_json(j), max_terms);
}

}  // namespace cap
