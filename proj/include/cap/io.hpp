#pragma once

// JSON and CSV forms of certificates and sweep summaries. Doubles are written
// with round-trip precision; non-finite values become the strings "inf",
// "-inf" and "nan" so nothing is silently turned into null.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cap/errors.hpp"
#include "cap/pipeline.hpp"

namespace cap {

using json = nlohmann::json;

namespace io {

inline json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

inline double to_num(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw ConfigError("json: expected a number, got " + j.dump());
}

inline json interval(const RealInterval& x) { return json::array({num(x.lo()), num(x.hi())}); }
inline RealInterval to_interval(const json& j) { return {to_num(j.at(0)), to_num(j.at(1))}; }

inline json box(const ComplexBox& z) { return json{{"re", interval(z.re)}, {"im", interval(z.im)}}; }
inline ComplexBox to_box(const json& j) { return {to_interval(j.at("re")), to_interval(j.at("im"))}; }

inline json radii(const RadiiBounds& b) {
  return json{{"Y0", num(b.Y0)}, {"Z0", num(b.Z0)}, {"Z1", num(b.Z1)}, {"Z2", num(b.Z2)}};
}
inline RadiiBounds to_radii(const json& j) {
  return {to_num(j.at("Y0")), to_num(j.at("Z0")), to_num(j.at("Z1")), to_num(j.at("Z2"))};
}

/// Two-sided sequence: order, nu, tail and per-mode boxes from -K to K.
inline json biseq(const BiSeq& a) {
  json re = json::array(), im = json::array();
  for (const auto& c : a.coeffs) {
    re.push_back(interval(c.re));
    im.push_back(interval(c.im));
  }
  return json{{"order", a.order()}, {"nu", num(a.nu)}, {"tail", num(a.tail)}, {"re", re}, {"im", im}};
}
inline BiSeq to_biseq(const json& j) {
  BiSeq a(j.at("order").get<std::size_t>(), to_num(j.at("nu")));
  a.tail = to_num(j.at("tail"));
  const json& re = j.at("re");
  const json& im = j.at("im");
  if (re.size() != a.coeffs.size() || im.size() != a.coeffs.size()) throw ConfigError("json: sequence length mismatch");
  for (std::size_t i = 0; i < a.coeffs.size(); ++i) a.coeffs[i] = {to_interval(re[i]), to_interval(im[i])};
  return a;
}

inline json refined(const RefinedRecord& r) {
  return json{{"K_fin", r.K_fin},   {"p", r.p},           {"h", num(r.h)},          {"WF_sup", num(r.WF_sup)},
              {"WF_end", num(r.WF_end)}, {"ref_dev", num(r.ref_dev)}, {"ref_norm", num(r.ref_norm)},
              {"G", num(r.G)},      {"mu", num(r.mu)},    {"c_ft", num(r.c_ft)},    {"c_tf", num(r.c_tf)},
              {"c_tt", num(r.c_tt)}, {"defect", num(r.defect)}, {"closed", r.closed}, {"W_sup", num(r.W_sup)},
              {"W_end", num(r.W_end)}, {"W_all", num(r.W_all)}, {"alpha", num(r.alpha)}, {"beta", num(r.beta)},
              {"gamma", num(r.gamma)}, {"delta", num(r.delta)}};
}
inline RefinedRecord to_refined(const json& j) {
  RefinedRecord r;
  r.K_fin = j.at("K_fin").get<std::size_t>();
  r.p = j.at("p").get<std::size_t>();
  r.h = to_num(j.at("h"));
  r.WF_sup = to_num(j.at("WF_sup"));
  r.WF_end = to_num(j.at("WF_end"));
  r.ref_dev = to_num(j.at("ref_dev"));
  r.ref_norm = to_num(j.at("ref_norm"));
  r.G = to_num(j.at("G"));
  r.mu = to_num(j.at("mu"));
  r.c_ft = to_num(j.at("c_ft"));
  r.c_tf = to_num(j.at("c_tf"));
  r.c_tt = to_num(j.at("c_tt"));
  r.defect = to_num(j.at("defect"));
  r.closed = j.at("closed").get<bool>();
  r.W_sup = to_num(j.at("W_sup"));
  r.W_end = to_num(j.at("W_end"));
  r.W_all = to_num(j.at("W_all"));
  r.alpha = to_num(j.at("alpha"));
  r.beta = to_num(j.at("beta"));
  r.gamma = to_num(j.at("gamma"));
  r.delta = to_num(j.at("delta"));
  return r;
}

/// Step record. Endpoint boxes are stored once per certificate (the final
/// state); each step keeps only the norm bound.
inline json step(const StepCertificate& s) {
  json j{{"t_a", num(s.t_a)},         {"t_b", num(s.t_b)},       {"h", num(s.h)},
         {"epsilon", num(s.epsilon)}, {"reanchor", num(s.reanchor)}, {"delta", num(s.delta)},
         {"W", num(s.W)},             {"W_start", num(s.W_start)}, {"W_end", num(s.W_end)},
         {"rate", num(s.rate)},       {"rho", num(s.rho)},       {"local", num(s.local)},
         {"rho_end", num(s.rho_end)}, {"prop_coeff", num(s.prop_coeff)}, {"prop_bound", num(s.prop_bound)},
         {"endpoint_norm", num(s.endpoint_norm)}};
  j["refined"] = s.refined ? refined(*s.refined) : json(nullptr);
  j["prop_index"] = s.prop_index;
  json pn = json::array();
  for (double x : s.prop_norms) pn.push_back(num(x));
  j["prop_norms"] = pn;
  json mg = json::array();
  for (const auto& [a, b] : s.merges) mg.push_back(json::array({a, b}));
  j["merges"] = mg;
  return j;
}
inline StepCertificate to_step(const json& j) {
  StepCertificate s;
  s.t_a = to_num(j.at("t_a"));
  s.t_b = to_num(j.at("t_b"));
  s.h = to_num(j.at("h"));
  s.epsilon = to_num(j.at("epsilon"));
  s.reanchor = to_num(j.at("reanchor"));
  s.delta = to_num(j.at("delta"));
  s.W = to_num(j.at("W"));
  s.W_start = to_num(j.at("W_start"));
  s.W_end = to_num(j.at("W_end"));
  s.rate = to_num(j.at("rate"));
  s.rho = to_num(j.at("rho"));
  s.local = to_num(j.at("local"));
  s.rho_end = to_num(j.at("rho_end"));
  s.prop_coeff = to_num(j.at("prop_coeff"));
  s.prop_bound = to_num(j.at("prop_bound"));
  if (!j.at("refined").is_null()) s.refined = to_refined(j.at("refined"));
  s.prop_index = j.at("prop_index").get<std::vector<std::size_t>>();
  for (const auto& x : j.at("prop_norms")) s.prop_norms.push_back(to_num(x));
  for (const auto& m : j.at("merges")) s.merges.emplace_back(m.at(0).get<std::size_t>(), m.at(1).get<std::size_t>());
  s.endpoint_norm = to_num(j.at("endpoint_norm"));
  return s;
}

inline json trap(const TrapParams& p) {
  return json{{"rho0", num(p.rho0)}, {"rho1", num(p.rho1)}, {"r", num(p.r)},
              {"theta", num(p.theta)}, {"z0", box(p.z0)}, {"phi_norm", num(p.phi_norm)}};
}
inline TrapParams to_trap(const json& j) {
  TrapParams p;
  p.rho0 = to_num(j.at("rho0"));
  p.rho1 = to_num(j.at("rho1"));
  p.r = to_num(j.at("r"));
  p.theta = to_num(j.at("theta"));
  p.z0 = to_box(j.at("z0"));
  p.phi_norm = to_num(j.at("phi_norm"));
  return p;
}

}  // namespace io

/// Certificate JSON. Wall time is left out so reruns are byte-identical.
inline json to_json(const ProofCertificate& pc) {
  json steps = json::array();
  for (const auto& s : pc.steps) steps.push_back(io::step(s));
  json j{{"theta_name", pc.theta_name},
         {"theta", io::num(pc.theta)},
         {"k", pc.k},
         {"psi", io::interval(pc.psi)},
         {"config", {{"N", pc.N}, {"M", pc.M}, {"K", pc.K}, {"nu", io::num(pc.nu)}, {"horizon", io::num(pc.horizon)}}},
         {"from_manifold", pc.from_manifold},
         {"equilibrium", {{"bounds", io::radii(pc.eq_bounds)}, {"r", io::num(pc.r_eq)}}},
         {"eigenpair", {{"bounds", io::radii(pc.eig_bounds)}, {"r", io::num(pc.r_eig)}}},
         {"manifold", {{"bounds", io::radii(pc.manifold_bounds)}, {"r0", io::num(pc.r0)}, {"lambda", io::box(pc.lambda)}}},
         {"initial", {{"norm", io::num(pc.initial_norm)}, {"tail", io::num(pc.initial_tail)}}},
         {"steps", steps},
         {"final_state", io::biseq(pc.final_state)},
         {"verdict", to_string(pc.verdict)},
         {"message", pc.message}};
  j["trap"] = pc.trap ? io::trap(*pc.trap) : json(nullptr);
  return j;
}

inline ProofCertificate certificate_from_json(const json& j) {
  ProofCertificate pc;
  pc.theta_name = j.at("theta_name").get<std::string>();
  pc.theta = io::to_num(j.at("theta"));
  pc.k = j.at("k").get<long>();
  pc.psi = io::to_interval(j.at("psi"));
  const json& c = j.at("config");
  pc.N = c.at("N").get<std::size_t>();
  pc.M = c.at("M").get<std::size_t>();
  pc.K = c.at("K").get<std::size_t>();
  pc.nu = io::to_num(c.at("nu"));
  pc.horizon = io::to_num(c.at("horizon"));
  pc.from_manifold = j.at("from_manifold").get<bool>();
  pc.eq_bounds = io::to_radii(j.at("equilibrium").at("bounds"));
  pc.r_eq = io::to_num(j.at("equilibrium").at("r"));
  pc.eig_bounds = io::to_radii(j.at("eigenpair").at("bounds"));
  pc.r_eig = io::to_num(j.at("eigenpair").at("r"));
  pc.manifold_bounds = io::to_radii(j.at("manifold").at("bounds"));
  pc.r0 = io::to_num(j.at("manifold").at("r0"));
  pc.lambda = io::to_box(j.at("manifold").at("lambda"));
  pc.initial_norm = io::to_num(j.at("initial").at("norm"));
  pc.initial_tail = io::to_num(j.at("initial").at("tail"));
  for (const auto& s : j.at("steps")) pc.steps.push_back(io::to_step(s));
  pc.final_state = io::to_biseq(j.at("final_state"));
  pc.verdict = verdict_from_string(j.at("verdict").get<std::string>());
  pc.message = j.at("message").get<std::string>();
  if (!j.at("trap").is_null()) pc.trap = io::to_trap(j.at("trap"));
  return pc;
}

inline json to_json(const SymSeq& a) {
  json re = json::array(), im = json::array();
  for (const auto& c : a.coeffs) {
    re.push_back(io::interval(c.re));
    im.push_back(io::interval(c.im));
  }
  return json{{"order", a.order()}, {"nu", io::num(a.nu)}, {"tail", io::num(a.tail)}, {"re", re}, {"im", im}};
}

inline json to_json(const EquilibriumCertificate& c) {
  return json{{"a_tilde", to_json(c.a_tilde)}, {"r_eq", io::num(c.r_eq)}, {"nu", io::num(c.nu)},
              {"bounds", io::radii(c.bounds)}, {"residual", io::num(c.residual)}};
}

inline json to_json(const EigenCertificate& c) {
  return json{{"theta_name", c.theta_name},        {"lambda", io::box(c.lambda_tilde)},
              {"r_eig", io::num(c.r_eig)},       {"k_star", c.k_star},
              {"target", json::array({io::num(c.target.real()), io::num(c.target.imag())})},
              {"bounds", io::radii(c.bounds)},  {"b_tilde", to_json(c.b_tilde)}};
}

inline json to_json(const ManifoldCertificate& c) {
  return json{{"theta_name", c.theta_name}, {"theta", io::num(c.theta)},  {"N", c.p.N},
              {"M", c.p.M},                 {"nu", io::num(c.p.nu)},      {"r0", io::num(c.p.r0)},
              {"taylor_tail", io::num(c.p.taylor_tail)}, {"lambda", io::box(c.lambda)},
              {"bounds", io::radii(c.bounds)}, {"r_eq", io::num(c.r_eq)}, {"r_eig", io::num(c.r_eig)}};
}

/// Sweep summary: per-angle verdicts and the maximal failing runs of `ks`.
inline json summary_json(const std::string& theta_name, const std::vector<ProofCertificate>& certs) {
  std::vector<long> ks;
  std::vector<bool> failed;
  json entries = json::array();
  double wall = 0.0;
  for (const auto& pc : certs) {
    ks.push_back(pc.k);
    failed.push_back(pc.verdict != Verdict::Heteroclinic);
    wall += pc.wall_time;
    entries.push_back({{"k", pc.k},
                       {"verdict", to_string(pc.verdict)},
                       {"t_final", io::num(pc.t_final())},
                       {"steps", pc.steps.size()},
                       {"message", pc.message},
                       {"wall_time", io::num(pc.wall_time)}});
  }
  json ranges = json::array();
  for (const auto& r : failure_ranges(ks, failed)) ranges.push_back({{"lo", r.lo}, {"hi", r.hi}});
  const auto ok = static_cast<std::size_t>(std::count(failed.begin(), failed.end(), false));
  return json{{"theta_name", theta_name},
              {"angles", entries},
              {"heteroclinic", ok},
              {"failed", failed.size() - ok},
              {"failure_ranges", ranges},
              {"circular_bands", circular_bands(failed)},
              {"wall_time", io::num(wall)}};
}

/// Nonrigorous samples: rows k,t,supnorm.
inline void write_nonrigorous_csv(std::ostream& os, const std::vector<NonrigorousRun>& runs) {
  os << "k,t,supnorm\n" << std::setprecision(17);
  for (const auto& r : runs) {
    for (const auto& [t, n] : r.samples) os << r.k << ',' << t << ',' << n << '\n';
  }
}

inline json nonrigorous_json(const std::string& theta_name, const std::vector<NonrigorousRun>& runs) {
  json rows = json::array();
  json flagged = json::array();
  for (const auto& r : runs) {
    if (r.breakdown) flagged.push_back(r.k);
    rows.push_back({{"k", r.k},
                    {"breakdown", r.breakdown},
                    {"reason", r.reason},
                    {"t_end", io::num(r.t_end)},
                    {"max_norm", io::num(r.max_norm)},
                    {"max_tail_fraction", io::num(r.max_tail_fraction)}});
  }
  return json{{"theta_name", theta_name}, {"runs", rows}, {"breakdown_k", flagged}};
}

/// CSV with header k,t,supnorm_upper,rho.
inline void write_series_csv(std::ostream& os, const std::vector<SeriesRow>& rows, bool header = true) {
  if (header) os << "k,t,supnorm_upper,rho\n";
  os << std::setprecision(17);
  for (const auto& r : rows) os << r.k << ',' << r.t << ',' << r.supnorm << ',' << r.rho << '\n';
}

inline std::vector<SeriesRow> read_series_csv(std::istream& is) {
  std::vector<SeriesRow> rows;
  std::string line;
  if (!std::getline(is, line)) return rows;
  if (line != "k,t,supnorm_upper,rho") throw ConfigError("series csv: unexpected header '" + line + "'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[4];
    for (auto& x : f) {
      if (!std::getline(ss, x, ',')) throw ConfigError("series csv: short row '" + line + "'");
    }
    rows.push_back({std::stol(f[0]), std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
  }
  return rows;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return json::parse(in);
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
}

}  // namespace cap
