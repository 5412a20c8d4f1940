// Command-line driver: validated equilibrium, eigenpair and manifold, single
// proofs, sweeps, certificate audits and classical reference runs.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cap/cap.hpp"

namespace fs = std::filesystem;
using namespace cap;

namespace {

struct CommonArgs {
  std::string theta = "0";
  PipelineConfig cfg;
  std::string out = ".";
  double h_max = StepPolicy{}.h_max;
};

void add_common(CLI::App* app, CommonArgs& a) {
  app->add_option("--theta", a.theta, "rotation angle: 0, pi4, pi2 or radians")->capture_default_str();
  app->add_option("--N", a.cfg.N, "Fourier modes of equilibrium and manifold")->capture_default_str();
  app->add_option("--M", a.cfg.M, "Taylor order of the manifold")->capture_default_str();
  app->add_option("--K", a.cfg.K, "Galerkin order of the integrator")->capture_default_str();
  app->add_option("--nu", a.cfg.nu, "sequence-space weight")->capture_default_str()->check(CLI::Range(1.0, 10.0));
  app->add_option("--horizon", a.cfg.horizon, "integration horizon")->capture_default_str();
  app->add_option("--h-max", a.h_max, "largest time step")->capture_default_str();
  app->add_option("--out", a.out, "output directory")->capture_default_str();
}

PipelineConfig config_of(const CommonArgs& a) {
  PipelineConfig cfg = a.cfg;
  cfg.policy.h_max = a.h_max;
  return cfg;
}

void write_json(const fs::path& p, const json& j) { write_text_file(p.string(), j.dump(1) + "\n"); }

/// "0,45,90", "a:b" or "a:b:step" (inclusive), or empty.
std::vector<long> parse_ks(const std::string& spec) {
  std::vector<long> ks;
  if (spec.empty()) return ks;
  if (spec.find(':') != std::string::npos) {
    std::vector<long> f;
    std::stringstream ss(spec);
    std::string x;
    while (std::getline(ss, x, ':')) f.push_back(std::stol(x));
    if (f.size() < 2 || f.size() > 3) throw ConfigError("bad k range '" + spec + "'");
    const long step = f.size() == 3 ? f[2] : 1;
    if (step <= 0) throw ConfigError("k range step must be positive");
    for (long k = f[0]; k <= f[1]; k += step) ks.push_back(k);
    return ks;
  }
  std::stringstream ss(spec);
  std::string x;
  while (std::getline(ss, x, ',')) {
    if (!x.empty()) ks.push_back(std::stol(x));
  }
  return ks;
}

void check_ks(const std::vector<long>& ks) {
  for (long k : ks) {
    if (k < 0 || k > 360) throw ConfigError("k must lie in 0..360");
  }
}

void write_outputs(const fs::path& dir, const ProofCertificate& pc) {
  const std::string tag = pc.theta_name + "_" + std::to_string(pc.k);
  write_json(dir / ("cert_" + tag + ".json"), to_json(pc));
  std::ofstream csv(dir / ("series_" + tag + ".csv"));
  if (!csv) throw ConfigError("cannot write series file in " + dir.string());
  write_series_csv(csv, series_rows(pc));
}

void report(const ProofCertificate& pc) {
  std::cout << "theta=" << pc.theta_name << " k=" << pc.k << " verdict=" << to_string(pc.verdict)
            << " t=" << pc.t_final() << " steps=" << pc.steps.size();
  if (!pc.message.empty()) std::cout << " (" << pc.message << ")";
  std::cout << " " << pc.wall_time << "s" << std::endl;
}

int run_equilibrium(const CommonArgs& a) {
  const SymSeq bar = newton_equilibrium(u1_seed(a.cfg.N, a.cfg.nu));
  const EquilibriumCertificate c = validate_equilibrium(bar);
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "equilibrium.json", to_json(c));
  std::cout << "r_eq=" << c.r_eq << " residual=" << c.residual << std::endl;
  return 0;
}

int run_eigen(const CommonArgs& a) {
  const PipelineConfig cfg = config_of(a);
  const Angle theta = Angle::parse(a.theta);
  const EquilibriumCertificate eq = validate_equilibrium(newton_equilibrium(u1_seed(cfg.N, cfg.nu)));
  const auto ev = eig_finite(eq.a_tilde, theta.value(), cfg.N);
  const auto [lam, b] = base_eigenpair(eq.a_tilde, cfg);
  const EigenCertificate ec = validate_eigenpair(eq, lam * theta.phase.mid(), fp::to_seq(b, cfg.nu), theta);
  // Unstable pair at theta = 0, rotated: conj(lambda) and lambda.
  const ComplexBox base = ec.lambda_tilde * conj(theta.phase);
  const MorseIndex mi = morse_index(theta, {base, conj(base)});
  json spectrum = json::array();
  for (const auto& e : ev) spectrum.push_back(json::array({io::num(e.value.real()), io::num(e.value.imag())}));
  json j = to_json(ec);
  j["spectrum"] = spectrum;
  j["morse_index"] = mi.count;
  j["morse_determinate"] = mi.determinate;
  j["theta_star"] = io::interval(morse_boundary(base));
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / ("eigen_" + theta.name + ".json"), j);
  std::cout << "lambda=" << ec.lambda_tilde.mid() << " r_eig=" << ec.r_eig << " morse=" << mi.count << std::endl;
  return 0;
}

int run_manifold(const CommonArgs& a) {
  const ThetaContext ctx = build_context(Angle::parse(a.theta), config_of(a));
  fs::create_directories(a.out);
  write_json(fs::path(a.out) / ("manifold_" + ctx.theta.name + ".json"), to_json(ctx.manifold));
  std::cout << "r0=" << ctx.manifold.p.r0 << " lambda=" << ctx.manifold.lambda.mid() << std::endl;
  return 0;
}

int run_prove(const CommonArgs& a, long k) {
  check_ks({k});
  const ThetaContext ctx = build_context(Angle::parse(a.theta), config_of(a));
  fs::create_directories(a.out);
  const ProofCertificate pc = prove_angle(ctx, k);
  write_outputs(a.out, pc);
  report(pc);
  return pc.verdict == Verdict::Heteroclinic ? 0 : 1;
}

int run_sweep(const CommonArgs& a, const std::string& kspec, std::size_t count, unsigned jobs) {
  std::vector<long> ks = count > 0 ? even_angles(count) : parse_ks(kspec);
  check_ks(ks);
  const Angle theta = Angle::parse(a.theta);
  fs::create_directories(a.out);
  std::vector<ProofCertificate> certs;
  if (!ks.empty()) {
    const ThetaContext ctx = build_context(theta, config_of(a));
    certs = sweep(ctx, ks, jobs, [&](const ProofCertificate& pc) {
      write_outputs(a.out, pc);
      report(pc);
    });
  }
  const json sj = summary_json(theta.name, certs);
  write_json(fs::path(a.out) / ("summary_" + theta.name + ".json"), sj);
  std::cout << "heteroclinic " << sj["heteroclinic"] << "/" << certs.size() << ", failure ranges "
            << sj["failure_ranges"].dump() << std::endl;
  return sj["failed"].get<std::size_t>() == 0 ? 0 : 1;
}

int run_audit(const std::vector<std::string>& paths) {
  std::vector<fs::path> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string n = e.path().filename().string();
        if (n.rfind("cert_", 0) == 0 && e.path().extension() == ".json") files.push_back(e.path());
      }
    } else {
      files.emplace_back(p);
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::cerr << "audit: no certificates found" << std::endl;
    return 2;
  }
  std::size_t bad = 0;
  for (const auto& f : files) {
    const AuditReport r = audit_json(read_json_file(f.string()));
    std::cout << f.filename().string() << ": " << r.checks << " checks, " << r.discrepancies.size() << " discrepancies"
              << std::endl;
    for (const auto& d : r.discrepancies) std::cout << "  " << d << std::endl;
    if (!r.ok()) ++bad;
  }
  return bad == 0 ? 0 : 1;
}

int run_nonrigorous(const CommonArgs& a, const std::string& kspec, const NonrigorousOptions& opt) {
  std::vector<long> ks = parse_ks(kspec);
  check_ks(ks);
  const Angle theta = Angle::parse(a.theta);
  fs::create_directories(a.out);
  std::vector<NonrigorousRun> runs;
  if (!ks.empty()) {
    const ThetaContext ctx = build_context(theta, config_of(a));
    for (long k : ks) runs.push_back(nonrigorous_run(ctx, k, opt));
  }
  std::ofstream csv(fs::path(a.out) / ("nonrigorous_" + theta.name + ".csv"));
  write_nonrigorous_csv(csv, runs);
  const json j = nonrigorous_json(theta.name, runs);
  write_json(fs::path(a.out) / ("nonrigorous_" + theta.name + ".json"), j);
  std::cout << "breakdown at k = " << j["breakdown_k"].dump() << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Validated heteroclinic orbits of u_t = e^{i theta}(u_xx + u^2)"};
  app.require_subcommand(1);

  CommonArgs eq_a, eig_a, man_a, prove_a, sweep_a, nr_a;
  auto* eq = app.add_subcommand("equilibrium", "validate the equilibrium u_1");
  add_common(eq, eq_a);
  auto* eig = app.add_subcommand("eigen", "validate the unstable eigenpair and report the spectrum");
  add_common(eig, eig_a);
  auto* man = app.add_subcommand("manifold", "validate the unstable manifold chart");
  add_common(man, man_a);

  long k = 0;
  auto* prove = app.add_subcommand("prove", "prove one angle psi_k");
  add_common(prove, prove_a);
  prove->add_option("--k", k, "angle index, psi_k = 2 pi k / 360")->required();

  std::string kspec;
  std::size_t count = 0;
  unsigned jobs = 1;
  auto* sw = app.add_subcommand("sweep", "prove a list of angles");
  add_common(sw, sweep_a);
  sw->add_option("--k", kspec, "angles: a,b,c or lo:hi[:step]");
  sw->add_option("--count", count, "n evenly spaced angles instead of --k");
  sw->add_option("--jobs", jobs, "worker threads")->capture_default_str();

  std::vector<std::string> audit_paths;
  auto* au = app.add_subcommand("audit", "re-verify certificates from their JSON");
  au->add_option("paths", audit_paths, "certificate files or directories")->required();

  std::string nr_k;
  NonrigorousOptions nro;
  auto* nr = app.add_subcommand("nonrigorous", "classical runs with breakdown detection");
  add_common(nr, nr_a);
  nr->add_option("--k", nr_k, "angles: a,b,c or lo:hi[:step]");
  nr->add_option("--resolution", nro.resolution, "tail-fraction threshold")->capture_default_str();
  nr->add_option("--dt", nro.dt_sample, "sampling interval")->capture_default_str();
  nr->add_option("--classical-K", nro.K, "Galerkin order of the classical runs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*eq) return run_equilibrium(eq_a);
    if (*eig) return run_eigen(eig_a);
    if (*man) return run_manifold(man_a);
    if (*prove) return run_prove(prove_a, k);
    if (*sw) return run_sweep(sweep_a, kspec, count, jobs);
    if (*au) return run_audit(audit_paths);
    if (*nr) return run_nonrigorous(nr_a, nr_k, nro);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 2;
}
