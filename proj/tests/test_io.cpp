#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "support.hpp"

using namespace cap;

namespace {

// Homogeneous data in the decaying half plane; cheap, with a real step chain.
const ProofCertificate& homogeneous_certificate() {
  static const ProofCertificate pc = [] {
    PipelineConfig cfg;
    cfg.K = 8;
    return prove_data(BiSeq::delta(0, ComplexBox(-0.5, 0.0), 1.0, 8), Angle::zero(), cfg);
  }();
  return pc;
}

ProofCertificate with_verdict(long k, Verdict v) {
  ProofCertificate pc;
  pc.k = k;
  pc.verdict = v;
  pc.wall_time = 0.25;
  return pc;
}

}  // namespace

TEST(Numbers, FiniteValuesRoundTripExactly) {
  for (double x : {0.0, -0.0, 1.0 / 3.0, 1e-310, 1.7976931348623157e308, -2.5}) {
    const json j = io::num(x);
    EXPECT_TRUE(j.is_number());
    const double y = io::to_num(json::parse(j.dump()));
    EXPECT_EQ(y, x);
    EXPECT_EQ(std::signbit(y), std::signbit(x));
  }
}

TEST(Numbers, NonFiniteValuesBecomeStrings) {
  EXPECT_EQ(io::num(INFINITY), "inf");
  EXPECT_EQ(io::num(-INFINITY), "-inf");
  EXPECT_EQ(io::num(std::numeric_limits<double>::quiet_NaN()), "nan");
  EXPECT_EQ(io::to_num("inf"), INFINITY);
  EXPECT_EQ(io::to_num("-inf"), -INFINITY);
  EXPECT_TRUE(std::isnan(io::to_num("nan")));
  EXPECT_THROW(io::to_num(json(nullptr)), ConfigError);
  EXPECT_THROW(io::to_num("one"), ConfigError);
}

TEST(Numbers, IntervalsAndBoxesRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 100; ++i) {
    const ComplexBox z = cap::testing::random_box(rng);
    const ComplexBox w = io::to_box(json::parse(io::box(z).dump()));
    EXPECT_EQ(w.re.lo(), z.re.lo());
    EXPECT_EQ(w.re.hi(), z.re.hi());
    EXPECT_EQ(w.im.lo(), z.im.lo());
    EXPECT_EQ(w.im.hi(), z.im.hi());
  }
}

TEST(Certificate, JsonRoundTripIsLossless) {
  const ProofCertificate& pc = homogeneous_certificate();
  ASSERT_EQ(pc.verdict, Verdict::Heteroclinic) << pc.message;
  const std::string s = to_json(pc).dump();
  const ProofCertificate back = certificate_from_json(json::parse(s));
  EXPECT_EQ(to_json(back).dump(), s);
  EXPECT_EQ(back.steps.size(), pc.steps.size());
  EXPECT_EQ(back.verdict, pc.verdict);
  EXPECT_EQ(back.t_final(), pc.t_final());
}

TEST(Certificate, WallTimeIsNotWritten) {
  ProofCertificate a = homogeneous_certificate(), b = a;
  b.wall_time = a.wall_time + 100.0;
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_FALSE(to_json(a).contains("wall_time"));
}

TEST(Certificate, VerdictNamesRoundTrip) {
  for (Verdict v : {Verdict::Heteroclinic, Verdict::StepFailed, Verdict::ApproxFailed, Verdict::HorizonReached}) {
    EXPECT_EQ(verdict_from_string(to_string(v)), v);
  }
  EXPECT_THROW(verdict_from_string("Proved"), ConfigError);
}

TEST(Certificate, AuditPassesTheGenuineRecord) {
  const AuditReport r = audit_json(to_json(homogeneous_certificate()));
  EXPECT_TRUE(r.ok()) << r.discrepancies.front();
  EXPECT_GT(r.checks, 10u);
}

TEST(Certificate, AuditCatchesTampering) {
  const json base = to_json(homogeneous_certificate());
  auto expect_caught = [&](const char* what, auto&& edit) {
    json j = base;
    edit(j);
    EXPECT_FALSE(audit_json(j).ok()) << what;
  };
  expect_caught("shrunken rho", [](json& j) { j["steps"][0]["rho"] = 1e-300; });
  expect_caught("shrunken epsilon", [](json& j) { j["steps"][0]["epsilon"] = 0.0; });
  expect_caught("time gap", [](json& j) { j["steps"][0]["t_a"] = 1e-3; });
  expect_caught("shrunken W", [](json& j) { j["steps"][0]["W"] = 0.5; });
  expect_caught("lost trap", [](json& j) { j["trap"] = nullptr; });
  expect_caught("final state outside the sector", [](json& j) {
    j["final_state"]["re"][j["final_state"]["re"].size() / 2] = json::array({0.5, 0.6});
  });
}

TEST(Summary, KeysAndCounts) {
  const std::vector<ProofCertificate> certs{with_verdict(0, Verdict::Heteroclinic), with_verdict(10, Verdict::StepFailed),
                                            with_verdict(20, Verdict::ApproxFailed), with_verdict(30, Verdict::Heteroclinic),
                                            with_verdict(40, Verdict::HorizonReached)};
  const json s = summary_json("pi4", certs);
  for (const char* key : {"theta_name", "angles", "heteroclinic", "failed", "failure_ranges", "circular_bands", "wall_time"}) {
    EXPECT_TRUE(s.contains(key)) << key;
  }
  EXPECT_EQ(s["heteroclinic"], 2);
  EXPECT_EQ(s["failed"], 3);
  ASSERT_EQ(s["failure_ranges"].size(), 2u);
  EXPECT_EQ(s["failure_ranges"][0]["lo"], 10);
  EXPECT_EQ(s["failure_ranges"][0]["hi"], 20);
  EXPECT_EQ(s["failure_ranges"][1]["lo"], 40);
  EXPECT_EQ(s["circular_bands"], 2);
  EXPECT_DOUBLE_EQ(io::to_num(s["wall_time"]), 1.25);
  EXPECT_EQ(s["angles"][2]["verdict"], "ApproxFailed");
}

TEST(Summary, EmptySweepIsEmpty) {
  const json s = summary_json("zero", {});
  EXPECT_TRUE(s["angles"].empty());
  EXPECT_TRUE(s["failure_ranges"].empty());
  EXPECT_EQ(s["heteroclinic"], 0);
  EXPECT_EQ(s["circular_bands"], 0);
}

TEST(SeriesCsv, HeaderAndRows) {
  const auto rows = series_rows(homogeneous_certificate());
  std::ostringstream os;
  write_series_csv(os, rows);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "k,t,supnorm_upper,rho");
  std::istringstream is(text);
  const auto back = read_series_csv(is);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].t, rows[i].t);
    EXPECT_EQ(back[i].supnorm, rows[i].supnorm);
    EXPECT_EQ(back[i].rho, rows[i].rho);
  }
}

TEST(SeriesCsv, TimeIsStrictlyIncreasing) {
  const auto rows = series_rows(homogeneous_certificate());
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows.front().t, 0.0);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i].t, rows[i - 1].t);
}

TEST(SeriesCsv, BadInputThrows) {
  std::istringstream wrong("k,t,norm,rho\n0,0,1,0\n");
  EXPECT_THROW(read_series_csv(wrong), ConfigError);
  std::istringstream short_row("k,t,supnorm_upper,rho\n0,0.5\n");
  EXPECT_THROW(read_series_csv(short_row), ConfigError);
  std::istringstream empty("");
  EXPECT_TRUE(read_series_csv(empty).empty());
}

TEST(NonrigorousCsv, RowsPerSample) {
  NonrigorousRun a, b;
  a.k = 3;
  a.samples = {{0.0, 1.0}, {0.5, 0.25}};
  b.k = 7;
  b.breakdown = true;
  b.reason = "norm above 1e6";
  b.samples = {{0.0, 2.0}};
  std::ostringstream os;
  write_nonrigorous_csv(os, {a, b});
  EXPECT_EQ(os.str(), "k,t,supnorm\n3,0,1\n3,0.5,0.25\n7,0,2\n");
  const json j = nonrigorous_json("pi4", {a, b});
  EXPECT_EQ(j["theta_name"], "pi4");
  EXPECT_EQ(j["runs"].size(), 2u);
  EXPECT_EQ(j["breakdown_k"], json::array({7}));
  EXPECT_EQ(j["runs"][1]["reason"], "norm above 1e6");
}

TEST(Files, MissingInputsAreConfigErrors) {
  EXPECT_THROW(read_json_file("/nonexistent/cert.json"), ConfigError);
  EXPECT_THROW(write_text_file("/nonexistent/dir/x.json", "{}"), ConfigError);
}
