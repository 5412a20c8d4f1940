#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <limits>
#include <numbers>

#include "support.hpp"

using namespace cap;

namespace {

const EquilibriumCertificate& u1_certificate() {
  static const EquilibriumCertificate c = validate_equilibrium(newton_equilibrium(u1_seed(40)));
  return c;
}

const ThetaContext& context(const Angle& th) {
  static std::map<std::string, ThetaContext> cache;
  auto it = cache.find(th.name);
  if (it == cache.end()) it = cache.emplace(th.name, build_context(th, PipelineConfig{})).first;
  return it->second;
}

// e^{i theta}(L b + 2 a*b) - lambda b, from (g(a+b) - g(a-b)) / 2.
SymSeq eigen_residual(const SymSeq& a, const SymSeq& b, const ComplexBox& lambda, const Angle& th) {
  SymSeq d = apply_g(a + b, th) - apply_g(a - b, th);
  d = ComplexBox(0.5, 0.0) * d;
  return d - lambda * b;
}

EquilibriumCertificate zero_equilibrium(std::size_t N) {
  EquilibriumCertificate z;
  z.a_tilde = SymSeq(N, 1.0);
  return z;
}

}  // namespace

TEST(Newton, ZeroGuessStaysAtZero) {
  const SymSeq z = newton_equilibrium(SymSeq(8, 1.0));
  EXPECT_EQ(coeff_norm_upper(z), 0.0);
}

TEST(Newton, NonFiniteGuessFails) {
  SymSeq g(4, 1.0);
  g[1] = ComplexBox(std::numeric_limits<double>::quiet_NaN(), 0.0);
  EXPECT_THROW(newton_equilibrium(g), NewtonFailed);
}

TEST(Newton, SeedConvergesToNontrivialEquilibrium) {
  const SymSeq a = newton_equilibrium(u1_seed(30));
  EXPECT_LT(norm_upper(apply_g(a, Angle::zero())), 1e-10);
  EXPECT_GT(norm_upper(a), 10.0);
}

TEST(EquilibriumValidation, SeedValidatesWithSmallRadius) {
  const EquilibriumCertificate& c = u1_certificate();
  EXPECT_GT(c.r_eq, 0.0);
  EXPECT_LE(c.r_eq, 1e-6);
  EXPECT_TRUE(radii_negative(c.bounds, c.r_eq));
  EXPECT_LT(radii_polynomial(c.bounds, c.r_eq).hi(), 0.0);
}

TEST(EquilibriumValidation, SpoiledModeOneFails) {
  SymSeq a = u1_certificate().a_tilde;
  a[1] += ComplexBox(5.0, 0.0);
  try {
    validate_equilibrium(a);
    FAIL() << "spoiled input validated";
  } catch (const ValidationFailed& e) {
    EXPECT_EQ(e.bound(), "Y0");
  }
}

TEST(EquilibriumValidation, MildSpoilStillEnclosesTheTrueZero) {
  // A shift of 0.5 in mode 1 moves the point by 1.0 in the norm; any valid
  // ball around it must reach back to the genuine equilibrium.
  const EquilibriumCertificate& c = u1_certificate();
  SymSeq a = c.a_tilde;
  a[1] += ComplexBox(0.5, 0.0);
  const EquilibriumCertificate s = validate_equilibrium(a);
  EXPECT_GE(s.r_eq + c.r_eq, 1.0);
  EXPECT_GT(s.r_eq, 1e5 * c.r_eq);
}

TEST(EquilibriumValidation, ZeroIsExcluded) {
  try {
    validate_equilibrium(SymSeq(10, 1.0));
    FAIL() << "zero equilibrium validated";
  } catch (const ValidationFailed& e) {
    EXPECT_EQ(e.bound(), "SingularApproxInverse");
  }
}

TEST(EquilibriumValidation, ResidualIsConsistentWithTheRadius) {
  const EquilibriumCertificate& c = u1_certificate();
  // r >= Y0 whenever p(r) < 0, and Y0 bounds |A g(a)|.
  EXPECT_GE(c.r_eq, c.bounds.Y0);
  EXPECT_LE(c.residual, 1e-8);
}

TEST(Spectrum, LeadingEigenvaluesAtThetaZero) {
  const auto ev = eig_finite(u1_certificate().a_tilde, 0.0, 40);
  ASSERT_GE(ev.size(), 3u);
  const std::complex<double> l1(17.696, 35.391);
  const double d0 = std::min(std::abs(ev[0].value - l1), std::abs(ev[0].value - std::conj(l1)));
  const double d1 = std::min(std::abs(ev[1].value - l1), std::abs(ev[1].value - std::conj(l1)));
  EXPECT_LT(d0, 0.5);
  EXPECT_LT(d1, 0.5);
  EXPECT_NEAR(std::abs(ev[0].value.imag() + ev[1].value.imag()), 0.0, 1e-6);
  EXPECT_NEAR(ev[2].value.real(), -111.09, 1.0);
  EXPECT_NEAR(ev[2].value.imag(), 0.0, 1e-6);
}

TEST(Spectrum, DiagonalAtZeroEquilibrium) {
  const double th = 0.7;
  const auto ev = eig_finite(SymSeq(6, 1.0), th, 6);
  ASSERT_EQ(ev.size(), 7u);
  std::vector<bool> seen(7, false);
  for (const auto& e : ev) {
    const double k2 = -std::real(e.value * std::polar(1.0, -th)) / (4 * std::numbers::pi * std::numbers::pi);
    const long k = std::lround(std::sqrt(std::max(0.0, k2)));
    ASSERT_LE(k, 6);
    EXPECT_LT(std::abs(e.value - (-4.0 * std::numbers::pi * std::numbers::pi * k * k) * std::polar(1.0, th)),
              1e-9 * (1 + k * k));
    seen[static_cast<std::size_t>(k)] = true;
  }
  EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }));
}

TEST(Spectrum, TopEigenvaluesConvergeUnderRefinement) {
  const SymSeq& a = u1_certificate().a_tilde;
  const auto e30 = eig_finite(a, 0.0, 30), e40 = eig_finite(a, 0.0, 40);
  for (int i = 0; i < 4; ++i) {
    double best = INFINITY;
    for (int j = 0; j < 4; ++j) best = std::min(best, std::abs(e30[i].value - e40[j].value));
    EXPECT_LT(best, 1e-6) << i;
  }
}

TEST(EigenValidation, DiagonalPairValidatesTightly) {
  for (const Angle& th : {Angle::zero(), Angle::quarter_pi(), Angle::half_pi()}) {
    const double l = -4 * std::numbers::pi * std::numbers::pi;
    const std::complex<double> lam = l * th.phase.mid();
    const EigenCertificate c = validate_eigenpair(zero_equilibrium(8), lam, SymSeq::delta(1, ComplexBox(1.0, 0.0), 1.0, 8), th);
    EXPECT_LT(c.r_eig, 1e-12) << th.name;
    EXPECT_TRUE(c.lambda_tilde.contains(lam));
    EXPECT_EQ(c.k_star, 1u);
  }
}

TEST(EigenValidation, ZeroVectorIsRejected) {
  EXPECT_THROW(validate_eigenpair(zero_equilibrium(4), {1.0, 0.0}, SymSeq(4, 1.0), Angle::zero()), ValidationFailed);
}

TEST(EigenValidation, PipelinePairIsUnstableAndNormalized) {
  for (const Angle& th : {Angle::zero(), Angle::quarter_pi(), Angle::half_pi()}) {
    const EigenCertificate& c = context(th).eig;
    EXPECT_GT(c.lambda_tilde.re.lo(), 0.0) << th.name;
    EXPECT_LT(c.r_eig, 1e-6);
    EXPECT_EQ(c.b_tilde[c.k_star].mid(), c.target);
    EXPECT_NEAR(std::abs(c.target), PipelineConfig{}.eigen_scale, 1e-12);
  }
}

TEST(EigenValidation, RotatingThetaRotatesTheEigenvalue) {
  const ThetaContext& z = context(Angle::zero());
  const SymSeq& a = z.eq.a_tilde;
  const SymSeq& b = z.eig.b_tilde;
  const ComplexBox lam = z.eig.lambda_bar;
  const double base = norm_upper(eigen_residual(a, b, lam, Angle::zero()));
  EXPECT_LT(base, 1e-6);
  for (double t : {0.3, 1.0, 1.5707963267948966, 2.5, -0.8}) {
    const Angle th = Angle::radians(t);
    const double r = norm_upper(eigen_residual(a, b, th.phase * lam, th));
    EXPECT_LE(r, base * (1 + 1e-6) + 1e-9) << t;
  }
  // Enclosures at the pipeline angles agree with the rotated base value.
  for (const Angle& th : {Angle::quarter_pi(), Angle::half_pi()}) {
    const ComplexBox rot = th.phase * z.eig.lambda_tilde;
    const ComplexBox& got = context(th).eig.lambda_tilde;
    EXPECT_TRUE(rot.re.intersects(got.re) && rot.im.intersects(got.im)) << th.name;
  }
}

TEST(Morse, IndexAtTheNamedAngles) {
  const EigenCertificate& c = context(Angle::zero()).eig;
  const std::vector<ComplexBox> pair{c.lambda_tilde, conj(c.lambda_tilde)};
  const MorseIndex m0 = morse_index(Angle::zero(), pair);
  EXPECT_TRUE(m0.determinate);
  EXPECT_EQ(m0.count, 2);
  const MorseIndex m2 = morse_index(Angle::half_pi(), pair);
  EXPECT_TRUE(m2.determinate);
  EXPECT_EQ(m2.count, 1);
}

TEST(Morse, BoundaryAngle) {
  const EigenCertificate& c = context(Angle::zero()).eig;
  const ComplexBox lower = c.lambda_tilde.im.hi() < 0.0 ? c.lambda_tilde : conj(c.lambda_tilde);
  const RealInterval ts = morse_boundary(lower);
  EXPECT_NEAR(ts.mid(), 0.463, 0.01);
  const std::complex<double> l = lower.mid();
  EXPECT_NEAR(ts.mid(), std::numbers::pi / 2 + std::atan2(l.imag(), l.real()), 1e-9);
  const Angle star{"star", ts, unit_phase(ts)};
  EXPECT_FALSE(morse_index(star, {c.lambda_tilde, conj(c.lambda_tilde)}).determinate);
}
