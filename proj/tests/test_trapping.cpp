#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace cap;

TEST(SplitState, PureModeZeroHasNoRemainder) {
  const SplitState s = split_state(BiSeq::delta(0, ComplexBox(-0.3, 0.2), 1.0, 4));
  EXPECT_EQ(s.phi_norm, 0.0);
  EXPECT_TRUE(s.z0.contains(std::complex<double>(-0.3, 0.2)));
}

TEST(SplitState, SymmetricPairCountsTwiceWithTheWeight) {
  BiSeq a(2, 1.25);
  a[0] = ComplexBox(-1.0, 0.0);
  a[1] = a[-1] = ComplexBox(0.3, 0.4);
  const SplitState s = split_state(a);
  EXPECT_GE(s.phi_norm, 2 * 0.5 * 1.25);
  EXPECT_LE(s.phi_norm, 2 * 0.5 * 1.25 * (1 + 1e-14));
}

TEST(SplitState, TailGrowsBothParts) {
  BiSeq a = BiSeq::delta(0, ComplexBox(-1.0, 0.0), 1.0, 2);
  a.tail = 1e-3;
  const SplitState s = split_state(a);
  EXPECT_GE(s.phi_norm, 1e-3);
  EXPECT_TRUE(s.z0.contains(std::complex<double>(-1.0 + 1e-3, 1e-3)));
}

TEST(Sector, HalfPlaneChecks) {
  EXPECT_TRUE(in_sector(ComplexBox(-1.0, 0.0), Angle::zero(), 1.0));
  EXPECT_FALSE(in_sector(ComplexBox(1.0, 0.0), Angle::zero(), 1.0));
  EXPECT_TRUE(in_sector(ComplexBox(0.0, 1.0), Angle::half_pi(), 1.0));
  EXPECT_FALSE(in_sector(ComplexBox(0.0, 1.0), Angle::half_pi(), 0.5));
  EXPECT_FALSE(in_sector(ComplexBox(0.0, -1.0), Angle::half_pi(), 1.0));
  // A box straddling the boundary line is not in the sector.
  EXPECT_FALSE(in_sector(ComplexBox(RealInterval(-0.1, 0.1), RealInterval(0.0)), Angle::zero(), 1.0));
}

TEST(TrapInequality, SmallRadiiAreTrapped) {
  EXPECT_TRUE(trap_inequality(0.1, 0.1, 0.2));
  const auto r = trap_radius(0.1, 0.1);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(*r, 0.2);
}

TEST(TrapInequality, LargeRadiiAreNot) {
  EXPECT_FALSE(trap_radius(1.0, 10.0).has_value());
  // 10 e^{pi/2 r} < r has no solution at all.
  for (double r = 1e-3; r < 1e3; r *= 1.1) EXPECT_FALSE(trap_inequality(1.0, 10.0, r));
}

TEST(TrapCheck, ExactZeroIsLeftToTheCaller) {
  const TrapResult t = trap_check(BiSeq(3, 1.0), Angle::zero());
  EXPECT_FALSE(t.trapped);
  EXPECT_EQ(t.reason, "z0 box contains 0");
}

TEST(TrapCheck, HomogeneousStateInTheSectorIsTrapped) {
  const TrapResult t = trap_check(BiSeq::delta(0, ComplexBox(-0.5, 0.0), 1.0, 3), Angle::zero());
  ASSERT_TRUE(t.trapped) << t.reason;
  EXPECT_GT(t.params.r, 0.0);
  EXPECT_TRUE(trap_inequality(t.params.rho0, t.params.rho1, t.params.r));
  EXPECT_GE(t.params.rho0, 0.5);
}

TEST(TrapCheck, WrongHalfPlaneFails) {
  const TrapResult t = trap_check(BiSeq::delta(0, ComplexBox(0.5, 0.0), 1.0, 3), Angle::zero());
  EXPECT_FALSE(t.trapped);
  EXPECT_EQ(t.reason, "z0 outside the sector");
}

TEST(TrapCheck, LargeRemainderFails) {
  BiSeq a = BiSeq::delta(0, ComplexBox(-1.0, 0.0), 1.0, 3);
  a[2] = a[-2] = ComplexBox(5.0, 0.0);
  const TrapResult t = trap_check(a, Angle::zero());
  EXPECT_FALSE(t.trapped);
  EXPECT_EQ(t.reason, "no radius satisfies the trap inequality");
}

TEST(TrapCheck, SubEnclosuresStayTrapped) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0), w(0.0, 1.0);
  int trapped = 0;
  for (int i = 0; i < 300; ++i) {
    const Angle th = Angle::radians(u(rng) * 1.5);
    BiSeq a(3, 1.0);
    const std::complex<double> z = -std::polar(0.2 + w(rng), -th.value() + 1.2 * u(rng));
    a[0] = inflate(ComplexBox(z), 0.02 * w(rng));
    for (long k = 1; k <= 3; ++k) a[k] = a[-k] = inflate(ComplexBox(0.01 * u(rng), 0.01 * u(rng)), 0.002 * w(rng));
    a.tail = 0.002 * w(rng);
    const TrapResult big = trap_check(a, th);
    if (!big.trapped) continue;
    ++trapped;
    BiSeq b = a;
    for (auto& c : b.coeffs) {
      const std::complex<double> m = c.mid();
      c = inflate(ComplexBox(m), 0.3 * c.re.rad());
    }
    b.tail = 0.5 * a.tail;
    EXPECT_TRUE(trap_check(b, th).trapped) << i;
  }
  EXPECT_GT(trapped, 30);
}

TEST(Zeta, ExplicitValues) {
  EXPECT_TRUE(zeta(ComplexBox(-1.0, 0.0), Angle::zero(), RealInterval(1.0)).contains(std::complex<double>(-0.5, 0.0)));
  const ComplexBox z = zeta(ComplexBox(0.0, 0.0), Angle::quarter_pi(), RealInterval(0.0, 5.0));
  EXPECT_TRUE(z.contains(std::complex<double>(0.0, 0.0)));
  EXPECT_LT(abs_upper(z), 1e-300);
}

TEST(Zeta, BlowupDataIsRefusedNearTheSingularTime) {
  const Angle th = Angle::quarter_pi();
  const double rho = 2.0;
  const ComplexBox z0 = th.phase * conj(th.phase) * ComplexBox(rho, 0.0) * conj(th.phase);
  // z0 e^{i theta} = rho > 0 blows up at t = 1/rho.
  EXPECT_THROW(zeta(z0, th, RealInterval(0.49, 0.51)), NearBlowup);
  EXPECT_NO_THROW(zeta(z0, th, RealInterval(0.1)));
}

TEST(Zeta, SolvesTheModeZeroEquation) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0), tt(0.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const Angle th = Angle::radians(1.5 * u(rng));
    const ComplexBox z0 = ComplexBox(-std::polar(0.5 + std::abs(u(rng)), -th.value() + 1.3 * u(rng)));
    const double t = tt(rng);
    // d zeta/dt = z0^2 e^{i theta} / den^2 = e^{i theta} zeta^2 identically.
    const ComplexBox den = ComplexBox(1.0, 0.0) - z0 * RealInterval(t) * th.phase;
    const ComplexBox dz = z0 * z0 * th.phase / (den * den);
    const ComplexBox zt = zeta(z0, th, RealInterval(t));
    const ComplexBox res = dz - th.phase * zt * zt;
    EXPECT_TRUE(res.contains(std::complex<double>(0.0, 0.0))) << i;
    // Forward difference agrees to first order.
    const double e = 1e-6;
    const std::complex<double> fd = (zeta(z0, th, RealInterval(t + e)).mid() - zt.mid()) / e;
    EXPECT_LT(std::abs(fd - dz.mid()), 1e-4 * (1 + std::abs(dz.mid())));
  }
}
