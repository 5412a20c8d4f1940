#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "support.hpp"

using namespace cap;

namespace {

FourierTaylor random_ft(std::mt19937_64& rng, std::size_t N, std::size_t M, double decay = 0.5) {
  std::normal_distribution<double> g(0.0, 1.0);
  FourierTaylor p(N, M, 1.0);
  for (std::size_t m = 0; m <= M; ++m) {
    for (std::size_t k = 0; k <= N; ++k) {
      const double s = std::pow(decay, static_cast<double>(m + k));
      p.at(k, m) = ComplexBox(g(rng) * s, g(rng) * s);
    }
  }
  return p;
}

std::complex<double> point_sum(const FourierTaylor& p, std::size_t k, std::complex<double> z) {
  std::complex<double> s = 0.0, zm = 1.0;
  for (std::size_t m = 0; m <= p.M; ++m) {
    s += p.at(k, m).mid() * zm;
    zm *= z;
  }
  return s;
}

}  // namespace

TEST(TaylorFourier, UnitSquaredIsUnit) {
  FourierTaylor e(3, 3, 1.0);
  e.at(0, 0) = ComplexBox(1.0, 0.0);
  const FourierTaylor r = tf_product(e, e);
  EXPECT_TRUE(r.at(0, 0).contains(std::complex<double>(1.0, 0.0)));
  for (std::size_t m = 0; m <= 3; ++m) {
    for (std::size_t k = 0; k <= 3; ++k) {
      if (k || m) {
        EXPECT_LT(abs_upper(r.at(k, m)), 1e-150);
      }
    }
  }
  EXPECT_EQ(r.taylor_tail, 0.0);
}

TEST(TaylorFourier, SingleCauchyTerm) {
  FourierTaylor p(2, 3, 1.0);
  p.at(0, 1) = ComplexBox(1.0, 0.0);
  const FourierTaylor r = tf_product(p, p);
  EXPECT_TRUE(r.at(0, 2).contains(std::complex<double>(1.0, 0.0)));
  for (std::size_t m = 0; m <= 3; ++m) {
    for (std::size_t k = 0; k <= 2; ++k) {
      if (!(k == 0 && m == 2)) {
        EXPECT_LT(abs_upper(r.at(k, m)), 1e-150);
      }
    }
  }
}

TEST(TaylorFourier, ProductIsSubmultiplicative) {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 50; ++i) {
    const FourierTaylor p = random_ft(rng, 4, 4), q = random_ft(rng, 4, 4);
    EXPECT_LE(norm_upper(tf_product(p, q)), mul_up(norm_upper(p), norm_upper(q)) * (1 + 1e-13));
  }
}

TEST(TaylorFourier, ShapeMismatchThrows) {
  EXPECT_THROW(tf_product(FourierTaylor(2, 2, 1.0), FourierTaylor(3, 2, 1.0)), ConfigError);
}

TEST(TaylorFourier, EvalAtZeroIsTheConstantRow) {
  std::mt19937_64 rng(1);
  const FourierTaylor p = random_ft(rng, 5, 6);
  const SymSeq v = eval(p, ComplexBox(0.0, 0.0));
  for (std::size_t k = 0; k <= 5; ++k) EXPECT_TRUE(v[k].contains(p.at(k, 0).mid()));
}

TEST(TaylorFourier, EvalOfLinearChartAtOne) {
  std::mt19937_64 rng(2);
  FourierTaylor p = random_ft(rng, 4, 1);
  const SymSeq v = eval(p, ComplexBox(1.0, 0.0));
  for (std::size_t k = 0; k <= 4; ++k) EXPECT_TRUE(v[k].contains(p.at(k, 0).mid() + p.at(k, 1).mid()));
}

TEST(TaylorFourier, EvalMatchesDirectPartialSum) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const FourierTaylor p = random_ft(rng, 6, 10, 0.8);
    const std::complex<double> z(0.5, 0.0);
    const SymSeq v = eval(p, ComplexBox(z));
    for (std::size_t k = 0; k <= 6; ++k) {
      const std::complex<double> s = point_sum(p, k, z);
      EXPECT_LT(std::abs(v[k].mid() - s), 1e-14);
      EXPECT_TRUE(cap::testing::box_encloses(
          inflate(v[k], 1e-15), {cap::testing::Big(s.real()), cap::testing::Big(s.imag())}));
    }
  }
}

TEST(TaylorFourier, EvalOutsideTheDiscThrows) {
  EXPECT_THROW(eval(FourierTaylor(1, 1, 1.0), ComplexBox(1.01, 0.0)), DomainError);
}

TEST(TaylorFourier, DerivativeAtZeroAndOfLinearCharts) {
  std::mt19937_64 rng(4);
  const FourierTaylor p = random_ft(rng, 3, 5);
  const SymSeq d0 = eval_derivative(p, ComplexBox(0.0, 0.0));
  for (std::size_t k = 0; k <= 3; ++k) EXPECT_TRUE(d0[k].contains(p.at(k, 1).mid()));
  const FourierTaylor lin = random_ft(rng, 3, 1);
  for (double s : {0.0, 0.3, -0.7}) {
    const SymSeq d = eval_derivative(lin, ComplexBox(s, 0.2));
    for (std::size_t k = 0; k <= 3; ++k) EXPECT_TRUE(d[k].contains(lin.at(k, 1).mid()));
  }
}

TEST(TaylorFourier, DerivativeAgreesWithFiniteDifferences) {
  std::mt19937_64 rng(5);
  const FourierTaylor p = random_ft(rng, 4, 12, 0.7);
  const std::complex<double> z(0.3, 0.0);
  const double h = 1e-6;
  const SymSeq d = eval_derivative(p, ComplexBox(z));
  const SymSeq fp = eval(p, ComplexBox(z + h)), fm = eval(p, ComplexBox(z - h));
  for (std::size_t k = 0; k <= 4; ++k) {
    const std::complex<double> fd = (fp[k].mid() - fm[k].mid()) / (2.0 * h);
    EXPECT_LT(std::abs(fd - d[k].mid()), 1e-8 + 4.0 * d[k].re.rad());
  }
}

TEST(TaylorFourier, DerivativeBallUsesTheCauchyEstimate) {
  FourierTaylor p(1, 2, 1.0);
  p.r0 = 1e-6;
  const SymSeq d = eval_derivative(p, ComplexBox(0.5, 0.0));
  EXPECT_GE(d.tail, 1e-6 / 0.25);
  EXPECT_THROW(eval_derivative(p, ComplexBox(1.0, 0.0)), DomainError);
}

TEST(TaylorFourier, WiderSigmaBoxesGiveWiderEnclosures) {
  std::mt19937_64 rng(6);
  const FourierTaylor p = random_ft(rng, 3, 8, 0.8);
  const ComplexBox inner(RealInterval(0.2, 0.21), RealInterval(-0.1, -0.09));
  const ComplexBox outer(RealInterval(0.15, 0.3), RealInterval(-0.2, 0.0));
  const SymSeq a = eval(p, inner), b = eval(p, outer);
  for (std::size_t k = 0; k <= 3; ++k) EXPECT_TRUE(b[k].contains(a[k]));
}
