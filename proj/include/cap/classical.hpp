#pragma once

// Non-rigorous Galerkin solver for a' = e^{i theta}(L a + a*a) on two-sided
// modes -K..K: Dormand-Prince 5(4) in Lawson (integrating factor) form, so
// the stiff diagonal e^{i theta} L is integrated exactly.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "cap/errors.hpp"

namespace cap {

using ModeVec = std::vector<std::complex<double>>;  // index k + K

struct ClassicalOptions {
  double rtol = 1e-12;
  double atol = 1e-14;
  double h_init = 1e-5;
  double h_min = 1e-10;   // smaller steps count as breakdown
  double max_norm = 1e6;  // larger l1 norms count as breakdown
  long max_steps = 2000000;
  // Share of the l1 mass in the `tail_modes` outermost modes on each side
  // above which the Galerkin truncation counts as unresolved.
  double max_tail_fraction = INFINITY;
  std::size_t tail_modes = 4;
};

struct ClassicalStats {
  long steps = 0;
  long rejected = 0;
  double min_step = INFINITY;
  double max_norm = 0.0;
  double max_tail_fraction = 0.0;
};

namespace detail {

inline double l1(const ModeVec& a) {
  double s = 0.0;
  for (const auto& x : a) s += std::abs(x);
  return s;
}

/// l1 mass of the m outermost modes on each side over the total.
inline double tail_fraction(const ModeVec& a, std::size_t m) {
  const std::size_t n = a.size();
  m = std::min(m, n / 2);
  double t = 0.0;
  for (std::size_t i = 0; i < m; ++i) t += std::abs(a[i]) + std::abs(a[n - 1 - i]);
  const double total = l1(a);
  return total > 0.0 ? t / total : 0.0;
}

// phase * (a*a) truncated to -K..K.
inline void nonlinearity(const ModeVec& a, std::complex<double> phase, ModeVec& out) {
  const long n = static_cast<long>(a.size());
  const long K = n / 2;
  std::fill(out.begin(), out.end(), std::complex<double>(0.0));
  for (long i = 0; i < n; ++i) {
    const auto x = a[static_cast<std::size_t>(i)];
    if (x == std::complex<double>(0.0)) continue;
    const long ki = i - K;
    const long jlo = std::max(0L, -ki);
    const long jhi = std::min(n - 1, n - 1 - ki);
    for (long j = jlo; j <= jhi; ++j) out[static_cast<std::size_t>(j + ki)] += x * a[static_cast<std::size_t>(j)];
  }
  for (auto& y : out) y *= phase;
}

}  // namespace detail

class LawsonDP54 {
 public:
  LawsonDP54(std::complex<double> phase, std::size_t K, ClassicalOptions opt = {})
      : phase_(phase), K_(K), opt_(opt), lin_(2 * K + 1) {
    for (long k = -static_cast<long>(K); k <= static_cast<long>(K); ++k) {
      const double kk = static_cast<double>(k) * static_cast<double>(k);
      lin_[static_cast<std::size_t>(k + static_cast<long>(K))] = -4.0 * std::numbers::pi * std::numbers::pi * kk * phase;
    }
  }

  /// Advances y from t0 through each of `targets` (increasing), storing the
  /// state at each. Throws ApproxFailed on breakdown.
  std::vector<ModeVec> solve(ModeVec y, double t0, const std::vector<double>& targets, double* h_io = nullptr) {
    std::vector<ModeVec> out;
    out.reserve(targets.size());
    double t = t0;
    double h = h_io && *h_io > 0.0 ? *h_io : opt_.h_init;
    ModeVec f(y.size());
    detail::nonlinearity(y, phase_, f);
    for (double target : targets) {
      while (t < target) {
        const bool last = t + h >= target;
        const double hs = last ? target - t : h;
        double err = 0.0;
        ModeVec ynew, fnew;
        attempt(y, f, hs, ynew, fnew, err);
        if (!std::isfinite(err)) err = INFINITY;
        if (err <= 1.0) {
          t = last ? target : t + hs;
          y = std::move(ynew);
          f = std::move(fnew);
          ++stats_.steps;
          stats_.min_step = std::min(stats_.min_step, hs);
          const double nrm = detail::l1(y);
          stats_.max_norm = std::max(stats_.max_norm, nrm);
          if (!std::isfinite(nrm) || nrm > opt_.max_norm) throw ApproxFailed("solution norm exceeded the breakdown threshold");
          if (std::isfinite(opt_.max_tail_fraction)) {
            const double tf = detail::tail_fraction(y, opt_.tail_modes);
            stats_.max_tail_fraction = std::max(stats_.max_tail_fraction, tf);
            if (tf > opt_.max_tail_fraction) throw ApproxFailed("Galerkin resolution lost");
          }
          if (stats_.steps > opt_.max_steps) throw ApproxFailed("classical step budget exhausted");
        } else {
          ++stats_.rejected;
        }
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (err <= 1.0 && last) {
          h = std::max(h, hs * fac);
        } else {
          h = hs * fac;
        }
        if (h < opt_.h_min) throw ApproxFailed("classical step size collapsed");
      }
      out.push_back(y);
    }
    if (h_io) *h_io = h;
    return out;
  }

  const ClassicalStats& stats() const noexcept { return stats_; }

 private:
  void expo(double dt, ModeVec& e) const {
    e.resize(lin_.size());
    for (std::size_t i = 0; i < lin_.size(); ++i) e[i] = std::exp(lin_[i] * dt);
  }

  void attempt(const ModeVec& y, const ModeVec& f1, double h, ModeVec& ynew, ModeVec& fnew, double& err) const {
    static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
    static constexpr double a[7][6] = {
        {0, 0, 0, 0, 0, 0},
        {1.0 / 5, 0, 0, 0, 0, 0},
        {3.0 / 40, 9.0 / 40, 0, 0, 0, 0},
        {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0},
        {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0, 0},
        {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656, 0},
        {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
    static constexpr std::array<double, 7> e{71.0 / 57600, 0, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200,
                                             22.0 / 525, -1.0 / 40};
    const std::size_t n = y.size();
    std::array<ModeVec, 7> F;
    F[0] = f1;
    // exps[i][j] = e^{(c_i - c_j) h Lambda}
    std::array<std::array<ModeVec, 7>, 7> ex;
    for (int i = 1; i < 7; ++i) {
      for (int j = 0; j <= i; ++j) {
        if (j > 0 && c[j] == c[j - 1] && j < i) {
          ex[i][j] = ex[i][j - 1];
          continue;
        }
        expo((c[i] - c[j]) * h, ex[i][j]);
      }
    }
    ModeVec Y(n);
    for (int i = 1; i < 7; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> s = ex[i][0][k] * y[k];
        for (int j = 0; j < i; ++j) {
          if (a[i][j] != 0.0) s += h * a[i][j] * ex[i][j][k] * F[static_cast<std::size_t>(j)][k];
        }
        Y[k] = s;
      }
      F[static_cast<std::size_t>(i)].resize(n);
      detail::nonlinearity(Y, phase_, F[static_cast<std::size_t>(i)]);
    }
    ynew = Y;  // stage 7 sits at c = 1 with the 5th-order weights (FSAL)
    fnew = F[6];
    double en = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> s = 0.0;
      for (int j = 0; j < 7; ++j) {
        if (e[static_cast<std::size_t>(j)] != 0.0) s += e[static_cast<std::size_t>(j)] * ex[6][j][k] * F[static_cast<std::size_t>(j)][k];
      }
      en += std::abs(h * s);
    }
    const double scale = opt_.atol + opt_.rtol * std::max(detail::l1(y), detail::l1(ynew));
    err = en / scale;
  }

  std::complex<double> phase_;
  std::size_t K_;
  ClassicalOptions opt_;
  ModeVec lin_;
  ClassicalStats stats_;
};

}  // namespace cap
