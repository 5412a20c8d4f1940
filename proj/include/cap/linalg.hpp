#pragma once

// Interval matrices over ComplexBox, products with floating-point matrices,
// and weighted l1 operator norms.

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "cap/interval.hpp"

namespace cap {

struct BoxMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<ComplexBox> v;

  BoxMatrix() = default;
  BoxMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}

  static BoxMatrix identity(std::size_t n) {
    BoxMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = ComplexBox(1.0, 0.0);
    return m;
  }

  ComplexBox& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
  const ComplexBox& operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

inline Eigen::MatrixXcd mid(const BoxMatrix& m) {
  Eigen::MatrixXcd r(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j)
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m(i, j).mid();
  return r;
}

namespace detail {

// acc += a * y for an exact complex scalar a.
inline void accumulate(ComplexBox& acc, std::complex<double> a, const ComplexBox& y) {
  const double ar = a.real();
  const double ai = a.imag();
  auto scale = [](double s, const RealInterval& x) -> RealInterval {
    if (s == 0.0) return 0.0;
    if (s > 0.0) return {next_down(s * x.lo()), next_up(s * x.hi())};
    return {next_down(s * x.hi()), next_up(s * x.lo())};
  };
  acc.re += scale(ar, y.re) - scale(ai, y.im);
  acc.im += scale(ar, y.im) + scale(ai, y.re);
}

}  // namespace detail

/// Encloses A * B for a floating-point matrix A.
inline BoxMatrix multiply(const Eigen::MatrixXcd& A, const BoxMatrix& B) {
  const auto n = static_cast<std::size_t>(A.rows());
  const auto inner = static_cast<std::size_t>(A.cols());
  BoxMatrix C(n, B.cols);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < inner; ++l) {
      const std::complex<double> a = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      if (a == std::complex<double>(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < B.cols; ++j) detail::accumulate(C(i, j), a, B(l, j));
    }
  }
  return C;
}

/// Encloses A * b for a floating-point matrix A and a box vector b.
inline std::vector<ComplexBox> multiply(const Eigen::MatrixXcd& A, const std::vector<ComplexBox>& b) {
  std::vector<ComplexBox> c(static_cast<std::size_t>(A.rows()));
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index l = 0; l < A.cols(); ++l) {
      const std::complex<double> a = A(i, l);
      if (a != std::complex<double>(0.0, 0.0)) detail::accumulate(c[static_cast<std::size_t>(i)], a, b[static_cast<std::size_t>(l)]);
    }
  }
  return c;
}

/// Upper bound of |A| v (entrywise moduli) for v >= 0.
inline std::vector<double> abs_multiply_upper(const Eigen::MatrixXcd& A, const std::vector<double>& v) {
  std::vector<double> r(static_cast<std::size_t>(A.rows()), 0.0);
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (Eigen::Index l = 0; l < A.cols(); ++l) {
      const double x = v[static_cast<std::size_t>(l)];
      if (x == 0.0) continue;
      s = add_up(s, mul_up(abs_upper(ComplexBox(A(i, l))), x));
    }
    r[static_cast<std::size_t>(i)] = s;
  }
  return r;
}

/// Weighted vector norm bound sum_i w_i |v_i|, with w upper weights.
inline double weighted_norm_upper(const std::vector<ComplexBox>& v, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s = add_up(s, mul_up(w[i], abs_upper(v[i])));
  return s;
}

inline double weighted_norm_upper(const std::vector<double>& v, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s = add_up(s, mul_up(w[i], v[i]));
  return s;
}

/// Operator norm bound on the weighted l1 space: max_j sum_i w_i |B_ij| / w_j.
/// `w` holds enclosures of the weights.
inline double op_norm_upper(const BoxMatrix& B, const std::vector<RealInterval>& w) {
  double best = 0.0;
  for (std::size_t j = 0; j < B.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < B.rows; ++i) s = add_up(s, mul_up(w[i].hi(), abs_upper(B(i, j))));
    best = std::max(best, div_up(s, w[j].lo()));
  }
  return best;
}

inline double op_norm_upper(const Eigen::MatrixXcd& A, const std::vector<RealInterval>& w) {
  double best = 0.0;
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      s = add_up(s, mul_up(w[static_cast<std::size_t>(i)].hi(), abs_upper(ComplexBox(A(i, j)))));
    }
    best = std::max(best, div_up(s, w[static_cast<std::size_t>(j)].lo()));
  }
  return best;
}

/// Column norms (weighted, divided by the column weight) of A.
inline std::vector<double> column_norms_upper(const Eigen::MatrixXcd& A, const std::vector<RealInterval>& w) {
  std::vector<double> out(static_cast<std::size_t>(A.cols()));
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      s = add_up(s, mul_up(w[static_cast<std::size_t>(i)].hi(), abs_upper(ComplexBox(A(i, j)))));
    }
    out[static_cast<std::size_t>(j)] = div_up(s, w[static_cast<std::size_t>(j)].lo());
  }
  return out;
}

/// I - B as a box matrix.
inline BoxMatrix identity_minus(const BoxMatrix& B) {
  BoxMatrix R(B.rows, B.cols);
  for (std::size_t i = 0; i < B.rows; ++i)
    for (std::size_t j = 0; j < B.cols; ++j)
      R(i, j) = (i == j ? ComplexBox(1.0, 0.0) : ComplexBox()) - B(i, j);
  return R;
}

}  // namespace cap
