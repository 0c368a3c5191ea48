#pragma once

#include <array>
#include <boost/rational.hpp>
#include <cstdint>
#include <stdexcept>

#include "fueter/convexity.hpp"
#include "fueter/operators.hpp"

namespace fueter {

/// Principal symbols of D0* (rows of L4) and D1 (rows of M4) at a covector ξ.
struct SymbolMatrices {
  int k = 0;
  Vec4 xi = Vec4::Zero();
  MatC L4;
  MatC M4;
};

[[nodiscard]] inline SymbolMatrices build_symbols(const Vec4& xi, int k,
                                                  const VectorFieldTable& V = VectorFieldTable::standard()) {
  if (k < 2) throw std::invalid_argument("symbols need k >= 2");
  if (xi.norm() == 0.0) throw std::invalid_argument("symbols need a nonzero covector");
  SymbolMatrices s{k, xi, MatC::Zero(k + 1, 2 * k), MatC::Zero(k - 1, 2 * k)};
  for (int m = 0; m <= k; ++m)
    for (int a = 0; a < 2; ++a) {
      if (m < k) s.L4(m, mixed_index(m, a)) = (double(k - m) / k) * symbol(V.raised(a, 0), xi);
      if (m > 0) s.L4(m, mixed_index(m - 1, a)) = (double(m) / k) * symbol(V.raised(a, 1), xi);
    }
  for (int l = 0; l + 1 < k; ++l) {
    s.M4(l, mixed_index(l, 0)) = -0.5 * symbol(V.mixed(1, 0), xi);
    s.M4(l, mixed_index(l, 1)) = 0.5 * symbol(V.mixed(0, 0), xi);
    s.M4(l, mixed_index(l + 1, 0)) = -0.5 * symbol(V.mixed(1, 1), xi);
    s.M4(l, mixed_index(l + 1, 1)) = 0.5 * symbol(V.mixed(0, 1), xi);
  }
  return s;
}

struct KernelReport {
  Eigen::Index rank_L4 = 0;
  Eigen::Index dim_ker_L4 = 0;
  Eigen::Index dim_ker_intersection = 0;
};

[[nodiscard]] inline KernelReport kernel_report(const SymbolMatrices& s, double rel_tol = 1e-10) {
  KernelReport r;
  r.rank_L4 = numeric_rank(s.L4, rel_tol);
  r.dim_ker_L4 = s.L4.cols() - r.rank_L4;
  MatC stacked(s.L4.rows() + s.M4.rows(), s.L4.cols());
  stacked << s.L4, s.M4;
  r.dim_ker_intersection = stacked.cols() - numeric_rank(stacked, rel_tol);
  return r;
}

using Rational = boost::rational<std::int64_t>;

/// Gaussian rational a + ib.
struct GaussianRational {
  Rational re, im;
  friend GaussianRational operator*(const GaussianRational& x, const GaussianRational& y) {
    return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re};
  }
  friend GaussianRational operator-(const GaussianRational& x, const GaussianRational& y) {
    return {x.re - y.re, x.im - y.im};
  }
  friend bool operator==(const GaussianRational& x, const GaussianRational& y) = default;
};

/**
 * det [[ξ3 − iξ4, −ξ1 − iξ2], [ξ1 − iξ2, ξ3 + iξ4]] in exact arithmetic; this is
 * the block of Z^A_{A'} symbols that makes L4 surjective.
 */
[[nodiscard]] inline GaussianRational raised_block_determinant(const std::array<Rational, 4>& xi) {
  const GaussianRational a{xi[2], -xi[3]}, b{-xi[0], -xi[1]}, c{xi[0], -xi[1]}, d{xi[2], xi[3]};
  return a * d - b * c;
}

}  // namespace fueter
