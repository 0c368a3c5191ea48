#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fueter/domain.hpp"
#include "fueter/operators.hpp"
#include "fueter/spinor.hpp"

namespace fueter {

using MatC = Eigen::MatrixXcd;

/// Levi form at a point: ξ*Mξ over Mixed(k) reduced coordinates.
struct HermitianForm {
  int k = 0;
  MatC M;

  [[nodiscard]] cplx operator()(const VecC& xi) const { return xi.dot(M * xi); }
  [[nodiscard]] double hermitian_defect() const { return (M - M.adjoint()).cwiseAbs().maxCoeff(); }
};

/// Diagonal of the multiplicity metric on Mixed(k).
[[nodiscard]] inline Eigen::VectorXd mixed_metric(int k) {
  Eigen::VectorXd w(2 * k);
  for (int i = 0; i < 2 * k; ++i) w[i] = multiplicity(FieldKind::Mixed, k, i);
  return w;
}

/// Eigenvalues of A v = λ B v for Hermitian A and positive definite B, ascending.
[[nodiscard]] inline Eigen::VectorXd generalized_eigenvalues(const MatC& A, const MatC& B) {
  const Eigen::LLT<MatC> llt(B);
  if (llt.info() != Eigen::Success) throw std::domain_error("metric is not positive definite");
  const MatC L = llt.matrixL();
  const MatC Linv = L.triangularView<Eigen::Lower>().solve(MatC::Identity(L.rows(), L.cols()));
  MatC C = Linv * A * Linv.adjoint();
  C = 0.5 * (C + C.adjoint());
  return Eigen::SelfAdjointEigenSolver<MatC>(C, Eigen::EigenvaluesOnly).eigenvalues();
}

[[nodiscard]] inline Eigen::VectorXd metric_eigenvalues(const HermitianForm& f) {
  return generalized_eigenvalues(f.M, mixed_metric(f.k).cast<cplx>().asDiagonal().toDenseMatrix());
}

/**
 * 𝓛_k(φ;ξ) = −k Σ Z_B^{A1'} Z^A_{(A1'}φ ξ_{A2'..Ak')A} conj(ξ_{A2'..Ak'B}) from
 * the Hessian of φ. Expanding the symmetrisation over the slot that carries
 * the derivative gives, per row (j,B) with multiplicity C(k−1,j), one term
 * with the derivative in the contracted slot and j resp. k−1−j terms where it
 * replaces a 1' resp. 0' of the remaining tuple.
 */
[[nodiscard]] inline HermitianForm levi_matrix(const Mat4& hess, int k,
                                               const VectorFieldTable& V = VectorFieldTable::standard()) {
  if (k < 2) throw std::invalid_argument("Levi form needs k >= 2");
  HermitianForm out{k, MatC::Zero(2 * k, 2 * k)};
  auto P = [&](int b, int a1, int a, int as) { return fueter::apply(V.mixed(b, a1), V.raised(a, as), hess); };
  for (int j = 0; j < k; ++j) {
    const double mult = binomial(k - 1, j);
    for (int b = 0; b < 2; ++b) {
      const int row = mixed_index(j, b);
      for (int a1 = 0; a1 < 2; ++a1)
        for (int a = 0; a < 2; ++a) {
          out.M(row, mixed_index(j, a)) -= mult * P(b, a1, a, a1);
          if (j >= 1) out.M(row, mixed_index(a1 + j - 1, a)) -= mult * j * P(b, a1, a, 1);
          if (k - 1 - j >= 1) out.M(row, mixed_index(a1 + j, a)) -= mult * (k - 1 - j) * P(b, a1, a, 0);
        }
    }
  }
  return out;
}

[[nodiscard]] inline HermitianForm levi_matrix(const Weight& phi, const Point4& x, int k) {
  return levi_matrix(phi.hessian(x), k);
}

/**
 * The k = 2 form written with an explicit pair symmetrisation:
 * −2 Σ Z_B^{A'} Z^A_{(A'}φ ξ_{B')A} conj(ξ_{B'B}).
 */
[[nodiscard]] inline cplx levi_form_pairwise_k2(const Mat4& hess, const VecC& xi,
                                                const VectorFieldTable& V = VectorFieldTable::standard()) {
  if (xi.size() != 4) throw std::invalid_argument("k = 2 Levi form takes 4 components");
  cplx s = 0.0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int ap = 0; ap < 2; ++ap)
        for (int bp = 0; bp < 2; ++bp) {
          const cplx sym = 0.5 * (fueter::apply(V.mixed(b, ap), V.raised(a, ap), hess) * xi[mixed_index(bp, a)] +
                                  fueter::apply(V.mixed(b, ap), V.raised(a, bp), hess) * xi[mixed_index(ap, a)]);
          s += sym * std::conj(xi[mixed_index(bp, b)]);
        }
  return -2.0 * s;
}

struct PshReport {
  double min_eig = std::numeric_limits<double>::infinity();
  Point4 argmin{};
  bool pass = false;
};

/// Passes iff the smallest metric eigenvalue over the samples is ≥ c − 1e-9.
[[nodiscard]] inline PshReport is_k_plurisubharmonic(const Weight& phi, const std::vector<Point4>& samples,
                                                     double c, int k) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  PshReport rep;
  for (const Point4& x : samples) {
    const double e = metric_eigenvalues(levi_matrix(phi, x, k))[0];
    if (e < rep.min_eig) {
      rep.min_eig = e;
      rep.argmin = x;
    }
  }
  rep.pass = rep.min_eig >= c - 1e-9;
  return rep;
}

/// Tangency equations; row m is the symmetrised tuple with m ones.
struct ConstraintMatrix {
  int k = 0;
  MatC C;
};

/// Row m: Σ_A [((k−m)/k) Z^A_{0'}r ξ_{m,A} + (m/k) Z^A_{1'}r ξ_{m−1,A}] for a defining-function gradient.
[[nodiscard]] inline ConstraintMatrix tangency_constraints(const Vec4& grad, int k,
                                                           const VectorFieldTable& V = VectorFieldTable::standard()) {
  ConstraintMatrix out{k, MatC::Zero(k + 1, 2 * k)};
  for (int m = 0; m <= k; ++m)
    for (int a = 0; a < 2; ++a) {
      if (m < k) out.C(m, mixed_index(m, a)) = (double(k - m) / k) * fueter::apply(V.raised(a, 0), grad);
      if (m > 0) out.C(m, mixed_index(m - 1, a)) = (double(m) / k) * fueter::apply(V.raised(a, 1), grad);
    }
  return out;
}

[[nodiscard]] inline ConstraintMatrix tangency_constraints(const DomainSpec& d, const Point4& x, int k,
                                                           double tol = 1e-8) {
  const Jet rn = d.r_normalized(x);
  if (std::abs(rn.v) > tol) throw std::invalid_argument("point is not on the boundary");
  return tangency_constraints(rn.g, k);
}

/// Orthonormal (Euclidean) basis of null(C), threshold rel_tol·σ_max.
[[nodiscard]] inline MatC nullspace(const MatC& C, double rel_tol = 1e-10) {
  const Eigen::JacobiSVD<MatC> svd(C, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s[0] : 0.0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * smax) ++rank;
  return svd.matrixV().rightCols(C.cols() - rank);
}

[[nodiscard]] inline Eigen::Index numeric_rank(const MatC& C, double rel_tol = 1e-10) {
  const Eigen::JacobiSVD<MatC> svd(C);
  const auto& s = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > rel_tol * s[0]) ++rank;
  return rank;
}

/// Largest sine of the principal angles between two subspaces (orthonormal bases).
[[nodiscard]] inline double principal_angle_sine(const MatC& U, const MatC& W) {
  if (U.cols() != W.cols()) return 1.0;
  if (U.cols() == 0) return 0.0;
  const MatC R = W - U * (U.adjoint() * W);
  return Eigen::JacobiSVD<MatC>(R).singularValues()[0];
}

struct ConstrainedLevi {
  MatC basis;              // null(C)
  MatC restricted;         // basisᴴ M basis
  Eigen::VectorXd eigs;    // w.r.t. basisᴴ W basis
  Eigen::Index nullity = 0;
};

/// Levi form of a defining function ρ (jet at a boundary point) on the tangency subspace.
[[nodiscard]] inline ConstrainedLevi constrained_levi(const Jet& rho, int k) {
  ConstrainedLevi out;
  const ConstraintMatrix C = tangency_constraints(rho.g, k);
  out.basis = nullspace(C.C);
  out.nullity = out.basis.cols();
  const HermitianForm L = levi_matrix(rho.h, k);
  out.restricted = out.basis.adjoint() * L.M * out.basis;
  const MatC metric = out.basis.adjoint() * mixed_metric(k).cast<cplx>().asDiagonal() * out.basis;
  out.eigs = out.nullity ? generalized_eigenvalues(out.restricted, metric) : Eigen::VectorXd();
  return out;
}

struct PseudoconvexSample {
  Point4 x;
  double min_eig;
  Eigen::Index nullity;
  bool pass;
};

struct PseudoconvexReport {
  double min_constrained_eig = std::numeric_limits<double>::infinity();
  std::vector<PseudoconvexSample> samples;
  int degenerate = 0;  // nullity above k−1
  bool pass = false;
};

/// Multiplier μ > 0 applied to r̂ (identity when empty).
using DefiningMultiplier = std::function<Jet(const JetPoint&)>;

[[nodiscard]] inline Jet defining_jet(const DomainSpec& d, const Point4& x, const DefiningMultiplier& mu) {
  const Jet rn = d.r_normalized(x);
  return mu ? mu(seed_point(x)) * rn : rn;
}

[[nodiscard]] inline PseudoconvexReport is_k_pseudoconvex(const DomainSpec& d,
                                                          const std::vector<BoundarySample>& samples,
                                                          double c, int k,
                                                          const DefiningMultiplier& mu = {}) {
  if (samples.empty()) throw std::invalid_argument("empty sample set");
  PseudoconvexReport rep;
  rep.pass = true;
  for (const auto& s : samples) {
    const ConstrainedLevi cl = constrained_levi(defining_jet(d, s.x, mu), k);
    const double e = cl.nullity ? cl.eigs[0] : std::numeric_limits<double>::infinity();
    const bool ok = e >= c - 1e-8;
    if (cl.nullity > k - 1) ++rep.degenerate;
    rep.samples.push_back({s.x, e, cl.nullity, ok});
    rep.min_constrained_eig = std::min(rep.min_constrained_eig, e);
    rep.pass = rep.pass && ok;
  }
  return rep;
}

/// levi(χ∘φ) − χ'(φ) levi(φ); positive semidefinite for convex χ.
[[nodiscard]] inline HermitianForm chain_rule_gap(const Weight& phi, const Chi& chi, const Point4& x, int k) {
  const double t = phi.value(x);
  if (chi.d2(t) < 0.0) throw std::invalid_argument("chi '" + chi.name + "' is not convex at phi(x)");
  const HermitianForm outer = levi_matrix(Weight::chain(chi, phi), x, k);
  const HermitianForm inner = levi_matrix(phi, x, k);
  return {k, outer.M - chi.d1(t) * inner.M};
}

}  // namespace fueter
