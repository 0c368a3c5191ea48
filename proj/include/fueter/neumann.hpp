#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fueter/convexity.hpp"
#include "fueter/grid.hpp"
#include "fueter/operators.hpp"
#include "fueter/rng.hpp"

namespace fueter {

/// Node-major storage of a reduced spinor field on the mask: index p·m + c.
struct FieldLayout {
  FieldKind kind = FieldKind::Sym;
  int k = 0;
  std::size_t nodes = 0;

  [[nodiscard]] int comps() const { return component_count(kind, k); }
  [[nodiscard]] Eigen::Index dim() const { return static_cast<Eigen::Index>(nodes) * comps(); }
  [[nodiscard]] Eigen::Index index(std::size_t p, int c) const {
    return static_cast<Eigen::Index>(p) * comps() + c;
  }
};

/**
 * Sparse operator between two weighted field spaces. The adjoint is the exact
 * adjoint in the diagonal metrics, M_from⁻¹ Aᴴ M_to.
 */
struct DiscreteOperator {
  FieldLayout from, to;
  SpMatC A, AH;
  Eigen::VectorXd mass_from, mass_to;

  [[nodiscard]] VecC apply(const VecC& u) const { return A * u; }
  [[nodiscard]] VecC adjoint(const VecC& f) const {
    return (AH * mass_to.cwiseProduct(f)).cwiseQuotient(mass_from.cast<cplx>());
  }
};

[[nodiscard]] inline cplx weighted_dot(const VecC& a, const VecC& b, const Eigen::VectorXd& mass) {
  cplx s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]) * mass[i];
  return s;
}
[[nodiscard]] inline double weighted_norm(const VecC& a, const Eigen::VectorXd& mass) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += std::norm(a[i]) * mass[i];
  return std::sqrt(s);
}

struct EstimateConstants {
  double c = 0.0;
  double grad_sq = 0.0;
  int k = 2;
  double C0 = 0.0;
  bool grad_sq_analytic = false;
};

/// C0 = (c − 4‖dφ‖²∞)/(2k+6); a non-positive value is an error.
[[nodiscard]] inline EstimateConstants compute_constants(double c, double grad_sq, int k) {
  EstimateConstants e{c, grad_sq, k, (c - 4.0 * grad_sq) / (2.0 * k + 6.0), false};
  if (!(e.C0 > 0.0))
    throw std::domain_error(
        "estimate constant C0 = " + std::to_string(e.C0) +
        " is not positive; rescale the weight: for s·phi the numerator is s·c − 4s²·|dphi|², "
        "positive for s < c/(4|dphi|²)");
  return e;
}

/**
 * c is the smallest Levi eigenvalue over interior samples. ‖dφ‖²∞ =
 * Σ_j sup|∂_jφ|² is exact for κ|x|² on a ball and sampled otherwise.
 */
[[nodiscard]] inline EstimateConstants compute_constants(const Weight& w, const DomainSpec& d, int k,
                                                         const std::vector<Point4>& samples) {
  if (samples.empty()) throw std::invalid_argument("compute_constants needs samples");
  double c = std::numeric_limits<double>::infinity();
  std::array<double, 4> sup{0, 0, 0, 0};
  for (const Point4& x : samples) {
    c = std::min(c, metric_eigenvalues(levi_matrix(w, x, k))[0]);
    const Vec4 g = w.gradient(x);
    for (int j = 0; j < 4; ++j) sup[static_cast<std::size_t>(j)] = std::max(sup[static_cast<std::size_t>(j)], g[j] * g[j]);
  }
  double grad_sq = sup[0] + sup[1] + sup[2] + sup[3];
  bool analytic = false;
  if (w.kind == Weight::Kind::Radial && d.kind == DomainSpec::Kind::Ball) {
    grad_sq = 4.0 * std::pow(2.0 * w.kappa * d.radius, 2);
    analytic = true;
  }
  EstimateConstants e = compute_constants(c, grad_sq, k);
  e.grad_sq_analytic = analytic;
  return e;
}

/// Random interior points (rejection sampling in the bounding box).
[[nodiscard]] inline std::vector<Point4> interior_samples(const DomainSpec& d, int m, Rng& rng) {
  std::vector<Point4> out;
  const double e = d.extent();
  while (static_cast<int>(out.size()) < m) {
    Point4 x{rng.uniform(-e, e), rng.uniform(-e, e), rng.uniform(-e, e), rng.uniform(-e, e)};
    if (d.contains(x)) out.push_back(x);
  }
  return out;
}

/**
 * Orthogonal projector (in the multiplicity metric) onto fields satisfying the
 * tangency equations at band nodes; identity elsewhere.
 */
struct BcProjector {
  int k = 0;
  std::vector<std::size_t> nodes;
  std::vector<MatC> blocks;       // 2k × 2k projectors
  std::vector<MatC> constraints;  // (k+1) × 2k

  [[nodiscard]] VecC apply(const VecC& f) const {
    VecC out = f;
    const int m = 2 * k;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto off = static_cast<Eigen::Index>(nodes[i]) * m;
      out.segment(off, m) = blocks[i] * f.segment(off, m);
    }
    return out;
  }
  /// max over band nodes of |C f(p)| / |f(p)|
  [[nodiscard]] double residual(const VecC& f) const {
    double worst = 0.0;
    const int m = 2 * k;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const VecC fp = f.segment(static_cast<Eigen::Index>(nodes[i]) * m, m);
      const double n = fp.norm();
      if (n > 0) worst = std::max(worst, (constraints[i] * fp).norm() / n);
    }
    return worst;
  }
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
  double C0 = 0.0;
  double norm_rhs = 0.0;
  double norm_solution = 0.0;
  bool bound_ok = true;  // ‖Nf‖·C0 ≤ ‖g‖·(1+slack)
  double rayleigh_min = std::numeric_limits<double>::quiet_NaN();
  // canonical solve
  double closedness = 0.0;
  double canonical_residual = std::numeric_limits<double>::quiet_NaN();
  double orthogonality_defect = std::numeric_limits<double>::quiet_NaN();
  double energy = std::numeric_limits<double>::quiet_NaN();
  double energy_bound = std::numeric_limits<double>::quiet_NaN();
  bool energy_ok = true;
};

class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, SolveReport rep) : std::runtime_error(what), report(std::move(rep)) {}
  SolveReport report;
};

struct SolverOptions {
  double tol = 1e-8;
  int maxiter = 0;  // 0: 10·sqrt(dof)
  double slack = 0.25;
};

/**
 * Nested: each space lives on an eroded node set (Sym on the mask, Mixed on
 * nodes whose axis neighbours are all in the mask, TwoForm one layer further
 * in) and only central differences are used, so D1·D0 = 0 exactly.
 * OneSided: every space on the full mask with the mask's difference
 * matrices; D1·D0 then has an edge defect.
 */
enum class Scheme { Nested, OneSided };

[[nodiscard]] inline const char* to_string(Scheme s) { return s == Scheme::Nested ? "nested" : "one-sided"; }

/// Subset of mask nodes with a reverse lookup.
struct NodeSet {
  std::vector<std::size_t> nodes;  // mask indices
  std::vector<int> local;          // mask index -> position, or -1

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
  [[nodiscard]] bool contains(std::size_t mask_index) const { return local[mask_index] >= 0; }
};

namespace detail {

struct StencilTerm {
  int out, in;
  VectorField z;
  double factor;
};

inline NodeSet full_set(const GridMask& mask) {
  NodeSet s;
  s.local.resize(mask.size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    s.nodes.push_back(p);
    s.local[p] = static_cast<int>(p);
  }
  return s;
}

inline int neighbour(const GridMask& mask, std::size_t p, std::size_t axis, int off) {
  Index4 q = mask.node(p);
  q[axis] += off;
  return mask.find(q);
}

/// nodes of `outer` whose 8 axis neighbours all lie in `outer`
inline NodeSet erode(const GridMask& mask, const NodeSet& outer) {
  NodeSet s;
  s.local.assign(mask.size(), -1);
  for (std::size_t p : outer.nodes) {
    bool ok = true;
    for (std::size_t axis = 0; axis < 4 && ok; ++axis)
      for (int off : {-1, 1}) {
        const int q = neighbour(mask, p, axis, off);
        if (q < 0 || !outer.contains(static_cast<std::size_t>(q))) ok = false;
      }
    if (ok) {
      s.local[p] = static_cast<int>(s.nodes.size());
      s.nodes.push_back(p);
    }
  }
  return s;
}

/// Central differences from `from` onto the nodes of `to` (all neighbours present).
inline SpMat central_difference(const GridMask& mask, const NodeSet& from, const NodeSet& to, int axis) {
  const double h = mask.grid().h();
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t r = 0; r < to.size(); ++r) {
    const std::size_t p = to.nodes[r];
    const int m1 = neighbour(mask, p, static_cast<std::size_t>(axis - 1), -1);
    const int p1 = neighbour(mask, p, static_cast<std::size_t>(axis - 1), 1);
    trip.emplace_back(static_cast<int>(r), from.local[static_cast<std::size_t>(p1)], 0.5 / h);
    trip.emplace_back(static_cast<int>(r), from.local[static_cast<std::size_t>(m1)], -0.5 / h);
  }
  SpMat d(static_cast<Eigen::Index>(to.size()), static_cast<Eigen::Index>(from.size()));
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

inline SpMatC assemble_terms(const std::array<SpMat, 4>& diff, const FieldLayout& from, const FieldLayout& to,
                             const std::vector<StencilTerm>& terms) {
  std::vector<Eigen::Triplet<cplx>> trip;
  for (const auto& t : terms)
    for (int axis = 1; axis <= 4; ++axis) {
      const cplx c = t.z[static_cast<std::size_t>(axis - 1)] * t.factor;
      if (c == cplx(0.0)) continue;
      const SpMat& d = diff[static_cast<std::size_t>(axis - 1)];
      for (Eigen::Index p = 0; p < d.outerSize(); ++p)
        for (SpMat::InnerIterator it(d, p); it; ++it)
          trip.emplace_back(to.index(static_cast<std::size_t>(p), t.out),
                            from.index(static_cast<std::size_t>(it.col()), t.in), c * it.value());
    }
  SpMatC A(to.dim(), from.dim());
  A.setFromTriplets(trip.begin(), trip.end());
  A.prune(cplx(0.0));
  A.makeCompressed();
  return A;
}

}  // namespace detail

/// D0, D1 on the mask, □ = D0 D0* + D1* D1 in the weighted metric.
class NeumannSystem {
 public:
  NeumannSystem(int k, const DomainSpec& d, const Weight& w, const Grid4& g, Scheme scheme = Scheme::Nested)
      : k_(k), scheme_(scheme), domain_(d), weight_(w), mask_(make_mask(g, d)) {
    if (k < 2) throw std::invalid_argument("Neumann system needs k >= 2");
    if (mask_->minimum_axis_count() < 4)
      throw std::invalid_argument("grid too coarse: fewer than 4 interior nodes along an axis");
    const VectorFieldTable& V = VectorFieldTable::standard();
    mask_weights_ = node_weights(*mask_, w);
    sets_[0] = detail::full_set(*mask_);
    if (scheme == Scheme::Nested) {
      sets_[1] = detail::erode(*mask_, sets_[0]);
      sets_[2] = detail::erode(*mask_, sets_[1]);
      if (sets_[2].size() == 0) throw std::invalid_argument("grid too coarse: no two-form nodes");
    } else {
      sets_[1] = sets_[0];
      sets_[2] = sets_[0];
    }
    std::array<SpMat, 4> d01, d12;
    for (int axis = 1; axis <= 4; ++axis) {
      const auto a = static_cast<std::size_t>(axis - 1);
      if (scheme == Scheme::Nested) {
        d01[a] = detail::central_difference(*mask_, sets_[0], sets_[1], axis);
        d12[a] = detail::central_difference(*mask_, sets_[1], sets_[2], axis);
      } else {
        d01[a] = d12[a] = mask_->difference(axis);
      }
    }
    const FieldLayout sym = layout(FieldKind::Sym), mixed = layout(FieldKind::Mixed), two = layout(FieldKind::TwoForm);
    mass_sym_ = masses(sym);
    mass_mixed_ = masses(mixed);
    mass_two_ = masses(two);

    std::vector<detail::StencilTerm> t0;
    for (int l = 0; l < k; ++l)
      for (int a = 0; a < 2; ++a) {
        t0.push_back({mixed_index(l, a), l, V.mixed(a, 0), 1.0});
        t0.push_back({mixed_index(l, a), l + 1, V.mixed(a, 1), 1.0});
      }
    D0_ = make_operator(sym, mixed, detail::assemble_terms(d01, sym, mixed, t0), mass_sym_, mass_mixed_);

    std::vector<detail::StencilTerm> t1;
    for (int l = 0; l + 1 < k; ++l) {
      t1.push_back({l, mixed_index(l, 1), V.mixed(0, 0), 0.5});
      t1.push_back({l, mixed_index(l, 0), V.mixed(1, 0), -0.5});
      t1.push_back({l, mixed_index(l + 1, 1), V.mixed(0, 1), 0.5});
      t1.push_back({l, mixed_index(l + 1, 0), V.mixed(1, 1), -0.5});
    }
    D1_ = make_operator(mixed, two, detail::assemble_terms(d12, mixed, two, t1), mass_mixed_, mass_two_);

    build_box_diagonal();
    build_bc_projector();
  }

  [[nodiscard]] int k() const { return k_; }
  [[nodiscard]] Scheme scheme() const { return scheme_; }
  [[nodiscard]] const MaskPtr& mask() const { return mask_; }
  [[nodiscard]] const DomainSpec& domain() const { return domain_; }
  [[nodiscard]] const Weight& weight() const { return weight_; }
  [[nodiscard]] const DiscreteOperator& D0() const { return D0_; }
  [[nodiscard]] const DiscreteOperator& D1() const { return D1_; }
  [[nodiscard]] const BcProjector& bc_projector() const { return bc_; }
  [[nodiscard]] const Eigen::VectorXd& mass_sym() const { return mass_sym_; }
  [[nodiscard]] const Eigen::VectorXd& mass_mixed() const { return mass_mixed_; }
  [[nodiscard]] const Eigen::VectorXd& mass_two() const { return mass_two_; }
  [[nodiscard]] const Eigen::VectorXd& mass(FieldKind kind) const {
    return kind == FieldKind::Sym ? mass_sym_ : kind == FieldKind::Mixed ? mass_mixed_ : mass_two_;
  }
  [[nodiscard]] const Eigen::VectorXd& box_diagonal() const { return box_diag_; }
  /// node set carrying fields of the given kind
  [[nodiscard]] const NodeSet& nodes(FieldKind kind) const { return sets_[level(kind)]; }
  [[nodiscard]] FieldLayout layout(FieldKind kind) const { return {kind, k_, nodes(kind).size()}; }
  [[nodiscard]] Point4 coordinate(FieldKind kind, std::size_t i) const {
    return mask_->coordinate(nodes(kind).nodes[i]);
  }

  [[nodiscard]] VecC box(const VecC& f) const {
    return D0_.apply(D0_.adjoint(f)) + D1_.adjoint(D1_.apply(f));
  }

  /// Sample a reduced field given per-component values at points.
  template <class F>
  [[nodiscard]] VecC sample(FieldKind kind, F&& component_value) const {
    const FieldLayout lay = layout(kind);
    VecC out(lay.dim());
    for (std::size_t p = 0; p < lay.nodes; ++p) {
      const Point4 x = coordinate(kind, p);
      for (int c = 0; c < lay.comps(); ++c) out[lay.index(p, c)] = component_value(c, x);
    }
    return out;
  }
  [[nodiscard]] VecC sample(const SpinorField<Polynomial>& f) const {
    return sample(f.kind, [&](int c, const Point4& x) { return f[static_cast<std::size_t>(c)](x); });
  }

  /**
   * Sym node whose D0* row is the full central stencil: every axis neighbour
   * carries a Mixed value computed with central differences.
   */
  [[nodiscard]] bool interior_sym(std::size_t i) const {
    const std::size_t p = sets_[0].nodes[i];
    for (std::size_t axis = 0; axis < 4; ++axis)
      for (int off : {-1, 1}) {
        const int q = detail::neighbour(*mask_, p, axis, off);
        if (q < 0 || !sets_[1].contains(static_cast<std::size_t>(q)) || !mask_->central(static_cast<std::size_t>(q)))
          return false;
      }
    return true;
  }
  /// TwoForm node where D1·D0 only involves central stencils.
  [[nodiscard]] bool interior_two(std::size_t i) const {
    return scheme_ == Scheme::Nested || mask_->deep_interior(sets_[2].nodes[i]);
  }

 private:
  static std::size_t level(FieldKind kind) {
    return kind == FieldKind::Sym ? 0 : kind == FieldKind::Mixed ? 1 : 2;
  }

  [[nodiscard]] Eigen::VectorXd masses(const FieldLayout& lay) const {
    const NodeSet& s = nodes(lay.kind);
    Eigen::VectorXd m(lay.dim());
    for (std::size_t p = 0; p < lay.nodes; ++p)
      for (int c = 0; c < lay.comps(); ++c)
        m[lay.index(p, c)] = multiplicity(lay.kind, k_, c) * mask_weights_[static_cast<Eigen::Index>(s.nodes[p])];
    return m;
  }

  static DiscreteOperator make_operator(const FieldLayout& from, const FieldLayout& to, SpMatC A,
                                        const Eigen::VectorXd& mf, const Eigen::VectorXd& mt) {
    DiscreteOperator op;
    op.from = from;
    op.to = to;
    op.AH = A.adjoint();
    op.A = std::move(A);
    op.mass_from = mf;
    op.mass_to = mt;
    return op;
  }

  void build_box_diagonal() {
    box_diag_ = Eigen::VectorXd::Zero(mass_mixed_.size());
    const SpMatC& A = D0_.A;
    for (Eigen::Index i = 0; i < A.outerSize(); ++i) {
      double s = 0.0;
      for (SpMatC::InnerIterator it(A, i); it; ++it) s += std::norm(it.value()) / mass_sym_[it.col()];
      box_diag_[i] += mass_mixed_[i] * s;
    }
    const SpMatC& B = D1_.A;
    for (Eigen::Index r = 0; r < B.outerSize(); ++r)
      for (SpMatC::InnerIterator it(B, r); it; ++it)
        box_diag_[it.col()] += mass_two_[r] * std::norm(it.value()) / mass_mixed_[it.col()];
    for (Eigen::Index i = 0; i < box_diag_.size(); ++i)
      if (!(box_diag_[i] > 0.0)) box_diag_[i] = 1.0;
  }

  // Mixed nodes with an axis neighbour outside the Mixed node set
  void build_bc_projector() {
    bc_.k = k_;
    const Eigen::VectorXd g = mixed_metric(k_);
    const MatC Ginv = g.cwiseInverse().cast<cplx>().asDiagonal();
    const NodeSet& mixed = sets_[1];
    for (std::size_t i = 0; i < mixed.size(); ++i) {
      const std::size_t p = mixed.nodes[i];
      bool edge = false;
      for (std::size_t axis = 0; axis < 4 && !edge; ++axis)
        for (int off : {-1, 1}) {
          const int q = detail::neighbour(*mask_, p, axis, off);
          if (q < 0 || !mixed.contains(static_cast<std::size_t>(q))) edge = true;
        }
      if (!edge) continue;
      const Vec4 grad = domain_.r(mask_->coordinate(p)).g;
      const MatC C = tangency_constraints(Vec4(grad / grad.norm()), k_).C;
      const MatC S = C * Ginv * C.adjoint();
      const MatC P = MatC::Identity(2 * k_, 2 * k_) - Ginv * C.adjoint() * S.ldlt().solve(C);
      bc_.nodes.push_back(i);
      bc_.blocks.push_back(P);
      bc_.constraints.push_back(C);
    }
  }

  int k_;
  Scheme scheme_;
  DomainSpec domain_;
  Weight weight_;
  MaskPtr mask_;
  std::array<NodeSet, 3> sets_;
  Eigen::VectorXd mask_weights_, mass_sym_, mass_mixed_, mass_two_, box_diag_;
  DiscreteOperator D0_, D1_;
  BcProjector bc_;
};

[[nodiscard]] inline int default_maxiter(Eigen::Index dof) {
  return static_cast<int>(std::ceil(10.0 * std::sqrt(static_cast<double>(dof))));
}

/**
 * Jacobi-preconditioned CG for □ x = g in the weighted metric. Throws
 * SolveError on negative curvature or when maxiter is exhausted.
 */
[[nodiscard]] inline std::pair<VecC, SolveReport> solve_box(const NeumannSystem& sys, const VecC& g,
                                                            const SolverOptions& opt, double C0 = 0.0) {
  const Eigen::VectorXd& M = sys.mass_mixed();
  const Eigen::VectorXd& D = sys.box_diagonal();
  if (g.size() != M.size()) throw std::invalid_argument("right-hand side has the wrong size");
  if (!g.allFinite()) throw std::invalid_argument("right-hand side is not finite");
  SolveReport rep;
  rep.C0 = C0;
  const int maxiter = opt.maxiter > 0 ? opt.maxiter : default_maxiter(g.size());
  VecC x = VecC::Zero(g.size());
  const double gnorm = weighted_norm(g, M);
  rep.norm_rhs = gnorm;
  if (gnorm == 0.0) {
    rep.converged = true;
    return {x, rep};
  }
  VecC r = g;
  VecC z = r.cwiseQuotient(D.cast<cplx>());
  VecC p = z;
  double rz = weighted_dot(r, z, M).real();
  for (int it = 1; it <= maxiter; ++it) {
    const VecC q = sys.box(p);
    const double pq = weighted_dot(q, p, M).real();
    const double pp = weighted_dot(p, p, M).real();
    if (pq <= -1e-12 * pp * D.maxCoeff()) {
      rep.iterations = it;
      throw SolveError("negative curvature in CG: the operator is not positive semidefinite", rep);
    }
    if (pq == 0.0) break;
    const double alpha = rz / pq;
    x += alpha * p;
    r -= alpha * q;
    rep.iterations = it;
    rep.relative_residual = weighted_norm(r, M) / gnorm;
    rep.residual_history.push_back(rep.relative_residual);
    if (rep.relative_residual <= opt.tol) {
      rep.converged = true;
      break;
    }
    z = r.cwiseQuotient(D.cast<cplx>());
    const double rz_new = weighted_dot(r, z, M).real();
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  // recompute the true residual
  rep.relative_residual = weighted_norm(g - sys.box(x), M) / gnorm;
  rep.converged = rep.relative_residual <= opt.tol * 1.0001 || rep.converged;
  rep.norm_solution = weighted_norm(x, M);
  if (C0 > 0.0) rep.bound_ok = rep.norm_solution * C0 <= gnorm * (1.0 + opt.slack);
  if (!rep.converged)
    throw SolveError("CG did not reach tolerance after " + std::to_string(rep.iterations) + " iterations", rep);
  return {x, rep};
}

/**
 * u = D0* N f for D1-closed data. `kernel` holds Sym-space vectors that
 * the solution should be orthogonal to.
 */
[[nodiscard]] inline std::pair<VecC, SolveReport> canonical_solve(const NeumannSystem& sys, const VecC& f,
                                                                  const SolverOptions& opt, double C0,
                                                                  const std::vector<VecC>& kernel = {}) {
  const double fnorm = weighted_norm(f, sys.mass_mixed());
  const double closed = fnorm > 0 ? weighted_norm(sys.D1().apply(f), sys.mass_two()) / fnorm : 0.0;
  if (closed > 1e-6) {
    SolveReport rep;
    rep.closedness = closed;
    throw SolveError("data is not D1-closed: |D1 f|/|f| = " + std::to_string(closed), rep);
  }
  auto [Nf, rep] = solve_box(sys, f, opt, C0);
  rep.closedness = closed;
  const VecC u = sys.D0().adjoint(Nf);
  const double unorm = weighted_norm(u, sys.mass_sym());
  rep.canonical_residual = fnorm > 0 ? weighted_norm(sys.D0().apply(u) - f, sys.mass_mixed()) / fnorm : 0.0;
  rep.orthogonality_defect = 0.0;
  for (const VecC& v : kernel) {
    const double vn = weighted_norm(v, sys.mass_sym());
    if (vn > 0 && unorm > 0)
      rep.orthogonality_defect =
          std::max(rep.orthogonality_defect, std::abs(weighted_dot(u, v, sys.mass_sym())) / (vn * unorm));
  }
  const double d1n = weighted_norm(sys.D1().apply(Nf), sys.mass_two());
  rep.energy = unorm * unorm + d1n * d1n;
  if (C0 > 0) {
    rep.energy_bound = fnorm * fnorm / C0 * (1.0 + opt.slack);
    rep.energy_ok = rep.energy <= rep.energy_bound;
  }
  return {u, rep};
}

/// P f = f − D0* N (D0 f)
[[nodiscard]] inline std::pair<VecC, SolveReport> bergman_project(const NeumannSystem& sys, const VecC& f,
                                                                  const SolverOptions& opt) {
  const VecC g = sys.D0().apply(f);
  auto [Ng, rep] = solve_box(sys, g, opt);
  return {f - sys.D0().adjoint(Ng), rep};
}

/// Random Sym/Mixed/TwoForm field whose components are polynomials of degree ≤ `degree`.
[[nodiscard]] inline VecC random_smooth_field(const NeumannSystem& sys, FieldKind kind, int degree, Rng& rng) {
  const int m = component_count(kind, sys.k());
  std::vector<Polynomial> comps(static_cast<std::size_t>(m));
  for (auto& c : comps)
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b)
        for (int cc = 0; a + b + cc <= degree; ++cc)
          for (int d = 0; a + b + cc + d <= degree; ++d) c.add_term({a, b, cc, d}, rng.complex_normal());
  return sys.sample(kind, [&](int c, const Point4& x) { return comps[static_cast<std::size_t>(c)](x); });
}

struct ProbeReport {
  double C0 = 0.0;
  double slack = 0.5;
  int trials = 0;
  double min_q = std::numeric_limits<double>::infinity();
  double mean_q = 0.0;
  double bc_residual = 0.0;
  double lanczos_min = std::numeric_limits<double>::quiet_NaN();
  double lanczos_residual = std::numeric_limits<double>::quiet_NaN();
  bool lanczos_converged = false;
  int lanczos_steps = 0;
  bool pass = false;
};

/**
 * Smallest Ritz value of P□P on range(P) (P = bc projector) by Lanczos in
 * the weighted metric with full reorthogonalisation.
 */
inline void lanczos_min(const NeumannSystem& sys, int steps, Rng& rng, ProbeReport& rep) {
  const auto& M = sys.mass_mixed();
  const auto& P = sys.bc_projector();
  auto op = [&](const VecC& v) { return P.apply(sys.box(P.apply(v))); };
  VecC q = P.apply(random_smooth_field(sys, FieldKind::Mixed, 2, rng));
  for (Eigen::Index i = 0; i < q.size(); ++i) q[i] += 1e-3 * rng.complex_normal();
  q = P.apply(q);
  q /= weighted_norm(q, M);
  std::vector<VecC> basis{q};
  std::vector<double> alpha, beta;
  VecC prev = VecC::Zero(q.size());
  double b = 0.0;
  for (int j = 0; j < steps; ++j) {
    VecC w = op(basis.back()) - b * prev;
    const double a = weighted_dot(w, basis.back(), M).real();
    w -= a * basis.back();
    for (const VecC& v : basis) w -= weighted_dot(w, v, M) * v;
    alpha.push_back(a);
    b = weighted_norm(w, M);
    rep.lanczos_steps = j + 1;
    if (b < 1e-14) break;
    beta.push_back(b);
    prev = basis.back();
    basis.push_back(w / b);
  }
  const int m = static_cast<int>(alpha.size());
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  rep.lanczos_min = es.eigenvalues()[0];
  const double last = static_cast<int>(beta.size()) >= m ? beta[static_cast<std::size_t>(m - 1)] : 0.0;
  rep.lanczos_residual = std::abs(last * es.eigenvectors()(m - 1, 0));
  rep.lanczos_converged = rep.lanczos_residual <= 1e-3 * std::max(1.0, std::abs(rep.lanczos_min));
}

/// q(f) = (‖D0* f‖² + ‖D1 f‖²)/‖f‖² over projected random smooth fields.
[[nodiscard]] inline ProbeReport estimate_probe(const NeumannSystem& sys, const EstimateConstants& consts,
                                                int trials, Rng& rng, double slack = 0.5,
                                                int lanczos_steps = 60) {
  if (!(consts.C0 > 0.0)) throw std::invalid_argument("estimate probe needs C0 > 0");
  ProbeReport rep;
  rep.C0 = consts.C0;
  rep.slack = slack;
  rep.trials = trials;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const VecC f = sys.bc_projector().apply(random_smooth_field(sys, FieldKind::Mixed, 2, rng));
    rep.bc_residual = std::max(rep.bc_residual, sys.bc_projector().residual(f));
    const double fn = weighted_norm(f, sys.mass_mixed());
    const double a = weighted_norm(sys.D0().adjoint(f), sys.mass_sym());
    const double b = weighted_norm(sys.D1().apply(f), sys.mass_two());
    const double q = (a * a + b * b) / (fn * fn);
    rep.min_q = std::min(rep.min_q, q);
    sum += q;
  }
  rep.mean_q = trials ? sum / trials : 0.0;
  if (lanczos_steps > 0) lanczos_min(sys, lanczos_steps, rng, rep);
  rep.pass = rep.min_q >= consts.C0 * (1.0 - slack);
  return rep;
}

/**
 * k-regular polynomials of exact degree `degree` (all components
 * homogeneous), from the nullspace of the coefficient map of D0.
 */
[[nodiscard]] inline std::vector<SpinorField<Polynomial>> k_regular_polynomials(int k, int degree) {
  std::vector<Exponent> monos;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b)
      for (int c = 0; a + b + c <= degree; ++c) monos.push_back({a, b, c, degree - a - b - c});
  const int n_in = (k + 1) * static_cast<int>(monos.size());
  std::vector<Exponent> out_monos;
  if (degree > 0)
    for (int a = 0; a <= degree - 1; ++a)
      for (int b = 0; a + b <= degree - 1; ++b)
        for (int c = 0; a + b + c <= degree - 1; ++c) out_monos.push_back({a, b, c, degree - 1 - a - b - c});
  const int n_out = 2 * k * static_cast<int>(out_monos.size());
  MatC A = MatC::Zero(std::max(n_out, 1), n_in);
  for (int col = 0; col < n_in; ++col) {
    SpinorField<Polynomial> u(FieldKind::Sym, k);
    u[static_cast<std::size_t>(col / static_cast<int>(monos.size()))] =
        Polynomial::monomial(monos[static_cast<std::size_t>(col % static_cast<int>(monos.size()))]);
    const SpinorField<Polynomial> f = apply_D0(u);
    for (int c = 0; c < 2 * k; ++c)
      for (std::size_t m = 0; m < out_monos.size(); ++m)
        A(c * static_cast<int>(out_monos.size()) + static_cast<int>(m), col) =
            f[static_cast<std::size_t>(c)].coefficient(out_monos[m]);
  }
  const MatC N = degree == 0 ? MatC::Identity(n_in, n_in) : nullspace(A);
  std::vector<SpinorField<Polynomial>> out;
  for (Eigen::Index j = 0; j < N.cols(); ++j) {
    SpinorField<Polynomial> u(FieldKind::Sym, k);
    for (int col = 0; col < n_in; ++col) {
      cplx v = N(col, j);
      if (std::abs(v) < 1e-14) continue;
      u[static_cast<std::size_t>(col / static_cast<int>(monos.size()))].add_term(
          monos[static_cast<std::size_t>(col % static_cast<int>(monos.size()))], v);
    }
    out.push_back(u);
  }
  return out;
}

/**
 * Discrete kernel of the assembled D0 inside the span of sampled polynomial
 * fields of degree ≤ `degree` (numeric SVD of D0 restricted to that span).
 */
[[nodiscard]] inline std::vector<VecC> discrete_kernel_in_polynomials(const NeumannSystem& sys, int degree,
                                                                      double rel_tol = 1e-9) {
  std::vector<Exponent> monos;
  for (int a = 0; a <= degree; ++a)
    for (int b = 0; a + b <= degree; ++b)
      for (int c = 0; a + b + c <= degree; ++c)
        for (int d = 0; a + b + c + d <= degree; ++d) monos.push_back({a, b, c, d});
  const int k = sys.k();
  const auto n_in = static_cast<Eigen::Index>((k + 1) * monos.size());
  const auto& Ms = sys.mass_sym();
  const auto& Mm = sys.mass_mixed();
  MatC B(Ms.size(), n_in);
  for (Eigen::Index col = 0; col < n_in; ++col) {
    const int comp = static_cast<int>(col / static_cast<Eigen::Index>(monos.size()));
    const Exponent e = monos[static_cast<std::size_t>(col % static_cast<Eigen::Index>(monos.size()))];
    const Polynomial mono = Polynomial::monomial(e);
    B.col(col) = sys.sample(FieldKind::Sym, [&](int c, const Point4& x) { return c == comp ? mono(x) : cplx(0.0); });
  }
  // orthonormalise the trial span in the Sym metric, then SVD of the weighted image
  const Eigen::VectorXd sqm = Ms.cwiseSqrt(), sqmm = Mm.cwiseSqrt();
  const MatC Bw = sqm.cast<cplx>().asDiagonal() * B;
  const Eigen::HouseholderQR<MatC> qr(Bw);
  const MatC R = qr.matrixQR().topRows(n_in).triangularView<Eigen::Upper>();
  const MatC Q = Bw * R.triangularView<Eigen::Upper>().solve(MatC::Identity(n_in, n_in));
  const MatC U = sqm.cwiseInverse().cast<cplx>().asDiagonal() * Q;  // metric-orthonormal columns
  MatC image(Mm.size(), n_in);
  for (Eigen::Index j = 0; j < n_in; ++j) image.col(j) = sqmm.cast<cplx>().asDiagonal() * sys.D0().apply(U.col(j));
  const Eigen::JacobiSVD<MatC> svd(image, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  std::vector<VecC> out;
  for (Eigen::Index j = 0; j < n_in; ++j)
    if (s[j] <= rel_tol * s[0]) out.push_back(U * svd.matrixV().col(j));
  return out;
}

struct DefectReport {
  double interior = 0.0;  // nodes whose stencils are all central
  double overall = 0.0;
};

/// ‖D1 D0 u‖ relative to ‖u‖ per node class (max-norm over nodes).
[[nodiscard]] inline DefectReport complex_defect(const NeumannSystem& sys, const VecC& u) {
  const VecC r = sys.D1().apply(sys.D0().apply(u));
  const double un = u.cwiseAbs().maxCoeff();
  DefectReport rep;
  if (un == 0.0) return rep;
  const int m = component_count(FieldKind::TwoForm, sys.k());
  for (std::size_t p = 0; p < sys.nodes(FieldKind::TwoForm).size(); ++p) {
    const double v = r.segment(static_cast<Eigen::Index>(p) * m, m).cwiseAbs().maxCoeff() / un;
    rep.overall = std::max(rep.overall, v);
    if (sys.interior_two(p)) rep.interior = std::max(rep.interior, v);
  }
  return rep;
}

/**
 * Largest gap at interior Sym nodes between the assembled D0* and the
 * continuum formula, applied to a polynomial Mixed field.
 */
[[nodiscard]] inline double adjoint_consistency(const NeumannSystem& sys, const SpinorField<Polynomial>& f) {
  const DeltaOperator<Polynomial> d(sys.weight());
  const SpinorField<Polynomial> exact = apply_D0_star(f, d);
  const VecC disc = sys.D0().adjoint(sys.sample(f));
  const VecC cont = sys.sample(exact);
  const int m = sys.k() + 1;
  double worst = 0.0, scale = 0.0;
  for (std::size_t p = 0; p < sys.nodes(FieldKind::Sym).size(); ++p) {
    if (!sys.interior_sym(p)) continue;
    const auto off = static_cast<Eigen::Index>(p) * m;
    worst = std::max(worst, (disc.segment(off, m) - cont.segment(off, m)).cwiseAbs().maxCoeff());
    scale = std::max(scale, cont.segment(off, m).cwiseAbs().maxCoeff());
  }
  return scale > 0 ? worst / scale : worst;
}

/// Coordinate-list dump: one "row col re im" line per stored entry.
inline void write_coo(std::ostream& os, const SpMatC& A) {
  os.precision(17);
  os << "% rows " << A.rows() << " cols " << A.cols() << " nnz " << A.nonZeros() << "\n";
  for (Eigen::Index r = 0; r < A.outerSize(); ++r)
    for (SpMatC::InnerIterator it(A, r); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
}

}  // namespace fueter
