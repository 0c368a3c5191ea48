#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fueter/config.hpp"
#include "fueter/convexity.hpp"
#include "fueter/neumann.hpp"
#include "fueter/operators.hpp"
#include "fueter/sampling.hpp"
#include "fueter/symbols.hpp"

namespace fueter {

/// Measured values with limits, plus the names of the checks that failed.
class Recorder {
 public:
  void upper(const std::string& name, double value, double limit) {
    const bool ok = value <= limit;
    values_[name] = {{"value", value}, {"max", limit}, {"pass", ok}};
    if (!ok) failures_.push_back(name + " = " + fmt(value) + " exceeds " + fmt(limit));
  }
  void lower(const std::string& name, double value, double limit) {
    const bool ok = value >= limit;
    values_[name] = {{"value", value}, {"min", limit}, {"pass", ok}};
    if (!ok) failures_.push_back(name + " = " + fmt(value) + " is below " + fmt(limit));
  }
  void equal(const std::string& name, long long value, long long expected) {
    const bool ok = value == expected;
    values_[name] = {{"value", value}, {"expected", expected}, {"pass", ok}};
    if (!ok) failures_.push_back(name + " = " + std::to_string(value) + ", expected " + std::to_string(expected));
  }
  void flag(const std::string& name, bool ok, const std::string& why = "") {
    values_[name] = {{"pass", ok}};
    if (!ok) failures_.push_back(name + (why.empty() ? " failed" : ": " + why));
  }
  void note(const std::string& name, json v) { values_[name] = std::move(v); }
  void fail(const std::string& msg) { failures_.push_back(msg); }

  [[nodiscard]] bool pass() const { return failures_.empty(); }
  [[nodiscard]] const std::vector<std::string>& failures() const { return failures_; }
  [[nodiscard]] json values() const { return values_; }

  static std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
  }

 private:
  json values_ = json::object();
  std::vector<std::string> failures_;
};

struct SuiteResult {
  std::string name;
  std::uint64_t seed = 0;
  bool pass = false;
  json measured;
  std::vector<std::string> failures;
  double seconds = 0.0;

  [[nodiscard]] json to_json() const {
    return {{"pass", pass}, {"seed", seed}, {"measured", measured}, {"failures", failures}};
  }
};

/// Sample counts; defaults are the acceptance sizes.
struct SuiteSizes {
  int polynomials = 100;
  int tensors = 1000;
  int covectors = 100;
  int boundary = 200;
  int points = 50;
};

/// FNV-1a of the suite name mixed into the run seed, so every suite draws its own stream.
[[nodiscard]] inline std::uint64_t suite_seed(std::uint64_t seed, const std::string& name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

[[nodiscard]] inline json to_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"relative_residual", r.relative_residual},
          {"converged", r.converged},
          {"residual_history", r.residual_history},
          {"C0", r.C0},
          {"norm_rhs", r.norm_rhs},
          {"norm_solution", r.norm_solution},
          {"bound_ok", r.bound_ok},
          {"closedness", r.closedness},
          {"canonical_residual", r.canonical_residual},
          {"orthogonality_defect", r.orthogonality_defect},
          {"energy", r.energy},
          {"energy_bound", r.energy_bound},
          {"energy_ok", r.energy_ok}};
}

[[nodiscard]] inline json to_json(const ProbeReport& r) {
  return {{"C0", r.C0},
          {"slack", r.slack},
          {"trials", r.trials},
          {"min_q", r.min_q},
          {"mean_q", r.mean_q},
          {"threshold", r.C0 * (1.0 - r.slack)},
          {"bc_residual", r.bc_residual},
          {"lanczos_min", r.lanczos_min},
          {"lanczos_residual", r.lanczos_residual},
          {"lanczos_converged", r.lanczos_converged},
          {"lanczos_steps", r.lanczos_steps},
          {"pass", r.pass}};
}

[[nodiscard]] inline json to_json(const EstimateConstants& e) {
  return {{"c", e.c}, {"grad_sq", e.grad_sq}, {"grad_sq_analytic", e.grad_sq_analytic}, {"k", e.k}, {"C0", e.C0}};
}

// ---------------------------------------------------------------- spinor algebra

namespace checks {

inline FullTensor<cplx> random_full(const std::vector<SlotKind>& slots, Rng& rng) {
  FullTensor<cplx> t(slots);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.complex_normal();
  return t;
}

inline double max_gap(const FullTensor<cplx>& a, const FullTensor<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline std::vector<int> all_slots(int p) {
  std::vector<int> s(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) s[static_cast<std::size_t>(i)] = i;
  return s;
}

/// Worst relative residual of the pairing and contraction lemmas over `count` random draws.
inline void spinor_lemmas(int count, Rng& rng, Recorder& rec) {
  double sym_pair = 0, anti_pair = 0, swap = 0, trace_u = 0, trace_p = 0, sym_ip = 0;
  const auto P2 = std::vector<SlotKind>(2, SlotKind::Primed), U2 = std::vector<SlotKind>(2, SlotKind::Unprimed);
  for (int t = 0; t < count; ++t) {
    // pairing a symmetric tensor against H or its symmetrisation
    {
      const auto h = symmetrize_primed(random_full(P2, rng), {0, 1});
      const auto H = random_full(P2, rng);
      const cplx a = inner_product(h, H), b = inner_product(h, symmetrize_primed(H, {0, 1}));
      sym_pair = std::max(sym_pair, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    // same for antisymmetric pairs
    {
      const auto h = antisymmetrize_pair(random_full(U2, rng), 0, 1);
      const auto H = random_full(U2, rng);
      const cplx a = inner_product(h, H), b = inner_product(h, antisymmetrize_pair(H, 0, 1));
      anti_pair = std::max(anti_pair, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
    // Σ h_BA conj(H_AB) = Σ h_AB conj(H_AB) − 2 Σ h_[AB] conj(H_[AB])
    {
      const auto h = random_full(U2, rng), H = random_full(U2, rng);
      cplx lhs = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) lhs += h({b, a}) * std::conj(H({a, b}));
      const cplx rhs =
          inner_product(h, H) - 2.0 * inner_product(antisymmetrize_pair(h, 0, 1), antisymmetrize_pair(H, 0, 1));
      swap = std::max(swap, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    // contraction f^A_A = −2 f_[01], for unprimed and primed pairs
    {
      const auto f = random_full(U2, rng);
      const cplx tr = contract(raise_unprimed(f, 0), 0, 1)[0];
      const cplx expect = -2.0 * antisymmetrize_pair(f, 0, 1)({0, 1});
      trace_u = std::max(trace_u, std::abs(tr - expect) / std::max(1.0, std::abs(expect)));
      const auto g = random_full(P2, rng);
      const cplx trp = contract(raise_primed(g, 0), 0, 1)[0];
      const cplx expectp = -(g({0, 1}) - g({1, 0}));
      trace_p = std::max(trace_p, std::abs(trp - expectp) / std::max(1.0, std::abs(expectp)));
    }
    // ⟨sym g, sym G⟩ = ⟨sym g, G⟩, rank 1..5
    {
      const int p = 1 + t % 5;
      const auto slots = std::vector<SlotKind>(static_cast<std::size_t>(p), SlotKind::Primed);
      const auto g = symmetrize_primed(random_full(slots, rng), all_slots(p));
      const auto G = random_full(slots, rng);
      const cplx a = inner_product(g, symmetrize_primed(G, all_slots(p))), b = inner_product(g, G);
      sym_ip = std::max(sym_ip, std::abs(a - b) / std::max(1.0, std::abs(a)));
    }
  }
  rec.upper("spinor/symmetric_pairing", sym_pair, 1e-12);
  rec.upper("spinor/antisymmetric_pairing", anti_pair, 1e-12);
  rec.upper("spinor/swap_identity", swap, 1e-12);
  rec.upper("spinor/contraction_unprimed", trace_u, 1e-12);
  rec.upper("spinor/contraction_primed", trace_p, 1e-12);
  rec.upper("spinor/symmetrised_inner_product", sym_ip, 1e-12);
}

}  // namespace checks

// ---------------------------------------------------------------- suites

struct SuiteContext {
  ExperimentConfig config;
  SuiteSizes sizes;
};

/// Exactness of the complex, the conjugation identity, commutators and spinor algebra.
inline void suite_identities(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const int k = ctx.config.k;
  const int count = ctx.sizes.polynomials;
  const VectorFieldTable& V = VectorFieldTable::standard();
  rec.flag("tables/cross_check", true);

  double d1d0 = 0.0;
  for (int t = 0; t < count; ++t) {
    const auto f = apply_D1(apply_D0(random_spinor_field(rng, FieldKind::Sym, k, 4)));
    for (const auto& c : f.c) d1d0 = std::max(d1d0, c.max_abs_coefficient());
  }
  rec.upper("D1D0/max_coefficient", d1d0, 1e-12);

  double conj_gap = 0.0;
  for (int t = 0; t < count; ++t) {
    const Polynomial f = random_polynomial(rng, 4, true);
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap)
        conj_gap = std::max(conj_gap, (fueter::apply(V.mixed(a, ap), f).conj() + fueter::apply(V.raised(a, ap), f))
                                          .max_abs_coefficient());
  }
  rec.upper("conjugation/max_coefficient", conj_gap, 1e-12);

  double comm = 0.0;
  for (int t = 0; t < count; ++t) {
    const Weight w = Weight::polynomial(random_polynomial(rng, 3, true));
    comm = std::max(comm, commutator_check(V, w, random_polynomial(rng, 3)));
  }
  rec.upper("commutator/max_coefficient", comm, 1e-12);

  // Z_0^{1'} conj(Z_0^{1'}) = ∂1² + ∂2²,  Z_0^{1'} conj(Z_1^{0'}) = −∂1² + ∂2² − 2i∂1∂2
  double second = 0.0;
  for (int t = 0; t < count; ++t) {
    const Polynomial p = random_polynomial(rng, 4);
    const Polynomial d11 = poly_diff(poly_diff(p, 1), 1), d22 = poly_diff(poly_diff(p, 2), 2);
    const Polynomial d12 = poly_diff(poly_diff(p, 1), 2);
    const Polynomial a = fueter::apply(V.mixed(0, 1), fueter::apply(conj(V.mixed(0, 1)), p)) - (d11 + d22);
    const Polynomial b = fueter::apply(V.mixed(0, 1), fueter::apply(conj(V.mixed(1, 0)), p)) -
                         (d22 - d11 - cplx(0.0, 2.0) * d12);
    second = std::max({second, a.max_abs_coefficient(), b.max_abs_coefficient()});
  }
  rec.upper("second_order/max_coefficient", second, 1e-12);

  checks::spinor_lemmas(ctx.sizes.tensors, rng, rec);
}

/// Levi forms, plurisubharmonicity, chain rule, pseudoconvexity and its invariance.
inline void suite_convexity(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const int k = ctx.config.k;
  const Point4 origin{0, 0, 0, 0};

  const auto r1 = metric_eigenvalues(levi_matrix(Weight::r1(), origin, k));
  const auto r2 = metric_eigenvalues(levi_matrix(Weight::r2(), origin, k));
  rec.note("levi/r1_eigenvalues", std::vector<double>(r1.data(), r1.data() + r1.size()));
  rec.note("levi/r2_eigenvalues", std::vector<double>(r2.data(), r2.data() + r2.size()));
  if (k == 2) {
    rec.upper("levi/r1_min_gap", std::abs(r1.minCoeff() - 4.0), 1e-9);
    rec.upper("levi/r1_max_gap", std::abs(r1.maxCoeff() - 8.0), 1e-9);
  }
  const double kappa = 0.125;
  const auto rad = metric_eigenvalues(levi_matrix(Weight::radial(kappa), origin, k));
  const double expect = (4.0 * k + 4.0) * kappa;
  rec.upper("levi/radial_identity_gap", std::max(std::abs(rad.minCoeff() - expect), std::abs(rad.maxCoeff() - expect)),
            1e-10);

  double herm = 0.0, pair = 0.0;
  for (int t = 0; t < ctx.sizes.points; ++t) {
    Mat4 q;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q(i, j) = rng.normal();
    const Mat4 hess = q + q.transpose();
    herm = std::max(herm, levi_matrix(hess, k).hermitian_defect());
    const HermitianForm L2 = levi_matrix(hess, 2);
    VecC xi(4);
    for (int i = 0; i < 4; ++i) xi[i] = rng.complex_normal();
    pair = std::max(pair, std::abs(L2(xi) - levi_form_pairwise_k2(hess, xi)) / std::max(1.0, std::abs(L2(xi))));
  }
  rec.upper("levi/hermitian_defect", herm, 1e-12);
  rec.upper("levi/k2_pairwise_agreement", pair, 1e-12);

  const DomainSpec domain = make_domain(ctx.config.domain);
  const Weight weight = make_weight(ctx.config.weight);
  const auto inside = interior_samples(domain, ctx.sizes.points, rng);
  const PshReport psh = is_k_plurisubharmonic(weight, inside, 0.0, k);
  rec.note("weight/min_levi_eigenvalue", psh.min_eig);

  double gap = std::numeric_limits<double>::infinity();
  for (const Chi& chi : Chi::catalog())
    for (int t = 0; t < ctx.sizes.points; ++t) {
      Mat4 q;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) q(i, j) = rng.normal();
      const Weight phi = Weight::quadratic(q * q.transpose() * 0.25);
      const Point4 x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      gap = std::min(gap, metric_eigenvalues(chain_rule_gap(phi, chi, x, k))[0]);
    }
  rec.lower("chain_rule/min_gap_eigenvalue", gap, -1e-9);

  const auto boundary = boundary_samples(domain, ctx.sizes.boundary, rng);
  double c = 0.0;
  if (domain.kind == DomainSpec::Kind::Ball) c = (2.0 * k + 2.0) / domain.radius;
  const PseudoconvexReport pc = is_k_pseudoconvex(domain, boundary, c, k);
  rec.note("pseudoconvex/c", c);
  rec.note("pseudoconvex/min_constrained_eigenvalue", pc.min_constrained_eig);
  rec.flag("pseudoconvex/pass", pc.pass, "constrained Levi minimum " + Recorder::fmt(pc.min_constrained_eig));
  rec.note("pseudoconvex/degenerate_samples", pc.degenerate);
  long long nullity_off = 0;
  for (const auto& s : pc.samples) nullity_off += s.nullity != k - 1;
  rec.equal("tangency/samples_with_nullity_other_than_k_minus_1", nullity_off, 0);

  // r → μ r with μ = 1 + 0.3/(1 + x2²)
  const DefiningMultiplier mu = [](const JetPoint& x) { return 1.0 + 0.3 / (1.0 + x[1] * x[1]); };
  double angle = 0.0, scaling = 0.0;
  bool same_verdict = true;
  for (const auto& s : boundary) {
    const Jet base = defining_jet(domain, s.x, {});
    const Jet scaled = defining_jet(domain, s.x, mu);
    const ConstrainedLevi a = constrained_levi(base, k), b = constrained_levi(scaled, k);
    angle = std::max(angle, principal_angle_sine(a.basis, b.basis));
    const double m = mu(seed_point(s.x)).v;
    const MatC restricted = a.basis.adjoint() * levi_matrix(scaled.h, k).M * a.basis;
    const double sc = std::max(1.0, a.restricted.cwiseAbs().maxCoeff());
    scaling = std::max(scaling, (restricted - m * a.restricted).cwiseAbs().maxCoeff() / sc);
    const bool va = a.nullity == 0 || a.eigs[0] >= c - 1e-8;
    const bool vb = b.nullity == 0 || b.eigs[0] >= m * c - 1e-8;
    same_verdict = same_verdict && va == vb;
  }
  rec.upper("invariance/principal_angle_sine", angle, 1e-8);
  rec.upper("invariance/restricted_form_scaling", scaling, 1e-9);
  rec.flag("invariance/same_verdict", same_verdict);
}

/// Rank and kernel structure of the principal symbols; exact determinant identity.
inline void suite_symbols(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const int k = ctx.config.k;
  long long bad_rank = 0, bad_kernel = 0, bad_intersection = 0, bad_scaling = 0;
  for (int t = 0; t < ctx.sizes.covectors; ++t) {
    Vec4 xi;
    for (int j = 0; j < 4; ++j) xi[j] = rng.normal();
    const KernelReport r = kernel_report(build_symbols(xi, k));
    bad_rank += r.rank_L4 != k + 1;
    bad_kernel += r.dim_ker_L4 != k - 1;
    bad_intersection += r.dim_ker_intersection != 0;
    const KernelReport r2 = kernel_report(build_symbols(Vec4(2.0 * xi), k));
    bad_scaling += r2.rank_L4 != r.rank_L4 || r2.dim_ker_intersection != r.dim_ker_intersection;
  }
  rec.note("covectors", ctx.sizes.covectors);
  rec.equal("L4/rank_not_k_plus_1", bad_rank, 0);
  rec.equal("L4/kernel_not_k_minus_1", bad_kernel, 0);
  rec.equal("kernel_intersection/nonzero", bad_intersection, 0);
  rec.equal("scaling/changed_dimensions", bad_scaling, 0);

  long long det_bad = 0;
  for (int t = 0; t < ctx.sizes.covectors; ++t) {
    std::array<Rational, 4> xi;
    Rational norm_sq = 0;
    for (auto& v : xi) {
      v = Rational(rng.integer(-50, 50), rng.integer(1, 30));
      norm_sq += v * v;
    }
    const GaussianRational det = raised_block_determinant(xi);
    det_bad += !(det.re == norm_sq && det.im == Rational(0));
  }
  rec.equal("determinant/mismatches", det_bad, 0);
}

/// Stokes residual: compactly supported and general test fields, with a refinement study.
inline void suite_stokes(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const DomainSpec domain = make_domain(ctx.config.domain);
  if (!domain.star_shaped_surface()) {
    rec.fail("stokes needs a star-shaped domain with a surface parameterisation, got " + domain.name());
    return;
  }
  const Weight weight = make_weight(ctx.config.weight);
  const VectorFieldTable& V = VectorFieldTable::standard();
  const int n = ctx.config.grid.n;
  const std::vector<int> ns{std::max(4, n / 2), std::max(4, (3 * n) / 4), n};
  auto grid_at = [&](int m) {
    GridConfig g = ctx.config.grid;
    g.n = m;
    return make_grid(g);
  };

  // Gaussian-localised polynomials: numerically zero, with derivatives, near the boundary
  const ScalarFn a_loc = ScalarFn::localized(random_polynomial(rng, 2), {0, 0, 0, 0}, 0.3);
  const ScalarFn b_loc = ScalarFn::localized(random_polynomial(rng, 2), {0, 0, 0, 0}, 0.3);
  const VectorField z_loc = V.mixed(rng.integer(0, 1), rng.integer(0, 1));
  const StokesReport loc = stokes_residual(z_loc, a_loc, b_loc, domain, weight, grid_at(n));
  rec.note("localized/volume_z", {loc.volume_z.real(), loc.volume_z.imag()});
  rec.note("localized/surface", std::abs(loc.surface));
  rec.upper("localized/residual", std::abs(loc.residual), 1e-8);

  // general fields: order from a least-squares fit of log|residual| against log h
  const ScalarFn a = ScalarFn::from_polynomial(random_polynomial(rng, 2));
  const ScalarFn b = ScalarFn::from_polynomial(random_polynomial(rng, 2));
  const VectorField z = V.mixed(rng.integer(0, 1), rng.integer(0, 1));
  const ScalarFn one = ScalarFn::from_polynomial(Polynomial::monomial({0, 0, 0, 0}));
  std::vector<double> hs, general, constant;
  for (int m : ns) {
    const Grid4 g = grid_at(m);
    hs.push_back(g.h());
    general.push_back(std::abs(stokes_residual(z, a, b, domain, weight, g).residual));
    constant.push_back(std::abs(stokes_residual(V.lower(0, 0), one, one, domain, Weight::zero(), g).residual));
  }
  auto order = [&](const std::vector<double>& r) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(hs.size());
    for (std::size_t i = 0; i < hs.size(); ++i) {
      const double x = std::log(hs[i]), y = std::log(std::max(r[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  rec.note("general/n", ns);
  rec.note("general/residuals", general);
  rec.note("constant/residuals", constant);
  rec.lower("general/order", order(general), 1.0);
  rec.note("constant/order", order(constant));
}

[[nodiscard]] inline NeumannSystem make_system(const ExperimentConfig& c) {
  return NeumannSystem(c.k, make_domain(c.domain), make_weight(c.weight), make_grid(c.grid), make_scheme(c.solver));
}

/// Analytic k-regular polynomials of degree ≤ 2, sampled on the Sym nodes.
[[nodiscard]] inline std::vector<VecC> analytic_kernel(const NeumannSystem& sys, int max_degree = 2) {
  std::vector<VecC> out;
  for (int d = 0; d <= max_degree; ++d)
    for (const auto& u : k_regular_polynomials(sys.k(), d)) out.push_back(sys.sample(u));
  return out;
}

/// Fixed manufactured datum: a degree-3 polynomial u0 drawn from a dedicated stream.
[[nodiscard]] inline SpinorField<Polynomial> manufactured_potential(int k, std::uint64_t seed) {
  Rng rng(suite_seed(seed, "manufactured"));
  return random_spinor_field(rng, FieldKind::Sym, k, 3);
}

[[nodiscard]] inline double estimate_constant_or_nan(const NeumannSystem& sys, Rng& rng, json* detail = nullptr) {
  try {
    const EstimateConstants e =
        compute_constants(sys.weight(), sys.domain(), sys.k(), interior_samples(sys.domain(), 200, rng));
    if (detail) *detail = to_json(e);
    return e.C0;
  } catch (const std::domain_error& err) {
    if (detail) *detail = {{"error", err.what()}};
    return std::numeric_limits<double>::quiet_NaN();
  }
}

/// Discrete solver soundness, canonical solutions and the Bergman projection.
inline void suite_solve(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const ExperimentConfig& cfg = ctx.config;
  const NeumannSystem sys = make_system(cfg);
  const SolverOptions opt = make_solver_options(cfg.solver);
  const auto& Ms = sys.mass_sym();
  const auto& Mm = sys.mass_mixed();
  const auto& Mt = sys.mass_two();
  rec.note("system", {{"n", cfg.grid.n},
                      {"h", sys.mask()->grid().h()},
                      {"scheme", to_string(sys.scheme())},
                      {"sym_nodes", sys.nodes(FieldKind::Sym).size()},
                      {"mixed_nodes", sys.nodes(FieldKind::Mixed).size()},
                      {"two_form_nodes", sys.nodes(FieldKind::TwoForm).size()},
                      {"dof", Mm.size()}});

  auto random_vec = [&](Eigen::Index m) {
    VecC v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = rng.complex_normal();
    return v;
  };
  double adj0 = 0, adj1 = 0, selfadj = 0, psd = std::numeric_limits<double>::infinity(), energy = 0;
  for (int t = 0; t < 5; ++t) {
    const VecC u = random_vec(Ms.size()), f = random_vec(Mm.size()), g = random_vec(Mm.size()), F = random_vec(Mt.size());
    adj0 = std::max(adj0, std::abs(weighted_dot(sys.D0().apply(u), f, Mm) - weighted_dot(u, sys.D0().adjoint(f), Ms)) /
                              (weighted_norm(u, Ms) * weighted_norm(f, Mm)));
    adj1 = std::max(adj1, std::abs(weighted_dot(sys.D1().apply(f), F, Mt) - weighted_dot(f, sys.D1().adjoint(F), Mm)) /
                              (weighted_norm(f, Mm) * weighted_norm(F, Mt)));
    const VecC bf = sys.box(f), bg = sys.box(g);
    const double nf = weighted_norm(f, Mm), ng = weighted_norm(g, Mm);
    selfadj = std::max(selfadj, std::abs(weighted_dot(bf, g, Mm) - weighted_dot(f, bg, Mm)) / (nf * ng));
    const cplx q = weighted_dot(bf, f, Mm);
    psd = std::min(psd, q.real() / (nf * nf));
    const double a = weighted_norm(sys.D0().adjoint(f), Ms), b = weighted_norm(sys.D1().apply(f), Mt);
    energy = std::max(energy, std::abs(q - (a * a + b * b)) / std::abs(q));
  }
  rec.upper("adjoint/D0", adj0, 1e-12);
  rec.upper("adjoint/D1", adj1, 1e-12);
  rec.upper("box/self_adjointness", selfadj, 1e-10);
  rec.lower("box/min_rayleigh_random", psd, -1e-10);
  rec.upper("box/energy_identity", energy, 1e-12);

  const DefectReport defect = complex_defect(sys, random_smooth_field(sys, FieldKind::Sym, 3, rng));
  rec.note("complex/D1D0_overall", defect.overall);
  rec.upper("complex/D1D0_interior", defect.interior, 1e-10);
  rec.note("adjoint_consistency",
           adjoint_consistency(sys, random_spinor_field(rng, FieldKind::Mixed, sys.k(), 2)));

  {
    const auto [x, r] = solve_box(sys, VecC::Zero(Mm.size()), opt);
    rec.equal("zero_rhs/iterations", r.iterations, 0);
    rec.upper("zero_rhs/solution_norm", x.norm(), 0.0);
  }

  json constants;
  const double C0 = estimate_constant_or_nan(sys, rng, &constants);
  rec.note("constants", constants);

  try {
    const VecC f0 = random_smooth_field(sys, FieldKind::Mixed, 2, rng);
    const VecC g = sys.box(f0);
    const auto [x, r] = solve_box(sys, g, opt, std::isnan(C0) ? 0.0 : C0);
    rec.note("manufactured/report", to_json(r));
    rec.upper("manufactured/relative_residual", r.relative_residual, opt.tol);
    rec.note("manufactured/recovery_error", weighted_norm(x - f0, Mm) / weighted_norm(f0, Mm));
    if (!std::isnan(C0)) rec.flag("manufactured/bound", r.bound_ok, "|Nf|·C0 exceeds |g|·(1+slack)");
  } catch (const SolveError& e) {
    rec.note("manufactured/report", to_json(e.report));
    rec.fail(std::string("manufactured solve: ") + e.what());
  }

  const std::vector<VecC> kernel = analytic_kernel(sys);
  rec.note("kernel/analytic_dimension", kernel.size());
  try {
    const auto u0 = manufactured_potential(sys.k(), cfg.seed);
    const VecC f = sys.sample(apply_D0(u0));
    const auto [u, r] = canonical_solve(sys, f, opt, std::isnan(C0) ? 0.0 : C0, kernel);
    rec.note("canonical/report", to_json(r));
    rec.upper("canonical/closedness", r.closedness, 1e-6);
    rec.upper("canonical/residual", r.canonical_residual, 0.1);
    rec.upper("canonical/orthogonality", r.orthogonality_defect, 1e-6);
    if (!std::isnan(C0)) rec.flag("canonical/energy_bound", r.energy_ok, "energy exceeds |f|²/C0·(1+slack)");
    (void)u;
  } catch (const SolveError& e) {
    rec.note("canonical/report", to_json(e.report));
    rec.fail(std::string("canonical solve: ") + e.what());
  }

  try {
    const VecC f = random_smooth_field(sys, FieldKind::Sym, 3, rng);
    const double fn = weighted_norm(f, Ms);
    const auto [Pf, r1] = bergman_project(sys, f, opt);
    const auto [PPf, r2] = bergman_project(sys, Pf, opt);
    rec.upper("bergman/idempotency", weighted_norm(PPf - Pf, Ms) / fn, 1e-6);
    const VecC g = random_smooth_field(sys, FieldKind::Sym, 3, rng);
    const auto [Pg, r3] = bergman_project(sys, g, opt);
    rec.upper("bergman/self_adjointness",
              std::abs(weighted_dot(Pf, g, Ms) - weighted_dot(f, Pg, Ms)) / (fn * weighted_norm(g, Ms)), 1e-6);
    VecC v = VecC::Zero(Ms.size());
    for (const VecC& b : kernel) v += rng.complex_normal() * b;
    const auto [Pv, r4] = bergman_project(sys, v, opt);
    rec.upper("bergman/fixes_analytic_kernel", weighted_norm(Pv - v, Ms) / weighted_norm(v, Ms), 1e-6);
    const std::vector<VecC> numeric = discrete_kernel_in_polynomials(sys, 2);
    rec.note("kernel/numeric_dimension", numeric.size());
    rec.equal("kernel/numeric_matches_analytic", static_cast<long long>(numeric.size()),
              static_cast<long long>(kernel.size()));
    double worst = 0.0;
    for (const VecC& w : numeric) {
      const auto [Pw, rw] = bergman_project(sys, w, opt);
      worst = std::max(worst, weighted_norm(Pw - w, Ms) / weighted_norm(w, Ms));
    }
    rec.upper("bergman/fixes_numeric_kernel", worst, 1e-6);
  } catch (const SolveError& e) {
    rec.fail(std::string("bergman projection: ") + e.what());
  }
}

/// Estimate constants and the Rayleigh-quotient probe on the boundary-condition subspace.
inline void suite_estimate(const SuiteContext& ctx, Rng& rng, Recorder& rec) {
  const ExperimentConfig& cfg = ctx.config;
  const NeumannSystem sys = make_system(cfg);
  EstimateConstants consts;
  try {
    consts = compute_constants(sys.weight(), sys.domain(), sys.k(), interior_samples(sys.domain(), 200, rng));
  } catch (const std::domain_error& e) {
    rec.note("constants", {{"error", e.what()}});
    rec.fail(std::string("estimate constants: ") + e.what());
    return;
  }
  rec.note("constants", to_json(consts));
  rec.note("C0", consts.C0);
  const ProbeReport probe = estimate_probe(sys, consts, cfg.solver.trials, rng, cfg.solver.probe_slack);
  rec.note("probe", to_json(probe));
  rec.note("min_q", probe.min_q);
  rec.lower("probe/min_q", probe.min_q, consts.C0 * (1.0 - cfg.solver.probe_slack));
  rec.upper("probe/bc_residual", probe.bc_residual, 1e-10);
  rec.note("lanczos/converged", probe.lanczos_converged);
}

using SuiteFn = std::function<void(const SuiteContext&, Rng&, Recorder&)>;

[[nodiscard]] inline const std::map<std::string, SuiteFn>& suite_table() {
  static const std::map<std::string, SuiteFn> t{{"identities", suite_identities}, {"convexity", suite_convexity},
                                                {"symbols", suite_symbols},       {"stokes", suite_stokes},
                                                {"solve", suite_solve},           {"estimate", suite_estimate}};
  return t;
}

[[nodiscard]] inline SuiteResult run_suite(const std::string& name, const SuiteContext& ctx) {
  SuiteResult res;
  res.name = name;
  res.seed = suite_seed(ctx.config.seed, name);
  Rng rng(res.seed);
  Recorder rec;
  const auto start = std::chrono::steady_clock::now();
  try {
    suite_table().at(name)(ctx, rng, rec);
  } catch (const std::exception& e) {
    rec.fail(std::string("error: ") + e.what());
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.pass = rec.pass();
  res.measured = rec.values();
  res.failures = rec.failures();
  return res;
}

[[nodiscard]] inline std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

struct RunReport {
  json doc;
  bool pass = false;
};

/// Runs the configured suites; everything outside "timestamp" depends only on config and seed.
[[nodiscard]] inline RunReport run_experiment(const ExperimentConfig& cfg, const SuiteSizes& sizes = {}) {
  const SuiteContext ctx{cfg, sizes};
  const std::string started = iso_timestamp();
  std::vector<SuiteResult> results;
  if (cfg.parallel) {
    std::vector<std::future<SuiteResult>> jobs;
    for (const auto& s : cfg.suites) jobs.push_back(std::async(std::launch::async, [&ctx, s] { return run_suite(s, ctx); }));
    for (auto& j : jobs) results.push_back(j.get());
  } else {
    for (const auto& s : cfg.suites) results.push_back(run_suite(s, ctx));
  }
  RunReport rep;
  rep.pass = true;
  json suites = json::object(), elapsed = json::object();
  for (const auto& r : results) {
    suites[r.name] = r.to_json();
    elapsed[r.name] = r.seconds;
    rep.pass = rep.pass && r.pass;
  }
  rep.doc = {{"tool", "fueter-neumann"},
             {"prng", Rng::algorithm},
             {"seed", cfg.seed},
             {"config", to_json(cfg)},
             {"suites", suites},
             {"pass", rep.pass},
             {"timestamp", {{"started", started}, {"elapsed_seconds", elapsed}}}};
  return rep;
}

// ---------------------------------------------------------------- refinement tables

struct ConvergenceRow {
  int n = 0;
  double h = 0.0;
  double d1d0_defect = 0.0;
  double adjoint_consistency = 0.0;
  double canonical_residual = 0.0;
  double min_q = std::numeric_limits<double>::quiet_NaN();
  double C0 = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::map<std::string, bool> flags;  // empty for a single row
  double tol = 1e-8;
};

/// All fields other than grid.n (and output) must agree; n must increase.
inline void check_refinement_configs(const std::vector<ExperimentConfig>& cfgs) {
  if (cfgs.empty()) throw ConfigError("convergence table needs at least one config");
  const ExperimentConfig& a = cfgs.front();
  for (std::size_t i = 1; i < cfgs.size(); ++i) {
    const ExperimentConfig& b = cfgs[i];
    if (b.k != a.k)
      throw ConfigError("configs differ in k (" + std::to_string(a.k) + " vs " + std::to_string(b.k) + ")");
    json ja = to_json(a), jb = to_json(b);
    for (json* j : {&ja, &jb}) {
      (*j)["grid"].erase("n");
      j->erase("output");
      j->erase("suites");
      j->erase("parallel");
    }
    if (ja != jb) throw ConfigError("configs differ in more than grid.n: " + json::diff(ja, jb).dump());
    if (b.grid.n <= cfgs[i - 1].grid.n) throw ConfigError("grid.n must increase across the configs");
  }
}

/**
 * Refinement study. Random data are drawn from the same seeded streams at
 * every n so rows differ only in resolution.
 */
[[nodiscard]] inline ConvergenceTable report_convergence(const std::vector<ExperimentConfig>& cfgs) {
  check_refinement_configs(cfgs);
  ConvergenceTable table;
  table.tol = cfgs.front().solver.tol;
  for (const auto& cfg : cfgs) {
    const NeumannSystem sys = make_system(cfg);
    ConvergenceRow row;
    row.n = cfg.grid.n;
    row.h = sys.mask()->grid().h();
    {
      Rng rng(suite_seed(cfg.seed, "converge/defect"));
      row.d1d0_defect = complex_defect(sys, sys.sample(random_spinor_field(rng, FieldKind::Sym, cfg.k, 3))).overall;
    }
    {
      Rng rng(suite_seed(cfg.seed, "converge/adjoint"));
      row.adjoint_consistency = adjoint_consistency(sys, random_spinor_field(rng, FieldKind::Mixed, cfg.k, 2));
    }
    Rng rng(suite_seed(cfg.seed, "converge/probe"));
    json detail;
    row.C0 = estimate_constant_or_nan(sys, rng, &detail);
    const auto u0 = manufactured_potential(cfg.k, cfg.seed);
    row.canonical_residual =
        canonical_solve(sys, sys.sample(apply_D0(u0)), make_solver_options(cfg.solver), 0.0).second.canonical_residual;
    if (!std::isnan(row.C0)) {
      EstimateConstants e;
      e.C0 = row.C0;
      e.k = cfg.k;
      row.min_q = estimate_probe(sys, e, cfg.solver.trials, rng, cfg.solver.probe_slack, 0).min_q;
    }
    table.rows.push_back(row);
  }
  if (table.rows.size() > 1) {
    const auto& r = table.rows;
    const double floor = 10.0 * table.tol;
    auto decreasing = [&](auto get, double at_floor) {
      bool strict = true, small = true;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i > 0) strict = strict && get(r[i]) < get(r[i - 1]);
        small = small && get(r[i]) <= at_floor;
      }
      return strict || small;
    };
    table.flags["D1D0_defect_decreasing"] = decreasing([](const ConvergenceRow& x) { return x.d1d0_defect; }, 1e-10);
    table.flags["adjoint_consistency_decreasing"] =
        decreasing([](const ConvergenceRow& x) { return x.adjoint_consistency; }, 1e-10);
    table.flags["canonical_residual_decreasing"] =
        decreasing([](const ConvergenceRow& x) { return x.canonical_residual; }, floor);
    // deficit of min_q below C0; shrinking (or absent) under refinement
    bool shrinking = true;
    for (std::size_t i = 1; i < r.size(); ++i) {
      const double prev = std::max(0.0, r[i - 1].C0 - r[i - 1].min_q), cur = std::max(0.0, r[i].C0 - r[i].min_q);
      shrinking = shrinking && !(cur > prev);
    }
    table.flags["min_q_deficit_shrinking"] = shrinking;
  }
  return table;
}

inline void write_csv(std::ostream& os, const ConvergenceTable& t) {
  os << "n,h,D1D0_defect,adjoint_consistency,canonical_residual,min_q\n";
  os << std::setprecision(10);
  for (const auto& r : t.rows)
    os << r.n << ',' << r.h << ',' << r.d1d0_defect << ',' << r.adjoint_consistency << ',' << r.canonical_residual
       << ',' << r.min_q << '\n';
  for (const auto& [name, ok] : t.flags) os << "# " << name << '=' << (ok ? "true" : "false") << '\n';
}

[[nodiscard]] inline json to_json(const ConvergenceTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"n", r.n},
                    {"h", r.h},
                    {"D1D0_defect", r.d1d0_defect},
                    {"adjoint_consistency", r.adjoint_consistency},
                    {"canonical_residual", r.canonical_residual},
                    {"min_q", r.min_q},
                    {"C0", r.C0}});
  return {{"rows", rows}, {"flags", t.flags}};
}

}  // namespace fueter
