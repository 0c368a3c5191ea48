#include "catch_amalgamated.hpp"

#include <sstream>

#include "fueter/experiments.hpp"
#include "fueter/neumann.hpp"

using namespace fueter;
using Catch::Matchers::ContainsSubstring;

namespace {

const Grid4 small_grid(-1.1, 1.1, 8);

const NeumannSystem& flat_system() {
  static const NeumannSystem sys(2, DomainSpec::ball(), Weight::zero(), small_grid);
  return sys;
}

const NeumannSystem& weighted_system() {
  static const NeumannSystem sys(2, DomainSpec::ball(), Weight::radial(0.125), small_grid);
  return sys;
}

double field_max(const SpinorField<Polynomial>& a) {
  double m = 0.0;
  for (const auto& c : a.c) m = std::max(m, c.max_abs_coefficient());
  return m;
}

VecC random_vec(Eigen::Index m, Rng& rng) {
  VecC v(m);
  for (Eigen::Index i = 0; i < m; ++i) v[i] = rng.complex_normal();
  return v;
}

}  // namespace

TEST_CASE("estimate constants") {
  const EstimateConstants e = compute_constants(10.0, 1.0, 2);
  CHECK(e.C0 == Catch::Approx(0.6).epsilon(1e-14));

  Rng rng(51);
  const auto pts = interior_samples(DomainSpec::ball(), 50, rng);
  const EstimateConstants b = compute_constants(Weight::radial(0.125), DomainSpec::ball(), 2, pts);
  CHECK(std::abs(b.c - 1.5) < 1e-12);
  CHECK(std::abs(b.grad_sq - 0.25) < 1e-15);
  CHECK(b.grad_sq_analytic);
  CHECK(std::abs(b.C0 - 0.05) < 1e-12);

  CHECK_THROWS_MATCHES(compute_constants(Weight::radial(0.1875), DomainSpec::ball(), 2, pts), std::domain_error,
                       Catch::Matchers::MessageMatches(ContainsSubstring("rescale")));
  CHECK_THROWS_AS(compute_constants(0.0, 0.0, 2), std::domain_error);
  CHECK_THROWS_AS(compute_constants(Weight::r1(), DomainSpec::ball(), 2, {}), std::invalid_argument);
}

TEST_CASE("system construction rejects coarse grids") {
  CHECK_THROWS_WITH(NeumannSystem(2, DomainSpec::ball(), Weight::zero(), Grid4(-1.1, 1.1, 4)),
                    ContainsSubstring("grid too coarse"));
  CHECK_THROWS_AS(NeumannSystem(1, DomainSpec::ball(), Weight::zero(), small_grid), std::invalid_argument);
}

TEST_CASE("discrete adjoints and the box operator") {
  Rng rng(52);
  for (const NeumannSystem* sys : {&flat_system(), &weighted_system()}) {
    const auto &Ms = sys->mass_sym(), &Mm = sys->mass_mixed(), &Mt = sys->mass_two();
    for (int t = 0; t < 3; ++t) {
      const VecC u = random_vec(Ms.size(), rng), f = random_vec(Mm.size(), rng), g = random_vec(Mm.size(), rng),
                 F = random_vec(Mt.size(), rng);
      const double n0 = weighted_norm(u, Ms) * weighted_norm(f, Mm);
      CHECK(std::abs(weighted_dot(sys->D0().apply(u), f, Mm) - weighted_dot(u, sys->D0().adjoint(f), Ms)) / n0 <= 1e-12);
      const double n1 = weighted_norm(f, Mm) * weighted_norm(F, Mt);
      CHECK(std::abs(weighted_dot(sys->D1().apply(f), F, Mt) - weighted_dot(f, sys->D1().adjoint(F), Mm)) / n1 <= 1e-12);
      const double nfg = weighted_norm(f, Mm) * weighted_norm(g, Mm);
      CHECK(std::abs(weighted_dot(sys->box(f), g, Mm) - weighted_dot(f, sys->box(g), Mm)) / nfg <= 1e-10);
      CHECK(weighted_dot(sys->box(f), f, Mm).real() >= -1e-10 * weighted_norm(f, Mm));
    }
  }
}

TEST_CASE("discrete complex property") {
  Rng rng(53);
  const NeumannSystem& sys = weighted_system();
  const DefectReport d = complex_defect(sys, random_smooth_field(sys, FieldKind::Sym, 3, rng));
  CHECK(d.interior <= 1e-10);
  CHECK(d.overall <= 1e-10);

  const NeumannSystem one_sided(2, DomainSpec::ball(), Weight::zero(), small_grid, Scheme::OneSided);
  CHECK(one_sided.nodes(FieldKind::TwoForm).size() == one_sided.nodes(FieldKind::Sym).size());
  const DefectReport e = complex_defect(one_sided, random_smooth_field(one_sided, FieldKind::Sym, 3, rng));
  CHECK(e.interior <= 1e-10);
}

TEST_CASE("assembled adjoint approximates the continuum formula") {
  Rng rng(54);
  const auto f = random_spinor_field(rng, FieldKind::Mixed, 2, 1);
  // linear components and no weight: central differences are exact
  CHECK(adjoint_consistency(flat_system(), f) <= 1e-10);
  // with a weight the mass ratio only matches to second order
  const double coarse = adjoint_consistency(weighted_system(), f);
  const NeumannSystem fine(2, DomainSpec::ball(), Weight::radial(0.125), Grid4(-1.1, 1.1, 16));
  CHECK(adjoint_consistency(fine, f) < coarse / 2.5);
}

TEST_CASE("box solver") {
  Rng rng(55);
  const NeumannSystem& sys = weighted_system();
  const auto& Mm = sys.mass_mixed();
  SolverOptions opt;

  const auto [zero, zr] = solve_box(sys, VecC::Zero(Mm.size()), opt);
  CHECK(zr.iterations == 0);
  CHECK(zero.norm() == 0.0);

  const VecC f0 = random_smooth_field(sys, FieldKind::Mixed, 2, rng);
  const VecC g = sys.box(f0);
  const auto [x, rep] = solve_box(sys, g, opt, 0.05);
  CHECK(rep.converged);
  CHECK(rep.relative_residual <= opt.tol * 1.0001);
  CHECK(weighted_norm(g - sys.box(x), Mm) / weighted_norm(g, Mm) <= 1e-7);
  CHECK(rep.bound_ok);

  SolverOptions one = opt;
  one.maxiter = 1;
  CHECK_THROWS_AS(solve_box(sys, g, one), SolveError);
  CHECK_THROWS_AS(solve_box(sys, VecC::Zero(3), opt), std::invalid_argument);
}

TEST_CASE("canonical solution") {
  const NeumannSystem& sys = weighted_system();
  const auto& Ms = sys.mass_sym();
  SolverOptions opt;
  const std::vector<VecC> kernel = analytic_kernel(sys);

  SpinorField<Polynomial> constant(FieldKind::Sym, 2);
  for (auto& c : constant.c) c = Polynomial(cplx(1.0, 2.0));
  const auto [u0, r0] = canonical_solve(sys, sys.sample(apply_D0(constant)), opt, 0.05);
  CHECK(u0.norm() == 0.0);

  const VecC f = sys.sample(apply_D0(manufactured_potential(2, 7)));
  const auto [u, rep] = canonical_solve(sys, f, opt, 0.05, kernel);
  CHECK(rep.closedness <= 1e-10);
  CHECK(rep.orthogonality_defect <= 1e-6);
  CHECK(rep.canonical_residual <= 0.1);
  CHECK(rep.energy_ok);
  for (const VecC& v : kernel)
    CHECK(std::abs(weighted_dot(u, v, Ms)) <= 1e-6 * weighted_norm(u, Ms) * weighted_norm(v, Ms));

  Rng rng(56);
  const VecC rough = random_smooth_field(sys, FieldKind::Mixed, 2, rng);
  try {
    (void)canonical_solve(sys, rough, opt, 0.05);
    FAIL("non-closed data was accepted");
  } catch (const SolveError& e) {
    CHECK(e.report.closedness > 1e-6);
  }
}

TEST_CASE("Bergman projection") {
  Rng rng(57);
  const NeumannSystem& sys = weighted_system();
  const auto& Ms = sys.mass_sym();
  SolverOptions opt;

  SpinorField<Polynomial> constant(FieldKind::Sym, 2);
  constant[1] = Polynomial(1.0);
  const VecC c = sys.sample(constant);
  CHECK(weighted_norm(bergman_project(sys, c, opt).first - c, Ms) == 0.0);

  const VecC f = random_smooth_field(sys, FieldKind::Sym, 3, rng);
  const VecC Pf = bergman_project(sys, f, opt).first;
  const VecC PPf = bergman_project(sys, Pf, opt).first;
  CHECK(weighted_norm(PPf - Pf, Ms) / weighted_norm(f, Ms) <= 1e-6);
  CHECK(weighted_norm(sys.D0().apply(Pf), sys.mass_mixed()) <= 1e-6 * weighted_norm(sys.D0().apply(f), sys.mass_mixed()));

  const auto numeric = discrete_kernel_in_polynomials(sys, 2);
  CHECK(numeric.size() == analytic_kernel(sys).size());
  for (const VecC& w : numeric) CHECK(weighted_norm(bergman_project(sys, w, opt).first - w, Ms) <= 1e-6 * weighted_norm(w, Ms));
}

TEST_CASE("k-regular polynomials") {
  for (int k = 2; k <= 4; ++k) {
    const auto consts = k_regular_polynomials(k, 0);
    CHECK(static_cast<int>(consts.size()) == k + 1);
    for (int d = 0; d <= 2; ++d)
      for (const auto& u : k_regular_polynomials(k, d)) CHECK(field_max(apply_D0(u)) <= 1e-12);
  }
}

TEST_CASE("estimate probe") {
  Rng rng(58);
  const NeumannSystem& sys = weighted_system();
  EstimateConstants bad;
  CHECK_THROWS_AS(estimate_probe(sys, bad, 4, rng), std::invalid_argument);

  const EstimateConstants consts = compute_constants(1.5, 0.25, 2);
  const ProbeReport rep = estimate_probe(sys, consts, 4, rng, 0.5, 0);
  CHECK(rep.bc_residual <= 1e-10);
  CHECK(rep.min_q > 0.0);
  CHECK(rep.pass);
}

TEST_CASE("coordinate-list output") {
  SpMatC A(2, 3);
  A.insert(0, 2) = cplx(1.5, -2.0);
  A.insert(1, 0) = cplx(0.0, 1.0);
  A.makeCompressed();
  std::ostringstream os;
  write_coo(os, A);
  std::istringstream in(os.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "% rows 2 cols 3 nnz 2");
  int lines = 0;
  double sum_re = 0.0, sum_im = 0.0;
  long row = 0, col = 0;
  double re = 0.0, im = 0.0;
  while (in >> row >> col >> re >> im) {
    ++lines;
    sum_re += re;
    sum_im += im;
  }
  CHECK(lines == 2);
  CHECK(sum_re == 1.5);
  CHECK(sum_im == -1.0);
}
