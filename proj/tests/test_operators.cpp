#include "catch_amalgamated.hpp"

#include "fueter/experiments.hpp"
#include "oracle.hpp"

using namespace fueter;

namespace {

const VectorFieldTable& V = VectorFieldTable::standard();

double field_gap(const SpinorField<Polynomial>& a, const SpinorField<Polynomial>& b) {
  REQUIRE(a.kind == b.kind);
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).max_abs_coefficient());
  return m;
}

double field_max(const SpinorField<Polynomial>& a) {
  double m = 0.0;
  for (const auto& c : a.c) m = std::max(m, c.max_abs_coefficient());
  return m;
}

Weight random_weight(Rng& rng) { return Weight::polynomial(random_polynomial(rng, 3, true)); }

const Polynomial x1 = Polynomial::variable(1), x2 = Polynomial::variable(2), x3 = Polynomial::variable(3);

}  // namespace

TEST_CASE("vector field tables") {
  using VF = VectorField;
  CHECK(V.lower(0, 0) == VF{1.0, I, 0.0, 0.0});
  CHECK(V.lower(0, 1) == VF{0.0, 0.0, -1.0, -I});
  CHECK(V.lower(1, 0) == VF{0.0, 0.0, 1.0, -I});
  CHECK(V.lower(1, 1) == VF{1.0, -I, 0.0, 0.0});
  // Z_A^{A'}: (Z_{01'}, −Z_{00'}; Z_{11'}, −Z_{10'})
  CHECK(V.mixed(0, 0) == V.lower(0, 1));
  CHECK(V.mixed(0, 1) == -1.0 * V.lower(0, 0));
  CHECK(V.mixed(1, 0) == V.lower(1, 1));
  CHECK(V.mixed(1, 1) == -1.0 * V.lower(1, 0));
  CHECK(V.raised(0, 0) == VF{0.0, 0.0, 1.0, -I});
  CHECK(V.raised(0, 1) == VF{1.0, -I, 0.0, 0.0});
  CHECK(V.raised(1, 0) == VF{-1.0, -I, 0.0, 0.0});
  CHECK(V.raised(1, 1) == VF{0.0, 0.0, 1.0, I});
}

TEST_CASE("conjugation identity on real polynomials") {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const Polynomial f = random_polynomial(rng, 4, true);
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap)
        CHECK((fueter::apply(V.mixed(a, ap), f).conj() + fueter::apply(V.raised(a, ap), f)).max_abs_coefficient() <=
              1e-12);
  }
}

TEST_CASE("D0 worked examples") {
  SpinorField<Polynomial> u(FieldKind::Sym, 2);
  u[0] = x1;
  const auto f = apply_D0(u);
  CHECK((f.at(0, 1) - Polynomial(1.0)).is_zero());
  CHECK(f.at(0, 1).terms().size() == 1);
  CHECK(f.at(0, 0).is_zero());
  CHECK(f.at(1, 0).is_zero());
  CHECK(f.at(1, 1).is_zero());

  SpinorField<Polynomial> c(FieldKind::Sym, 3);
  for (auto& p : c.c) p = Polynomial(cplx(2.0, -1.0));
  CHECK(field_max(apply_D0(c)) == 0.0);

  CHECK_THROWS_AS(apply_D0(SpinorField<Polynomial>(FieldKind::Mixed, 2)), std::invalid_argument);
}

TEST_CASE("D1 worked example") {
  SpinorField<Polynomial> f(FieldKind::Mixed, 2);
  f.at(0, 0) = x2;
  const auto F = apply_D1(f);
  REQUIRE(F.size() == 1);
  CHECK(std::abs(F[0].coefficient({0, 0, 0, 0}) - cplx(0.0, 0.5)) < 1e-15);
  CHECK(F[0].terms().size() == 1);
  CHECK_THROWS_AS(apply_D1(SpinorField<Polynomial>(FieldKind::Sym, 2)), std::invalid_argument);
}

TEST_CASE("the complex is exact on polynomials") {
  Rng rng(2);
  for (int k = 2; k <= 6; ++k)
    for (int t = 0; t < 20; ++t) CHECK(field_max(apply_D1(apply_D0(random_spinor_field(rng, FieldKind::Sym, k, 4)))) <= 1e-12);
}

TEST_CASE("D0 adjoint worked examples") {
  const DeltaOperator<Polynomial> flat(Weight::zero());
  SpinorField<Polynomial> zero(FieldKind::Mixed, 2);
  CHECK(field_max(apply_D0_star(zero, flat)) == 0.0);

  SpinorField<Polynomial> f(FieldKind::Mixed, 2);
  f.at(0, 0) = x3;
  const auto u = apply_D0_star(f, flat);
  CHECK((u[0] - Polynomial(1.0)).is_zero());
  CHECK(u[1].is_zero());
  CHECK(u[2].is_zero());
}

TEST_CASE("D1 adjoint worked examples") {
  const DeltaOperator<Polynomial> flat(Weight::zero());
  SpinorField<Polynomial> zero(FieldKind::TwoForm, 3);
  CHECK(field_max(apply_D1_star(zero, flat)) == 0.0);

  SpinorField<Polynomial> F(FieldKind::TwoForm, 2);
  F[0] = x1;
  const auto f = apply_D1_star(F, flat);
  CHECK((f.at(0, 0) - Polynomial(1.0)).is_zero());
  CHECK(f.at(0, 1).is_zero());
  CHECK((f.at(1, 1) - Polynomial(1.0)).is_zero());
  CHECK(f.at(1, 0).is_zero());
}

TEST_CASE("delta operator needs a polynomial weight and reduces to Z when flat") {
  CHECK_THROWS_AS(DeltaOperator<Polynomial>(Weight::chain(Chi::exponential(), Weight::r1())), std::invalid_argument);
  Rng rng(3);
  const DeltaOperator<Polynomial> flat(Weight::zero());
  const Polynomial a = random_polynomial(rng, 3);
  for (int b = 0; b < 2; ++b)
    for (int bp = 0; bp < 2; ++bp) CHECK((flat(b, bp, a) - fueter::apply(V.raised(b, bp), a)).is_zero());
}

TEST_CASE("reduced operators agree with full index evaluation") {
  Rng rng(4);
  for (int k = 2; k <= 5; ++k) {
    CAPTURE(k);
    const Weight w = random_weight(rng);
    const DeltaOperator<Polynomial> d(w);
    for (int t = 0; t < 3; ++t) {
      const auto u = random_spinor_field(rng, FieldKind::Sym, k, 3);
      const auto f = random_spinor_field(rng, FieldKind::Mixed, k, 3);
      const auto F = random_spinor_field(rng, FieldKind::TwoForm, k, 3);
      CHECK(field_gap(apply_D0(u), oracle::D0(u)) <= 1e-12);
      CHECK(field_gap(apply_D1(f), oracle::D1(f)) <= 1e-12);
      CHECK(field_gap(apply_D0_star(f, d), oracle::D0_star(f, *w.poly)) <= 1e-12);
      CHECK(field_gap(apply_D1_star(F, d), oracle::D1_star(F, *w.poly)) <= 1e-12);
    }
  }
}

TEST_CASE("k = 2 adjoint agrees with the explicit 3x4 matrix") {
  // columns act on (f_{0'0}, f_{0'1}, f_{1'0}, f_{1'1}); entries written out by hand
  const VectorField up0_0{0.0, 0.0, 1.0, -I}, up1_0{-1.0, -I, 0.0, 0.0};
  const VectorField up0_1{1.0, -I, 0.0, 0.0}, up1_1{0.0, 0.0, 1.0, I};
  Rng rng(5);
  for (int t = 0; t < 10; ++t) {
    const Weight w = random_weight(rng);
    const Polynomial& phi = *w.poly;
    auto delta = [&](const VectorField& z, const Polynomial& a) { return fueter::apply(z, a) - fueter::apply(z, phi) * a; };
    const auto f = random_spinor_field(rng, FieldKind::Mixed, 2, 3);
    const Polynomial &f00 = f.at(0, 0), &f01 = f.at(0, 1), &f10 = f.at(1, 0), &f11 = f.at(1, 1);
    SpinorField<Polynomial> expect(FieldKind::Sym, 2);
    expect[0] = delta(up0_0, f00) + delta(up1_0, f01);
    expect[1] = 0.5 * (delta(up0_1, f00) + delta(up1_1, f01) + delta(up0_0, f10) + delta(up1_0, f11));
    expect[2] = delta(up0_1, f10) + delta(up1_1, f11);
    CHECK(field_gap(apply_D0_star(f, DeltaOperator<Polynomial>(w)), expect) <= 1e-12);

    const VectorField m00{0.0, 0.0, -1.0, -I}, m01{-1.0, -I, 0.0, 0.0}, m10{1.0, -I, 0.0, 0.0}, m11{0.0, 0.0, -1.0, I};
    SpinorField<Polynomial> two(FieldKind::TwoForm, 2);
    two[0] = 0.5 * (fueter::apply(m00, f01) - fueter::apply(m10, f00) + fueter::apply(m01, f11) - fueter::apply(m11, f10));
    CHECK(field_gap(apply_D1(f), two) <= 1e-12);
  }
}

TEST_CASE("weighted commutator identity") {
  Rng rng(6);
  const Polynomial a = random_polynomial(rng, 3);
  CHECK(commutator_check(V, Weight::zero(), a) <= 1e-14);
  CHECK(commutator_check(V, Weight::polynomial(x1 * x1), a) <= 1e-12);
  for (int t = 0; t < 100; ++t) CHECK(commutator_check(V, random_weight(rng), random_polynomial(rng, 3)) <= 1e-12);
}

TEST_CASE("grid commutator residual shrinks with h") {
  // quadratic field: the product-rule defect is h²·const at every node, so the
  // ratio is not polluted by the interior region growing with n
  Rng rng(7);
  const Polynomial p = random_polynomial(rng, 2);
  auto residual = [&](int n) {
    const auto mask = make_mask(Grid4(-1.05, 1.05, n), DomainSpec::ball());
    return commutator_check(V, Weight::radial(0.125), GridField::sample(mask, [&](const Point4& x) { return p(x); }));
  };
  CHECK(residual(16) < residual(8) / 3.0);
}

TEST_CASE("contraction identity for the lowered vector fields") {
  // Z_{0A'} f_1 − Z_{1A'} f_0 = −Σ_A Z^A_{A'} f_A
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    const Polynomial f0 = random_polynomial(rng, 3), f1 = random_polynomial(rng, 3);
    for (int ap = 0; ap < 2; ++ap) {
      const Polynomial lhs = fueter::apply(V.lower(0, ap), f1) - fueter::apply(V.lower(1, ap), f0);
      const Polynomial rhs = -(fueter::apply(V.raised(0, ap), f0) + fueter::apply(V.raised(1, ap), f1));
      CHECK((lhs - rhs).max_abs_coefficient() <= 1e-12);
    }
  }
}

TEST_CASE("second-order operator identities") {
  Rng rng(9);
  for (int t = 0; t < 20; ++t) {
    const Polynomial p = random_polynomial(rng, 4);
    const Polynomial d11 = poly_diff(poly_diff(p, 1), 1), d22 = poly_diff(poly_diff(p, 2), 2), d12 = poly_diff(poly_diff(p, 1), 2);
    const Polynomial a = fueter::apply(V.mixed(0, 1), fueter::apply(conj(V.mixed(0, 1)), p));
    const Polynomial b = fueter::apply(V.mixed(0, 1), fueter::apply(conj(V.mixed(1, 0)), p));
    CHECK((a - (d11 + d22)).max_abs_coefficient() <= 1e-12);
    CHECK((b - (d22 - d11 - cplx(0.0, 2.0) * d12)).max_abs_coefficient() <= 1e-12);
  }
}

TEST_CASE("Stokes formula") {
  const DomainSpec ball = DomainSpec::ball();
  const Weight w = Weight::radial(0.125);
  Rng rng(10);
  auto grid = [](int n) { return Grid4(-1.05, 1.05, n); };

  const ScalarFn a = ScalarFn::localized(random_polynomial(rng, 2), {0, 0, 0, 0}, 0.3);
  const ScalarFn b = ScalarFn::localized(random_polynomial(rng, 2), {0, 0, 0, 0}, 0.3);
  const StokesReport loc = stokes_residual(V.mixed(0, 1), a, b, ball, w, grid(16));
  CHECK(std::abs(loc.residual) <= 1e-8);

  // a = b = 1, φ = 0: every term vanishes by symmetry, so the residual sits at round-off
  const ScalarFn one = ScalarFn::from_polynomial(Polynomial(1.0));
  for (int n : {8, 12, 16}) CHECK(std::abs(stokes_residual(V.lower(0, 0), one, one, ball, Weight::zero(), grid(n)).residual) < 1e-10);

  const ScalarFn ga = ScalarFn::from_polynomial(random_polynomial(rng, 2));
  const ScalarFn gb = ScalarFn::from_polynomial(random_polynomial(rng, 2));
  std::vector<double> r;
  for (int n : {8, 12, 16}) r.push_back(std::abs(stokes_residual(V.mixed(1, 0), ga, gb, ball, w, grid(n)).residual));
  CHECK(r[1] < r[0]);
  CHECK(r[2] < r[1]);

  CHECK_THROWS_AS(stokes_residual(V.lower(0, 0), one, one, DomainSpec::halfspace(), w, grid(8)), std::invalid_argument);
}

TEST_CASE("grid D0 matches the exact operator to second order") {
  Rng rng(11);
  const auto u = random_spinor_field(rng, FieldKind::Sym, 3, 3);
  const auto exact = apply_D0(u);
  auto worst = [&](int n) {
    const auto mask = make_mask(Grid4(-1.05, 1.05, n), DomainSpec::ball());
    SpinorField<GridField> ug(FieldKind::Sym, 3, GridField(mask));
    for (std::size_t c = 0; c < ug.size(); ++c) ug[c] = GridField::sample(mask, [&](const Point4& x) { return u[c](x); });
    const auto fg = apply_D0(ug);
    double e = 0.0;
    for (std::size_t c = 0; c < fg.size(); ++c)
      for (std::size_t p = 0; p < mask->size(); ++p)
        if (mask->central(p)) e = std::max(e, std::abs(fg[c][p] - exact[c](mask->coordinate(p))));
    return e;
  };
  const double ratio = worst(8) / worst(16);
  CHECK(ratio > 3.0);
}
