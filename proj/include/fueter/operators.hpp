#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "fueter/domain.hpp"
#include "fueter/grid.hpp"
#include "fueter/polynomial.hpp"
#include "fueter/spinor.hpp"

namespace fueter {

/// Constant-coefficient vector field c1∂1 + c2∂2 + c3∂3 + c4∂4.
using VectorField = std::array<cplx, 4>;
using ZTable = std::array<std::array<VectorField, 2>, 2>;  // [unprimed][primed]

[[nodiscard]] inline VectorField operator+(const VectorField& a, const VectorField& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]};
}
[[nodiscard]] inline VectorField operator*(double s, const VectorField& a) {
  return {s * a[0], s * a[1], s * a[2], s * a[3]};
}
[[nodiscard]] inline VectorField conj(const VectorField& a) {
  return {std::conj(a[0]), std::conj(a[1]), std::conj(a[2]), std::conj(a[3])};
}

/// Z applied to a function with gradient g.
[[nodiscard]] inline cplx apply(const VectorField& z, const Vec4& g) {
  return z[0] * g[0] + z[1] * g[1] + z[2] * g[2] + z[3] * g[3];
}
/// Z1 Z2 applied to a function with Hessian h.
[[nodiscard]] inline cplx apply(const VectorField& z1, const VectorField& z2, const Mat4& h) {
  cplx s = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) s += z1[static_cast<std::size_t>(i)] * z2[static_cast<std::size_t>(j)] * h(i, j);
  return s;
}
/// Principal symbol: ∂_j replaced by ξ_j.
[[nodiscard]] inline cplx symbol(const VectorField& z, const Vec4& xi) { return fueter::apply(z, xi); }

[[nodiscard]] inline Polynomial apply(const VectorField& z, const Polynomial& p) {
  Polynomial out;
  out.set_max_degree(p.max_degree());
  for (int j = 1; j <= 4; ++j)
    if (z[static_cast<std::size_t>(j - 1)] != cplx(0.0)) out += poly_diff(p, j) * z[static_cast<std::size_t>(j - 1)];
  return out;
}

[[nodiscard]] inline GridField apply(const VectorField& z, const GridField& f) {
  GridField out(f.mask());
  for (int j = 1; j <= 4; ++j)
    if (z[static_cast<std::size_t>(j - 1)] != cplx(0.0))
      out.values() += z[static_cast<std::size_t>(j - 1)] * (f.mask()->difference(j) * f.values());
  return out;
}

/**
 * The three index placements of Z, all generated from Z_{AA'} by raising
 * with ε and checked against the explicit tables at construction.
 */
class VectorFieldTable {
 public:
  VectorFieldTable() {
    lower_[0][0] = {1.0, I, 0.0, 0.0};     // ∂1 + i∂2
    lower_[0][1] = {0.0, 0.0, -1.0, -I};   // −∂3 − i∂4
    lower_[1][0] = {0.0, 0.0, 1.0, -I};    // ∂3 − i∂4
    lower_[1][1] = {1.0, -I, 0.0, 0.0};    // ∂1 − i∂2
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap) {
        VectorField m{}, r{};
        for (int b = 0; b < 2; ++b) {
          m = m + double(EpsilonTensor::upper(b, ap)) * lower_[a][b];  // Z_A^{A'} = Z_{AB'} ε^{B'A'}
          r = r + double(EpsilonTensor::upper(b, a)) * lower_[b][ap];  // Z^A_{A'} = Z_{BA'} ε^{BA}
        }
        mixed_[a][ap] = m;
        raised_[a][ap] = r;
      }
    cross_check();
  }

  static const VectorFieldTable& standard() {
    static const VectorFieldTable table;
    return table;
  }

  /// Z_{AA'}
  [[nodiscard]] const VectorField& lower(int a, int ap) const { return lower_[a][ap]; }
  /// Z_A^{A'}
  [[nodiscard]] const VectorField& mixed(int a, int ap) const { return mixed_[a][ap]; }
  /// Z^A_{A'}
  [[nodiscard]] const VectorField& raised(int a, int ap) const { return raised_[a][ap]; }

 private:
  void cross_check() const {
    const ZTable mixed_expected{{{VectorField{0.0, 0.0, -1.0, -I}, VectorField{-1.0, -I, 0.0, 0.0}},
                                 {VectorField{1.0, -I, 0.0, 0.0}, VectorField{0.0, 0.0, -1.0, I}}}};
    const ZTable raised_expected{{{VectorField{0.0, 0.0, 1.0, -I}, VectorField{1.0, -I, 0.0, 0.0}},
                                  {VectorField{-1.0, -I, 0.0, 0.0}, VectorField{0.0, 0.0, 1.0, I}}}};
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap) {
        if (mixed_[a][ap] != mixed_expected[a][ap] || raised_[a][ap] != raised_expected[a][ap])
          throw std::logic_error("vector field tables disagree with the raising algebra");
        // conj(Z_A^{A'}) = −Z^A_{A'}
        if (conj(mixed_[a][ap]) != -1.0 * raised_[a][ap])
          throw std::logic_error("conjugation identity fails for the vector field tables");
      }
  }

  ZTable lower_{}, mixed_{}, raised_{};
};

template <class Field>
using SpinorField = ReducedTensor<Field>;

/// Zero field of the backend; grid fields need their mask.
template <class Field>
[[nodiscard]] Field zero_like(const Field& f) {
  return f * 0.0;
}

/**
 * δ^A_{A'} a = Z^A_{A'} a − (Z^A_{A'} φ)·a, the weighted formal adjoint of
 * Z_A^{A'}. The multipliers Z^A_{A'}φ are held in the backend's own form.
 */
template <class Field>
class DeltaOperator;

template <>
class DeltaOperator<Polynomial> {
 public:
  explicit DeltaOperator(const Weight& w, const VectorFieldTable& t = VectorFieldTable::standard())
      : table_(&t) {
    if (!w.poly) throw std::invalid_argument("polynomial backend needs a polynomial weight");
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap) mult_[a][ap] = fueter::apply(t.raised(a, ap), *w.poly);
  }
  [[nodiscard]] Polynomial operator()(int a, int ap, const Polynomial& f) const {
    return fueter::apply(table_->raised(a, ap), f) - mult_[a][ap] * f;
  }
  [[nodiscard]] const VectorFieldTable& table() const { return *table_; }

 private:
  const VectorFieldTable* table_;
  std::array<std::array<Polynomial, 2>, 2> mult_;
};

template <>
class DeltaOperator<GridField> {
 public:
  DeltaOperator(const Weight& w, const MaskPtr& mask,
                const VectorFieldTable& t = VectorFieldTable::standard())
      : table_(&t) {
    for (int a = 0; a < 2; ++a)
      for (int ap = 0; ap < 2; ++ap) mult_[a][ap] = GridField(mask);
    for (std::size_t p = 0; p < mask->size(); ++p) {
      const Vec4 g = w.gradient(mask->coordinate(p));
      for (int a = 0; a < 2; ++a)
        for (int ap = 0; ap < 2; ++ap) mult_[a][ap][p] = fueter::apply(t.raised(a, ap), g);
    }
  }
  [[nodiscard]] GridField operator()(int a, int ap, const GridField& f) const {
    return fueter::apply(table_->raised(a, ap), f) - mult_[a][ap] * f;
  }
  [[nodiscard]] const VectorFieldTable& table() const { return *table_; }

 private:
  const VectorFieldTable* table_;
  std::array<std::array<GridField, 2>, 2> mult_;
};

namespace detail {

template <class Field>
void expect(const SpinorField<Field>& f, FieldKind kind, const char* op) {
  if (f.kind != kind)
    throw std::invalid_argument(std::string(op) + " expects a " + to_string(kind) + " field, got " +
                                to_string(f.kind));
}

template <class Field>
Field zero_of(const SpinorField<Field>& f) {
  return zero_like(f.c.at(0));
}

}  // namespace detail

/// (D0 u)_{l,A} = Z_A^{0'} u_l + Z_A^{1'} u_{l+1}
template <class Field>
[[nodiscard]] SpinorField<Field> apply_D0(const SpinorField<Field>& u,
                                          const VectorFieldTable& V = VectorFieldTable::standard()) {
  detail::expect(u, FieldKind::Sym, "apply_D0");
  const int k = u.k;
  SpinorField<Field> out(FieldKind::Mixed, k, detail::zero_of(u));
  for (int l = 0; l < k; ++l)
    for (int a = 0; a < 2; ++a)
      out.at(l, a) = fueter::apply(V.mixed(a, 0), u[static_cast<std::size_t>(l)]) +
                     fueter::apply(V.mixed(a, 1), u[static_cast<std::size_t>(l + 1)]);
  return out;
}

/// (D1 f)_l = ½[Z_0^{0'} f_{l,1} − Z_1^{0'} f_{l,0} + Z_0^{1'} f_{l+1,1} − Z_1^{1'} f_{l+1,0}]
template <class Field>
[[nodiscard]] SpinorField<Field> apply_D1(const SpinorField<Field>& f,
                                          const VectorFieldTable& V = VectorFieldTable::standard()) {
  detail::expect(f, FieldKind::Mixed, "apply_D1");
  const int k = f.k;
  SpinorField<Field> out(FieldKind::TwoForm, k, detail::zero_of(f));
  for (int l = 0; l + 1 < k; ++l) {
    Field s = fueter::apply(V.mixed(0, 0), f.at(l, 1)) - fueter::apply(V.mixed(1, 0), f.at(l, 0)) +
              fueter::apply(V.mixed(0, 1), f.at(l + 1, 1)) - fueter::apply(V.mixed(1, 1), f.at(l + 1, 0));
    out[static_cast<std::size_t>(l)] = s * 0.5;
  }
  return out;
}

/// (D0* f)_m = Σ_A [((k−m)/k) δ^A_{0'} f_{m,A} + (m/k) δ^A_{1'} f_{m−1,A}]
template <class Field>
[[nodiscard]] SpinorField<Field> apply_D0_star(const SpinorField<Field>& f,
                                               const DeltaOperator<Field>& d) {
  detail::expect(f, FieldKind::Mixed, "apply_D0_star");
  const int k = f.k;
  SpinorField<Field> out(FieldKind::Sym, k, detail::zero_of(f));
  for (int m = 0; m <= k; ++m) {
    Field s = detail::zero_of(f);
    for (int a = 0; a < 2; ++a) {
      if (m < k) s += d(a, 0, f.at(m, a)) * (double(k - m) / k);
      if (m > 0) s += d(a, 1, f.at(m - 1, a)) * (double(m) / k);
    }
    out[static_cast<std::size_t>(m)] = s;
  }
  return out;
}

/**
 * (D1* F)_{l,A} = Σ_B δ^B_{(A2'} F_{A3'..Ak')BA} in reduced form:
 *   (D1* F)_{l,1} = ((k−1−l)/(k−1)) δ^0_{0'} F_l + (l/(k−1)) δ^0_{1'} F_{l−1}
 *   (D1* F)_{l,0} = −((k−1−l)/(k−1)) δ^1_{0'} F_l − (l/(k−1)) δ^1_{1'} F_{l−1}
 */
template <class Field>
[[nodiscard]] SpinorField<Field> apply_D1_star(const SpinorField<Field>& F,
                                               const DeltaOperator<Field>& d) {
  detail::expect(F, FieldKind::TwoForm, "apply_D1_star");
  const int k = F.k;
  SpinorField<Field> out(FieldKind::Mixed, k, detail::zero_of(F));
  const double km1 = k - 1;
  for (int l = 0; l < k; ++l) {
    Field s0 = detail::zero_of(F), s1 = detail::zero_of(F);
    if (l <= k - 2) {
      const double w = (k - 1 - l) / km1;
      s0 -= d(1, 0, F[static_cast<std::size_t>(l)]) * w;
      s1 += d(0, 0, F[static_cast<std::size_t>(l)]) * w;
    }
    if (l >= 1) {
      const double w = l / km1;
      s0 -= d(1, 1, F[static_cast<std::size_t>(l - 1)]) * w;
      s1 += d(0, 1, F[static_cast<std::size_t>(l - 1)]) * w;
    }
    out.at(l, 0) = s0;
    out.at(l, 1) = s1;
  }
  return out;
}

/**
 * max |[Z_B^{A'}, δ^A_{B'}] a + (Z_B^{A'} Z^A_{B'} φ)·a| over all index
 * choices, as the largest coefficient of the residual polynomial.
 */
[[nodiscard]] inline double commutator_check(const VectorFieldTable& V, const Weight& w,
                                             const Polynomial& a) {
  const DeltaOperator<Polynomial> d(w, V);
  double worst = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int ap = 0; ap < 2; ++ap)
      for (int aa = 0; aa < 2; ++aa)
        for (int bp = 0; bp < 2; ++bp) {
          const VectorField& zb = V.mixed(b, ap);
          const Polynomial second = fueter::apply(zb, fueter::apply(V.raised(aa, bp), *w.poly));
          const Polynomial res = fueter::apply(zb, d(aa, bp, a)) - d(aa, bp, fueter::apply(zb, a)) + second * a;
          worst = std::max(worst, res.max_abs_coefficient());
        }
  return worst;
}

/// Grid version; the maximum is over nodes whose neighbourhood is all central.
[[nodiscard]] inline double commutator_check(const VectorFieldTable& V, const Weight& w,
                                             const GridField& a) {
  const MaskPtr& mask = a.mask();
  const DeltaOperator<GridField> d(w, mask, V);
  double worst = 0.0;
  for (int b = 0; b < 2; ++b)
    for (int ap = 0; ap < 2; ++ap)
      for (int aa = 0; aa < 2; ++aa)
        for (int bp = 0; bp < 2; ++bp) {
          const VectorField& zb = V.mixed(b, ap);
          GridField second(mask);
          for (std::size_t p = 0; p < mask->size(); ++p)
            second[p] = fueter::apply(zb, V.raised(aa, bp), w.hessian(mask->coordinate(p)));
          const GridField res = fueter::apply(zb, d(aa, bp, a)) - d(aa, bp, fueter::apply(zb, a)) + second * a;
          for (std::size_t p = 0; p < mask->size(); ++p)
            if (mask->deep_interior(p)) worst = std::max(worst, std::abs(res[p]));
        }
  return worst;
}

/// Complex scalar test field with exact first derivatives.
struct ScalarFn {
  std::function<Jet(const JetPoint&)> re;
  std::function<Jet(const JetPoint&)> im = [](const JetPoint&) { return Jet(0.0); };

  [[nodiscard]] cplx value(const Point4& x) const {
    const JetPoint p = seed_point(x);
    return {re(p).v, im(p).v};
  }
  /// value and Z applied to the field
  [[nodiscard]] std::pair<cplx, cplx> value_and(const VectorField& z, const Point4& x) const {
    const JetPoint p = seed_point(x);
    const Jet a = re(p), b = im(p);
    return {cplx(a.v, b.v), fueter::apply(z, a.g) + I * fueter::apply(z, b.g)};
  }

  static ScalarFn from_polynomial(const Polynomial& p) {
    auto part = [](const Polynomial& q, bool imag) {
      return [q, imag](const JetPoint& x) {
        Jet acc(0.0);
        for (const auto& [e, c] : q.terms()) {
          const double coeff = imag ? c.imag() : c.real();
          if (coeff == 0.0) continue;
          Jet m(coeff);
          for (std::size_t j = 0; j < 4; ++j)
            for (int r = 0; r < e[j]; ++r) m *= x[j];
          acc += m;
        }
        return acc;
      };
    };
    return {part(p, false), part(p, true)};
  }

  /// p(x)·exp(−|x−c|²/σ²): numerically zero, with its derivatives, far from c.
  static ScalarFn localized(const Polynomial& p, const Point4& centre, double sigma) {
    const ScalarFn base = from_polynomial(p);
    auto bump = [centre, sigma](const JetPoint& x) {
      Jet s(0.0);
      for (std::size_t j = 0; j < 4; ++j) {
        const Jet d = x[j] - Jet(centre[j]);
        s += d * d;
      }
      return exp(s * (-1.0 / (sigma * sigma)));
    };
    return {[base, bump](const JetPoint& x) { return base.re(x) * bump(x); },
            [base, bump](const JetPoint& x) { return base.im(x) * bump(x); }};
  }
};

struct StokesReport {
  cplx volume_z = 0.0;        // (Z a, b)_φ
  cplx volume_adjoint = 0.0;  // (a, Z* b)_φ
  cplx surface = 0.0;         // ∮ Z r̂ · a · conj(b) e^{−φ} dS
  cplx residual = 0.0;
};

/**
 * (Z a, b)_φ − (a, Z*b)_φ − ∮ (Z r̂) a conj(b) e^{−φ} dS with Z*b =
 * −conj(Z) b + (conj(Z) φ) b. Volume terms use exact derivatives and the
 * midpoint mask rule on `grid`; the surface term uses surface_quadrature.
 */
[[nodiscard]] inline StokesReport stokes_residual(const VectorField& z, const ScalarFn& a,
                                                  const ScalarFn& b, const DomainSpec& d,
                                                  const Weight& w, const Grid4& grid,
                                                  int n_u = 24, int n_angle = 48) {
  if (!d.star_shaped_surface()) throw std::invalid_argument("stokes_residual needs a star-shaped catalog domain");
  const VectorField zc = conj(z);
  StokesReport rep;
  const double vol = grid.cell_volume();
  Index4 i{};
  for (i[0] = 0; i[0] < grid.n; ++i[0])
    for (i[1] = 0; i[1] < grid.n; ++i[1])
      for (i[2] = 0; i[2] < grid.n; ++i[2])
        for (i[3] = 0; i[3] < grid.n; ++i[3]) {
          const Point4 x = grid.coordinate(i);
          if (!d.contains(x)) continue;
          const Jet phi = w.jet(x);
          const double e = std::exp(-phi.v) * vol;
          const auto [av, za] = a.value_and(z, x);
          const auto [bv, zcb] = b.value_and(zc, x);
          const cplx adj = -zcb + fueter::apply(zc, phi.g) * bv;
          rep.volume_z += za * std::conj(bv) * e;
          rep.volume_adjoint += av * std::conj(adj) * e;
        }
  rep.surface = surface_quadrature(
      d,
      [&](const Point4& x, const Vec4& nrm) {
        return fueter::apply(z, nrm) * a.value(x) * std::conj(b.value(x)) * std::exp(-w.value(x));
      },
      n_u, n_angle);
  rep.residual = rep.volume_z - rep.volume_adjoint - rep.surface;
  return rep;
}

}  // namespace fueter
