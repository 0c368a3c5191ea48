#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fueter/jet.hpp"
#include "fueter/polynomial.hpp"
#include "fueter/rng.hpp"

namespace fueter {

[[nodiscard]] inline Jet jet_at(const std::function<Jet(const JetPoint&)>& f, const Point4& x) {
  return f(seed_point(x));
}

/// Convex increasing 1-D profile with closed-form derivatives.
struct Chi {
  std::string name;
  std::function<Jet(const Jet&)> apply;

  [[nodiscard]] double d1(double t) const { return apply(Jet::variable(t, 0)).g[0]; }
  [[nodiscard]] double d2(double t) const { return apply(Jet::variable(t, 0)).h(0, 0); }

  static Chi identity() {
    return {"identity", [](const Jet& t) { return t; }};
  }
  static Chi square() {
    return {"square", [](const Jet& t) { return t * t; }};
  }
  static Chi exponential() {
    return {"exp", [](const Jet& t) { return exp(t); }};
  }
  static Chi soft_plus() {
    return {"softplus", [](const Jet& t) { return softplus(t); }};
  }
  static Chi by_name(const std::string& name) {
    if (name == "identity" || name == "t") return identity();
    if (name == "square" || name == "t2") return square();
    if (name == "exp") return exponential();
    if (name == "softplus") return soft_plus();
    throw std::invalid_argument("unknown chi '" + name + "' (identity, square, exp, softplus)");
  }
  static std::vector<Chi> catalog() { return {identity(), square(), exponential(), soft_plus()}; }
};

/**
 * Real weight φ. `poly` holds the exact polynomial when one exists so the
 * polynomial backend can use it; `kappa` is the overall scale.
 */
struct Weight {
  enum class Kind { Zero, Radial, R1, R2, Quadratic, Polynomial, Chain, Scaled };

  std::string name = "zero";
  Kind kind = Kind::Zero;
  double kappa = 0.0;
  std::function<Jet(const JetPoint&)> fn = [](const JetPoint&) { return Jet(0.0); };
  std::optional<fueter::Polynomial> poly = fueter::Polynomial();

  [[nodiscard]] Jet jet(const Point4& x) const { return jet_at(fn, x); }
  [[nodiscard]] double value(const Point4& x) const { return fn(seed_point(x)).v; }
  [[nodiscard]] Vec4 gradient(const Point4& x) const { return jet(x).g; }
  [[nodiscard]] Mat4 hessian(const Point4& x) const { return jet(x).h; }

  static Weight zero() { return {}; }

  /// κ|x|²
  static Weight radial(double kappa) {
    Weight w;
    w.name = "radial";
    w.kind = Kind::Radial;
    w.kappa = kappa;
    w.fn = [kappa](const JetPoint& x) {
      return kappa * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
    };
    fueter::Polynomial p;
    for (int j = 1; j <= 4; ++j) p += fueter::Polynomial::variable(j) * fueter::Polynomial::variable(j);
    w.poly = p * kappa;
    return w;
  }
  /// x1² + x2²
  static Weight r1() { return quadratic_pair("r1", Kind::R1, 0); }
  /// x3² + x4²
  static Weight r2() { return quadratic_pair("r2", Kind::R2, 2); }

  /// xᵀQx with Q symmetric
  static Weight quadratic(const Mat4& q) {
    const Mat4 s = 0.5 * (q + q.transpose());
    Weight w;
    w.name = "quadratic";
    w.kind = Kind::Quadratic;
    w.kappa = 1.0;
    w.fn = [s](const JetPoint& x) {
      Jet acc(0.0);
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
          if (s(i, j) != 0.0) acc += s(i, j) * (x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)]);
      return acc;
    };
    fueter::Polynomial p;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (s(i, j) != 0.0)
          p += fueter::Polynomial::variable(i + 1) * fueter::Polynomial::variable(j + 1) * s(i, j);
    w.poly = p;
    return w;
  }

  /// Real polynomial weight; imaginary parts are rejected.
  static Weight polynomial(const fueter::Polynomial& p) {
    for (const auto& [e, c] : p.terms())
      if (std::abs(c.imag()) > 0.0) throw std::invalid_argument("weight must be real-valued");
    Weight w;
    w.name = "polynomial";
    w.kind = Kind::Polynomial;
    w.kappa = 1.0;
    w.poly = p;
    w.fn = [p](const JetPoint& x) {
      Jet acc(0.0);
      for (const auto& [e, c] : p.terms()) {
        Jet m(c.real());
        for (std::size_t j = 0; j < 4; ++j)
          for (int r = 0; r < e[j]; ++r) m *= x[j];
        acc += m;
      }
      return acc;
    };
    return w;
  }

  /// χ∘φ
  static Weight chain(const Chi& chi, const Weight& inner) {
    Weight w;
    w.name = chi.name + "(" + inner.name + ")";
    w.kind = Kind::Chain;
    w.kappa = inner.kappa;
    auto f = inner.fn;
    auto a = chi.apply;
    w.fn = [f, a](const JetPoint& x) { return a(f(x)); };
    w.poly.reset();
    if (chi.name == "identity") w.poly = inner.poly;
    if (chi.name == "square" && inner.poly) w.poly = (*inner.poly) * (*inner.poly);
    return w;
  }

  /// s·φ
  [[nodiscard]] Weight scaled(double s) const {
    Weight w = *this;
    w.name = name;
    w.kind = kind == Kind::Radial ? Kind::Radial : Kind::Scaled;
    w.kappa = kappa * s;
    auto f = fn;
    w.fn = [f, s](const JetPoint& x) { return s * f(x); };
    if (poly) w.poly = (*poly) * s;
    return w;
  }

 private:
  static Weight quadratic_pair(const std::string& name, Kind kind, int first) {
    Weight w;
    w.name = name;
    w.kind = kind;
    w.kappa = 1.0;
    const auto a = static_cast<std::size_t>(first);
    w.fn = [a](const JetPoint& x) { return x[a] * x[a] + x[a + 1] * x[a + 1]; };
    const auto xa = fueter::Polynomial::variable(first + 1);
    const auto xb = fueter::Polynomial::variable(first + 2);
    w.poly = xa * xa + xb * xb;
    return w;
  }
};

struct BoundarySample {
  Point4 x;
  Vec4 normal;  // ∇r̂ = ∇r/|∇r|
};

/**
 * Catalog domain {r < 0}.
 *   ball:       |x|² − R²
 *   sum_convex: χ1(r1) + χ2(r2) − level with χi(t) = a_i t + b_i t²
 *   halfspace:  x1 (clipped to the default box for grids)
 */
struct DomainSpec {
  enum class Kind { Ball, SumConvex, Halfspace };

  Kind kind = Kind::Ball;
  double radius = 1.0;
  double a1 = 1.0, b1 = 0.0, a2 = 1.0, b2 = 0.0, level = 1.0;

  static DomainSpec ball(double radius = 1.0) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    DomainSpec d;
    d.radius = radius;
    return d;
  }
  static DomainSpec sum_convex(double a1, double b1, double a2, double b2, double level) {
    if (!(a1 > 0 && a2 > 0 && b1 >= 0 && b2 >= 0 && level > 0))
      throw std::invalid_argument("sum_convex needs a_i > 0, b_i >= 0, level > 0");
    DomainSpec d;
    d.kind = Kind::SumConvex;
    d.a1 = a1;
    d.b1 = b1;
    d.a2 = a2;
    d.b2 = b2;
    d.level = level;
    return d;
  }
  static DomainSpec halfspace() {
    DomainSpec d;
    d.kind = Kind::Halfspace;
    return d;
  }

  [[nodiscard]] std::string name() const {
    switch (kind) {
      case Kind::Ball: return "ball";
      case Kind::SumConvex: return "sum_convex";
      case Kind::Halfspace: return "halfspace_test";
    }
    return "?";
  }

  [[nodiscard]] Jet r(const JetPoint& x) const {
    switch (kind) {
      case Kind::Ball:
        return x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] - Jet(radius * radius);
      case Kind::SumConvex: {
        const Jet s1 = x[0] * x[0] + x[1] * x[1];
        const Jet s2 = x[2] * x[2] + x[3] * x[3];
        return a1 * s1 + b1 * s1 * s1 + a2 * s2 + b2 * s2 * s2 - Jet(level);
      }
      case Kind::Halfspace: return x[0];
    }
    return Jet(0.0);
  }
  [[nodiscard]] Jet r(const Point4& x) const { return r(seed_point(x)); }

  /**
   * r̂ = r/|∇r|. Value and gradient are exact everywhere; the Hessian drops the
   * r·∇²(1/|∇r|) term, so it is exact on the boundary where it is used.
   */
  [[nodiscard]] Jet r_normalized(const Point4& x) const {
    const Jet raw = r(x);
    const double g = raw.g.norm();
    if (g == 0.0) throw std::domain_error("defining function has a critical point");
    const Vec4 dg = raw.h * raw.g / g;  // ∇|∇r|
    Jet out(raw.v / g);
    out.g = raw.g / g - raw.v * dg / (g * g);
    out.h = raw.h / g - (raw.g * dg.transpose() + dg * raw.g.transpose()) / (g * g);
    return out;
  }

  [[nodiscard]] bool contains(const Point4& x) const {
    if (kind == Kind::Halfspace)
      for (double c : x)
        if (std::abs(c) >= 1.0) return false;
    return r(x).v < 0.0;
  }

  /// Symmetric bounding interval used for default grids.
  [[nodiscard]] double extent() const {
    switch (kind) {
      case Kind::Ball: return radius;
      case Kind::SumConvex: {
        const double t1 = root_in_s(a1, b1, level), t2 = root_in_s(a2, b2, level);
        return std::sqrt(std::max(t1, t2));
      }
      case Kind::Halfspace: return 1.0;
    }
    return 1.0;
  }

  [[nodiscard]] bool star_shaped_surface() const { return kind != Kind::Halfspace; }

  /// Distance t > 0 along unit direction ω with r(tω) = 0.
  [[nodiscard]] double radial_root(const Point4& w) const {
    if (kind == Kind::Ball) return radius;
    if (kind == Kind::Halfspace) throw std::invalid_argument("halfspace has no radial boundary map");
    const double p = w[0] * w[0] + w[1] * w[1], q = w[2] * w[2] + w[3] * w[3];
    // χ1(sp) + χ2(sq) = level is quadratic in s = t²; then polish t by Newton
    const double A = b1 * p * p + b2 * q * q, B = a1 * p + a2 * q;
    double s = A > 0 ? (-B + std::sqrt(B * B + 4 * A * level)) / (2 * A) : level / B;
    double t = std::sqrt(s);
    for (int it = 0; it < 50; ++it) {
      const Point4 y{t * w[0], t * w[1], t * w[2], t * w[3]};
      const Jet ry = r(y);
      const double dr = ry.g.dot(Vec4(w[0], w[1], w[2], w[3]));
      if (std::abs(ry.v) <= 1e-14) return t;
      if (dr <= 0.0) break;
      t -= ry.v / dr;
    }
    const Point4 y{t * w[0], t * w[1], t * w[2], t * w[3]};
    if (!(std::abs(r(y).v) <= 1e-10)) throw std::runtime_error("boundary root-finding did not converge");
    return t;
  }

 private:
  static double root_in_s(double a, double b, double lev) {
    return b > 0 ? (-a + std::sqrt(a * a + 4 * b * lev)) / (2 * b) : lev / a;
  }
};

[[nodiscard]] inline Point4 random_direction(Rng& rng) {
  Point4 w;
  double n = 0.0;
  do {
    for (double& c : w) c = rng.normal();
    n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3]);
  } while (n < 1e-12);
  for (double& c : w) c /= n;
  return w;
}

/// Points on ∂Ω with their unit normals; |r| ≤ 1e-10 is enforced.
[[nodiscard]] inline std::vector<BoundarySample> boundary_samples(const DomainSpec& d, int m,
                                                                  Rng& rng) {
  std::vector<BoundarySample> out;
  out.reserve(static_cast<std::size_t>(std::max(m, 0)));
  for (int i = 0; i < m; ++i) {
    Point4 x{};
    if (d.kind == DomainSpec::Kind::Halfspace) {
      x = {0.0, rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)};
    } else {
      const Point4 w = random_direction(rng);
      const double t = d.radial_root(w);
      for (std::size_t j = 0; j < 4; ++j) x[j] = t * w[j];
    }
    const Jet rx = d.r(x);
    if (std::abs(rx.v) > 1e-10) throw std::runtime_error("boundary sample misses the level set");
    out.push_back({x, rx.g / rx.g.norm()});
  }
  return out;
}

/// Gauss-Legendre nodes and weights on [0, 1].
[[nodiscard]] inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = 0.5 * (1.0 - z);
    w[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/**
 * ∮_{∂Ω} f dS for star-shaped catalog domains. Directions use Hopf
 * coordinates ω = (√(1−u) cos a, √(1−u) sin a, √u cos b, √u sin b), where
 * dσ = ½ du da db; Gauss-Legendre in u, trapezoid in a and b. The radial
 * graph x = t(ω)ω contributes dS = t³/(ω·n) dσ.
 */
template <class F>
[[nodiscard]] auto surface_quadrature(const DomainSpec& d, F&& integrand, int n_u = 24,
                                      int n_angle = 48) {
  using R = decltype(integrand(Point4{}, Vec4{}));
  if (!d.star_shaped_surface()) throw std::invalid_argument("surface quadrature unsupported for " + d.name());
  const auto [us, uw] = gauss_legendre_unit(n_u);
  const double da = 2.0 * std::numbers::pi / n_angle;
  R total{};
  for (std::size_t iu = 0; iu < us.size(); ++iu) {
    const double c = std::sqrt(1.0 - us[iu]), s = std::sqrt(us[iu]);
    R ring{};
    for (int ia = 0; ia < n_angle; ++ia)
      for (int ib = 0; ib < n_angle; ++ib) {
        const double a = (ia + 0.5) * da, b = (ib + 0.5) * da;
        const Point4 w{c * std::cos(a), c * std::sin(a), s * std::cos(b), s * std::sin(b)};
        const double t = d.radial_root(w);
        const Point4 x{t * w[0], t * w[1], t * w[2], t * w[3]};
        const Vec4 grad = d.r(x).g;
        const Vec4 nrm = grad / grad.norm();
        const double cos_angle = nrm.dot(Vec4(w[0], w[1], w[2], w[3]));
        ring += integrand(x, nrm) * (t * t * t / cos_angle);
      }
    total += ring * (0.5 * uw[iu] * da * da);
  }
  return total;
}

}  // namespace fueter
