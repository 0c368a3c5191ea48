#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>

namespace fueter {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Value, gradient and Hessian of a real function of four variables,
/// propagated through arithmetic by the chain rule.
struct Jet {
  double v = 0.0;
  Vec4 g = Vec4::Zero();
  Mat4 h = Mat4::Zero();

  Jet() = default;
  Jet(double value) : v(value) {}  // NOLINT implicit constant

  static Jet variable(double value, int index) {
    Jet j(value);
    j.g[index] = 1.0;
    return j;
  }

  /// f(this) given f, f', f'' at the current value.
  [[nodiscard]] Jet chain(double f0, double f1, double f2) const {
    Jet out(f0);
    out.g = f1 * g;
    out.h = f1 * h + f2 * g * g.transpose();
    return out;
  }

  Jet& operator+=(const Jet& o) {
    v += o.v;
    g += o.g;
    h += o.h;
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    v -= o.v;
    g -= o.g;
    h -= o.h;
    return *this;
  }
  Jet& operator*=(const Jet& other) {
    const Jet o = other;
    h = h * o.v + o.h * v + g * o.g.transpose() + o.g * g.transpose();
    g = g * o.v + o.g * v;
    v *= o.v;
    return *this;
  }
  Jet& operator*=(double s) {
    v *= s;
    g *= s;
    h *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, const Jet& b) { return a *= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator-(Jet a) { return a *= -1.0; }
  friend Jet operator/(const Jet& a, const Jet& b) {
    const double r = 1.0 / b.v;
    return a * b.chain(r, -r * r, 2.0 * r * r * r);
  }
  friend Jet operator/(Jet a, double s) { return a *= 1.0 / s; }
};

using JetPoint = std::array<Jet, 4>;

[[nodiscard]] inline JetPoint seed_point(const std::array<double, 4>& x) {
  JetPoint p;
  for (int i = 0; i < 4; ++i) p[static_cast<std::size_t>(i)] = Jet::variable(x[static_cast<std::size_t>(i)], i);
  return p;
}

[[nodiscard]] inline Jet exp(const Jet& a) {
  const double e = std::exp(a.v);
  return a.chain(e, e, e);
}
[[nodiscard]] inline Jet log(const Jet& a) {
  return a.chain(std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}
[[nodiscard]] inline Jet sqrt(const Jet& a) {
  const double s = std::sqrt(a.v);
  return a.chain(s, 0.5 / s, -0.25 / (s * a.v));
}
[[nodiscard]] inline Jet square(const Jet& a) { return a * a; }
/// log(1+e^t), evaluated stably.
[[nodiscard]] inline Jet softplus(const Jet& a) {
  const double t = a.v;
  const double f0 = t > 30 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
  const double s = 1.0 / (1.0 + std::exp(-t));
  return a.chain(f0, s, s * (1.0 - s));
}

}  // namespace fueter
