#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <stdexcept>
#include <string>

#include "fueter/spinor.hpp"

namespace fueter {

using Exponent = std::array<int, 4>;
using Point4 = std::array<double, 4>;

/// Exact complex polynomial in x1..x4. Zero coefficients are never stored.
class Polynomial {
 public:
  static constexpr int default_max_degree = 12;

  Polynomial() = default;
  Polynomial(cplx constant) { add_term({0, 0, 0, 0}, constant); }  // NOLINT implicit
  Polynomial(double constant) : Polynomial(cplx(constant)) {}      // NOLINT implicit

  static Polynomial monomial(const Exponent& e, cplx coeff = 1.0) {
    Polynomial p;
    p.add_term(e, coeff);
    return p;
  }
  /// x_j for axis j in 1..4
  static Polynomial variable(int axis) {
    check_axis(axis);
    Exponent e{0, 0, 0, 0};
    e[static_cast<std::size_t>(axis - 1)] = 1;
    return monomial(e);
  }

  [[nodiscard]] const std::map<Exponent, cplx>& terms() const { return terms_; }
  [[nodiscard]] bool is_zero() const { return terms_.empty(); }
  [[nodiscard]] int max_degree() const { return max_degree_; }
  void set_max_degree(int d) { max_degree_ = d; }

  [[nodiscard]] int degree() const {
    int d = -1;
    for (const auto& [e, c] : terms_) d = std::max(d, e[0] + e[1] + e[2] + e[3]);
    return d;
  }

  [[nodiscard]] cplx coefficient(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? cplx(0.0) : it->second;
  }

  void add_term(const Exponent& e, cplx c) {
    for (int v : e)
      if (v < 0) throw std::invalid_argument("negative exponent");
    if (e[0] + e[1] + e[2] + e[3] > max_degree_)
      throw std::domain_error("polynomial degree exceeds bound " + std::to_string(max_degree_));
    if (c == cplx(0.0)) return;
    auto [it, fresh] = terms_.emplace(e, c);
    if (!fresh) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    for (const auto& [e, c] : o.terms_) add_term(e, -c);
    return *this;
  }
  Polynomial& operator*=(cplx s) {
    if (s == cplx(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      it = it->second == cplx(0.0) ? terms_.erase(it) : std::next(it);
    }
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator-(Polynomial a) { return a *= -1.0; }
  friend Polynomial operator*(Polynomial a, cplx s) { return a *= s; }
  friend Polynomial operator*(cplx s, Polynomial a) { return a *= s; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= cplx(s); }
  friend Polynomial operator*(double s, Polynomial a) { return a *= cplx(s); }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial out;
    out.max_degree_ = std::max(a.max_degree_, b.max_degree_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_)
        out.add_term({ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2], ea[3] + eb[3]}, ca * cb);
    return out;
  }

  [[nodiscard]] Polynomial conj() const {
    Polynomial out;
    out.max_degree_ = max_degree_;
    for (const auto& [e, c] : terms_) out.add_term(e, std::conj(c));
    return out;
  }

  [[nodiscard]] cplx operator()(const Point4& x) const {
    cplx s = 0.0;
    for (const auto& [e, c] : terms_) {
      double m = 1.0;
      for (std::size_t j = 0; j < 4; ++j) m *= std::pow(x[j], e[j]);
      s += c * m;
    }
    return s;
  }

  [[nodiscard]] double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [e, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  static void check_axis(int axis) {
    if (axis < 1 || axis > 4) throw std::out_of_range("axis must be in 1..4");
  }

 private:
  std::map<Exponent, cplx> terms_;
  int max_degree_ = default_max_degree;
};

/// Exact ∂/∂x_axis, axis in 1..4.
[[nodiscard]] inline Polynomial poly_diff(const Polynomial& p, int axis) {
  Polynomial::check_axis(axis);
  const auto j = static_cast<std::size_t>(axis - 1);
  Polynomial out;
  out.set_max_degree(p.max_degree());
  for (const auto& [e, c] : p.terms()) {
    if (e[j] == 0) continue;
    Exponent d = e;
    d[j] -= 1;
    out.add_term(d, c * static_cast<double>(e[j]));
  }
  return out;
}

[[nodiscard]] inline double magnitude(const Polynomial& p) { return p.max_abs_coefficient(); }

}  // namespace fueter
