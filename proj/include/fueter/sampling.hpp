#pragma once

#include <vector>

#include "fueter/operators.hpp"
#include "fueter/polynomial.hpp"
#include "fueter/rng.hpp"

namespace fueter {

/// Monomials of total degree ≤ d (or exactly d), in lexicographic order.
[[nodiscard]] inline std::vector<Exponent> monomials(int d, bool exact = false) {
  std::vector<Exponent> out;
  for (int a = 0; a <= d; ++a)
    for (int b = 0; a + b <= d; ++b)
      for (int c = 0; a + b + c <= d; ++c)
        for (int e = 0; a + b + c + e <= d; ++e)
          if (!exact || a + b + c + e == d) out.push_back({a, b, c, e});
  return out;
}

/// Each monomial of degree ≤ d is kept with probability `density`; coefficients are standard normal.
[[nodiscard]] inline Polynomial random_polynomial(Rng& rng, int degree, bool real = false, double density = 0.6) {
  Polynomial p;
  for (const Exponent& e : monomials(degree)) {
    if (rng.uniform() >= density) continue;
    p.add_term(e, real ? cplx(rng.normal(), 0.0) : rng.complex_normal());
  }
  return p;
}

[[nodiscard]] inline SpinorField<Polynomial> random_spinor_field(Rng& rng, FieldKind kind, int k, int degree) {
  SpinorField<Polynomial> f(kind, k);
  for (auto& c : f.c) c = random_polynomial(rng, degree);
  return f;
}

}  // namespace fueter
