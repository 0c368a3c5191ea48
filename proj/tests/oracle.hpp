#pragma once

// Brute-force reference evaluations over every index tuple. Tensors are plain
// vectors indexed by bit patterns (first slot = most significant bit); they do
// not use the library's FullTensor or reduced-coordinate code.

#include <vector>

#include "fueter/operators.hpp"

namespace oracle {

using fueter::cplx;
using fueter::FieldKind;
using fueter::Polynomial;
using fueter::SpinorField;
using fueter::VectorFieldTable;

inline int popcount(unsigned v) { return __builtin_popcount(v); }

/// Value of a symmetric tensor with `primed` primed slots followed by `unprimed` unprimed slots.
template <class T>
std::vector<T> expand(const SpinorField<T>& r, T zero) {
  const int primed = r.kind == FieldKind::Sym ? r.k : r.kind == FieldKind::Mixed ? r.k - 1 : r.k - 2;
  const int unprimed = r.kind == FieldKind::Sym ? 0 : r.kind == FieldKind::Mixed ? 1 : 2;
  std::vector<T> out(1u << (primed + unprimed), zero);
  for (unsigned t = 0; t < out.size(); ++t) {
    const int l = popcount(t >> unprimed);
    if (r.kind == FieldKind::Sym) out[t] = r.c[static_cast<std::size_t>(l)];
    if (r.kind == FieldKind::Mixed) out[t] = r.c[static_cast<std::size_t>(2 * l + static_cast<int>(t & 1u))];
    if (r.kind == FieldKind::TwoForm) {
      const unsigned ab = t & 3u;
      if (ab == 1u) out[t] = r.c[static_cast<std::size_t>(l)];
      if (ab == 2u) out[t] = r.c[static_cast<std::size_t>(l)] * -1.0;
    }
  }
  return out;
}

/// δ^A_{A'} a = Z^A_{A'} a − (Z^A_{A'} φ) a
inline Polynomial delta(const Polynomial& phi, int a, int ap, const Polynomial& f) {
  const auto& z = VectorFieldTable::standard().raised(a, ap);
  return fueter::apply(z, f) - fueter::apply(z, phi) * f;
}

/// (D0 u)_{A2'..Ak' A} = Σ_{A'} Z_A^{A'} u_{A' A2'..Ak'}; read back at tuples with trailing ones.
inline SpinorField<Polynomial> D0(const SpinorField<Polynomial>& u) {
  const int k = u.k;
  const auto full = expand(u, Polynomial());
  const auto& V = VectorFieldTable::standard();
  SpinorField<Polynomial> out(FieldKind::Mixed, k);
  for (int l = 0; l < k; ++l)
    for (int a = 0; a < 2; ++a) {
      const unsigned rest = (1u << l) - 1u;  // k−1 slots, l of them 1'
      Polynomial s;
      for (int ap = 0; ap < 2; ++ap) s += fueter::apply(V.mixed(a, ap), full[(static_cast<unsigned>(ap) << (k - 1)) | rest]);
      out.at(l, a) = s;
    }
  return out;
}

/// (D1 f)_{A3'..Ak' AB} = ½ Σ_{A2'} (Z_A^{A2'} f_{A2'..B} − Z_B^{A2'} f_{A2'..A}), at (A,B) = (0,1).
inline SpinorField<Polynomial> D1(const SpinorField<Polynomial>& f) {
  const int k = f.k;
  const auto full = expand(f, Polynomial());  // slots: k−1 primed, then A
  const auto& V = VectorFieldTable::standard();
  SpinorField<Polynomial> out(FieldKind::TwoForm, k);
  for (int l = 0; l + 1 < k; ++l) {
    const unsigned rest = (1u << l) - 1u;  // k−2 primed slots
    Polynomial s;
    for (int ap = 0; ap < 2; ++ap) {
      const unsigned primed = (static_cast<unsigned>(ap) << (k - 2)) | rest;
      s += fueter::apply(V.mixed(0, ap), full[(primed << 1) | 1u]) - fueter::apply(V.mixed(1, ap), full[primed << 1]);
    }
    out[static_cast<std::size_t>(l)] = s * 0.5;
  }
  return out;
}

/// (D0* f)_{A1'..Ak'} = (1/k) Σ_s Σ_A δ^A_{A_s'} f_{A1'..^s..Ak' A}
inline SpinorField<Polynomial> D0_star(const SpinorField<Polynomial>& f, const Polynomial& phi) {
  const int k = f.k;
  const auto full = expand(f, Polynomial());
  SpinorField<Polynomial> out(FieldKind::Sym, k);
  for (int m = 0; m <= k; ++m) {
    const unsigned tuple = (1u << m) - 1u;  // k primed slots, m ones
    Polynomial s;
    for (int slot = 0; slot < k; ++slot) {
      const int bit = k - 1 - slot;
      const int ap = static_cast<int>((tuple >> bit) & 1u);
      const unsigned high = tuple >> (bit + 1), low = tuple & ((1u << bit) - 1u);
      const unsigned rest = (high << bit) | low;  // remaining k−1 primed slots
      for (int a = 0; a < 2; ++a) s += delta(phi, a, ap, full[(rest << 1) | static_cast<unsigned>(a)]);
    }
    out[static_cast<std::size_t>(m)] = s * (1.0 / k);
  }
  return out;
}

/// (D1* F)_{A2'..Ak' A} = (1/(k−1)) Σ_s Σ_B δ^B_{A_s'} F_{..^s.. B A}
inline SpinorField<Polynomial> D1_star(const SpinorField<Polynomial>& F, const Polynomial& phi) {
  const int k = F.k;
  const auto full = expand(F, Polynomial());  // k−2 primed, then two unprimed
  SpinorField<Polynomial> out(FieldKind::Mixed, k);
  const int p = k - 1;
  for (int l = 0; l < k; ++l)
    for (int a = 0; a < 2; ++a) {
      const unsigned tuple = (1u << l) - 1u;
      Polynomial s;
      for (int slot = 0; slot < p; ++slot) {
        const int bit = p - 1 - slot;
        const int ap = static_cast<int>((tuple >> bit) & 1u);
        const unsigned high = tuple >> (bit + 1), low = tuple & ((1u << bit) - 1u);
        const unsigned rest = (high << bit) | low;
        for (int b = 0; b < 2; ++b)
          s += delta(phi, b, ap, full[(rest << 2) | (static_cast<unsigned>(b) << 1) | static_cast<unsigned>(a)]);
      }
      out.at(l, a) = s * (1.0 / p);
    }
  return out;
}

/**
 * −k Σ over A1'..Ak', A, B of (1/k) Σ_s [Z_B^{A1'} Z^A_{A_s'} φ] ξ_{(A1'..Ak' without s) A} conj(ξ_{A2'..Ak' B})
 * for symmetric ξ in Mixed reduced coordinates.
 */
inline cplx levi(const fueter::Mat4& hess, int k, const fueter::VecC& xi) {
  const auto& V = VectorFieldTable::standard();
  auto comp = [&](unsigned primed, int a) { return xi[2 * popcount(primed) + a]; };
  cplx total = 0.0;
  for (unsigned t = 0; t < (1u << k); ++t) {
    const int a1 = static_cast<int>((t >> (k - 1)) & 1u);
    const unsigned tail = t & ((1u << (k - 1)) - 1u);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int slot = 0; slot < k; ++slot) {
          const int bit = k - 1 - slot;
          const int as = static_cast<int>((t >> bit) & 1u);
          const unsigned high = t >> (bit + 1), low = t & ((1u << bit) - 1u);
          const unsigned rest = (high << bit) | low;
          total += fueter::apply(V.mixed(b, a1), V.raised(a, as), hess) * comp(rest, a) * std::conj(comp(tail, b));
        }
  }
  return -total;
}

}  // namespace oracle
