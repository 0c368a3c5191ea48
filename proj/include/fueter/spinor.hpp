#pragma once

#include <algorithm>
#include <array>
#include <complex>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace fueter {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

/// ε_{AB} and its inverse ε^{AB}; the same pair serves primed and unprimed indices.
struct EpsilonTensor {
  static constexpr int lower(int a, int b) {
    constexpr int m[2][2] = {{0, 1}, {-1, 0}};
    return m[a][b];
  }
  static constexpr int upper(int a, int b) {
    constexpr int m[2][2] = {{0, -1}, {1, 0}};
    return m[a][b];
  }
};

[[nodiscard]] inline double binomial(int n, int r) {
  if (r < 0 || r > n) return 0.0;
  double c = 1.0;
  for (int i = 1; i <= r; ++i) c = c * (n - r + i) / i;
  return std::round(c);
}

// magnitude used for tolerance checks on generic scalars
[[nodiscard]] inline double magnitude(const cplx& z) { return std::abs(z); }

enum class FieldKind { Sym, Mixed, TwoForm };

[[nodiscard]] inline const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Sym: return "Sym";
    case FieldKind::Mixed: return "Mixed";
    case FieldKind::TwoForm: return "TwoForm";
  }
  return "?";
}

/// Number of reduced components: k+1, 2k, k-1.
[[nodiscard]] inline int component_count(FieldKind kind, int k) {
  switch (kind) {
    case FieldKind::Sym: return k + 1;
    case FieldKind::Mixed: return 2 * k;
    case FieldKind::TwoForm: return k - 1;
  }
  return 0;
}

/// How many full index tuples a reduced component stands for.
[[nodiscard]] inline double multiplicity(FieldKind kind, int k, int comp) {
  switch (kind) {
    case FieldKind::Sym: return binomial(k, comp);
    case FieldKind::Mixed: return binomial(k - 1, comp / 2);
    case FieldKind::TwoForm: return 2.0 * binomial(k - 2, comp);
  }
  return 0.0;
}

[[nodiscard]] inline int mixed_index(int l, int a) { return 2 * l + a; }

inline void check_kind_k(FieldKind kind, int k) {
  if (k < 1 || (kind != FieldKind::Sym && k < 2))
    throw std::invalid_argument(std::string("invalid k=") + std::to_string(k) + " for " +
                                to_string(kind));
}

/**
 * Symmetric-power spinor in reduced coordinates.
 *
 * Sym:     c[l], l = number of 1' among k primed indices.
 * Mixed:   c[2l+A], l counts 1' among k-1 primed indices, A the unprimed index.
 * TwoForm: c[l] = F_{...01}, l counts 1' among k-2 primed indices.
 */
template <class T>
struct ReducedTensor {
  FieldKind kind = FieldKind::Sym;
  int k = 0;
  std::vector<T> c;

  ReducedTensor() = default;
  ReducedTensor(FieldKind kd, int kk, T zero = T{}) : kind(kd), k(kk) {
    check_kind_k(kd, kk);
    c.assign(static_cast<std::size_t>(component_count(kd, kk)), zero);
  }

  [[nodiscard]] std::size_t size() const { return c.size(); }
  T& operator[](std::size_t i) { return c[i]; }
  const T& operator[](std::size_t i) const { return c[i]; }
  T& at(int l, int a) { return c.at(static_cast<std::size_t>(mixed_index(l, a))); }
  const T& at(int l, int a) const { return c.at(static_cast<std::size_t>(mixed_index(l, a))); }
};

using SymTensor = ReducedTensor<cplx>;
using MixedTensor = ReducedTensor<cplx>;
using TwoFormTensor = ReducedTensor<cplx>;

template <class T>
void check_same_shape(const ReducedTensor<T>& a, const ReducedTensor<T>& b) {
  if (a.kind != b.kind || a.k != b.k || a.size() != b.size())
    throw std::invalid_argument("reduced tensors differ in kind or k");
}

/// Multiplicity-weighted inner product; equals the full sum over all index tuples.
[[nodiscard]] inline cplx inner_product(const ReducedTensor<cplx>& a,
                                        const ReducedTensor<cplx>& b) {
  check_same_shape(a, b);
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += multiplicity(a.kind, a.k, static_cast<int>(i)) * a[i] * std::conj(b[i]);
  return s;
}

enum class SlotKind { Primed, Unprimed };

/**
 * Dense rank-p two-spinor with one 0/1 index per slot. Slot 0 is the most
 * significant bit of the linear index. Oracle use only.
 */
template <class T>
class FullTensor {
 public:
  static constexpr int max_rank = 12;

  FullTensor() = default;
  explicit FullTensor(std::vector<SlotKind> slots, T zero = T{})
      : slots_(std::move(slots)), upper_(slots_.size(), false) {
    if (rank() > max_rank) throw std::invalid_argument("FullTensor rank exceeds 12");
    data_.assign(std::size_t{1} << rank(), zero);
  }

  static FullTensor primed(int p, T zero = T{}) {
    return FullTensor(std::vector<SlotKind>(static_cast<std::size_t>(p), SlotKind::Primed), zero);
  }
  static FullTensor unprimed(int p, T zero = T{}) {
    return FullTensor(std::vector<SlotKind>(static_cast<std::size_t>(p), SlotKind::Unprimed),
                      zero);
  }

  [[nodiscard]] int rank() const { return static_cast<int>(slots_.size()); }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] const std::vector<SlotKind>& slots() const { return slots_; }
  [[nodiscard]] bool is_upper(int slot) const { return upper_.at(static_cast<std::size_t>(slot)); }
  void set_upper(int slot, bool up) { upper_.at(static_cast<std::size_t>(slot)) = up; }

  T& operator[](std::size_t lin) { return data_[lin]; }
  const T& operator[](std::size_t lin) const { return data_[lin]; }

  [[nodiscard]] std::size_t linear(const std::vector<int>& idx) const {
    if (static_cast<int>(idx.size()) != rank()) throw std::invalid_argument("index arity");
    std::size_t lin = 0;
    for (int v : idx) lin = (lin << 1) | static_cast<std::size_t>(v & 1);
    return lin;
  }
  [[nodiscard]] int digit(std::size_t lin, int slot) const {
    return static_cast<int>((lin >> (rank() - 1 - slot)) & 1U);
  }
  [[nodiscard]] static std::size_t with_digit(std::size_t lin, int rank, int slot, int v) {
    const std::size_t bit = std::size_t{1} << (rank - 1 - slot);
    return v ? (lin | bit) : (lin & ~bit);
  }

  T& operator()(const std::vector<int>& idx) { return data_[linear(idx)]; }
  const T& operator()(const std::vector<int>& idx) const { return data_[linear(idx)]; }

 private:
  std::vector<SlotKind> slots_;
  std::vector<bool> upper_;
  std::vector<T> data_;
};

namespace detail {

template <class T>
void check_slot(const FullTensor<T>& t, int slot, SlotKind kind) {
  if (slot < 0 || slot >= t.rank()) throw std::out_of_range("slot out of range");
  if (t.slots()[static_cast<std::size_t>(slot)] != kind)
    throw std::invalid_argument("slot has the wrong index kind");
}

}  // namespace detail

/// Average over all permutations of the given primed slots.
template <class T>
[[nodiscard]] FullTensor<T> symmetrize_primed(const FullTensor<T>& t, std::vector<int> slots) {
  for (int s : slots) detail::check_slot(t, s, SlotKind::Primed);
  std::sort(slots.begin(), slots.end());
  if (std::adjacent_find(slots.begin(), slots.end()) != slots.end())
    throw std::invalid_argument("repeated slot in symmetrization");
  FullTensor<T> out = t;
  if (slots.size() < 2) return out;
  const int p = t.rank();
  std::vector<int> perm(slots.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  const double inv = 1.0 / static_cast<double>(perms.size());
  for (std::size_t lin = 0; lin < t.size(); ++lin) {
    T acc = t[lin] * 0.0;
    for (const auto& pm : perms) {
      std::size_t src = lin;
      for (std::size_t i = 0; i < slots.size(); ++i)
        src = FullTensor<T>::with_digit(src, p, slots[i], t.digit(lin, slots[pm[i]]));
      acc = acc + t[src];
    }
    out[lin] = acc * inv;
  }
  return out;
}

template <class T>
[[nodiscard]] FullTensor<T> symmetrize_all_primed(const FullTensor<T>& t) {
  std::vector<int> slots;
  for (int s = 0; s < t.rank(); ++s)
    if (t.slots()[static_cast<std::size_t>(s)] == SlotKind::Primed) slots.push_back(s);
  return symmetrize_primed(t, slots);
}

/// H_[ab] = (H_ab - H_ba)/2 on two unprimed slots.
template <class T>
[[nodiscard]] FullTensor<T> antisymmetrize_pair(const FullTensor<T>& t, int a, int b) {
  detail::check_slot(t, a, SlotKind::Unprimed);
  detail::check_slot(t, b, SlotKind::Unprimed);
  if (a == b) throw std::invalid_argument("antisymmetrize_pair needs two distinct slots");
  FullTensor<T> out = t;
  const int p = t.rank();
  for (std::size_t lin = 0; lin < t.size(); ++lin) {
    std::size_t sw = FullTensor<T>::with_digit(lin, p, a, t.digit(lin, b));
    sw = FullTensor<T>::with_digit(sw, p, b, t.digit(lin, a));
    out[lin] = (t[lin] - t[sw]) * 0.5;
  }
  return out;
}

namespace detail {

// raise: f^A = sum_B f_B eps^{BA};  lower: f_C = sum_A f^A eps_{AC}
template <class T>
FullTensor<T> move_index(const FullTensor<T>& t, int slot, SlotKind kind, bool raise) {
  check_slot(t, slot, kind);
  if (t.is_upper(slot) == raise)
    throw std::invalid_argument(raise ? "slot is already raised" : "slot is already lowered");
  FullTensor<T> out = t;
  const int p = t.rank();
  for (std::size_t lin = 0; lin < t.size(); ++lin) {
    const int target = t.digit(lin, slot);
    T acc = t[lin] * 0.0;
    for (int src = 0; src < 2; ++src) {
      const int e = raise ? EpsilonTensor::upper(src, target) : EpsilonTensor::lower(src, target);
      if (e != 0) acc = acc + t[FullTensor<T>::with_digit(lin, p, slot, src)] * double(e);
    }
    out[lin] = acc;
  }
  out.set_upper(slot, raise);
  return out;
}

}  // namespace detail

template <class T>
[[nodiscard]] FullTensor<T> raise_primed(const FullTensor<T>& t, int slot) {
  return detail::move_index(t, slot, SlotKind::Primed, true);
}
template <class T>
[[nodiscard]] FullTensor<T> lower_primed(const FullTensor<T>& t, int slot) {
  return detail::move_index(t, slot, SlotKind::Primed, false);
}
template <class T>
[[nodiscard]] FullTensor<T> raise_unprimed(const FullTensor<T>& t, int slot) {
  return detail::move_index(t, slot, SlotKind::Unprimed, true);
}
template <class T>
[[nodiscard]] FullTensor<T> lower_unprimed(const FullTensor<T>& t, int slot) {
  return detail::move_index(t, slot, SlotKind::Unprimed, false);
}

/// Sum over a repeated index; `up` must be raised and `down` lowered, same kind.
template <class T>
[[nodiscard]] FullTensor<T> contract(const FullTensor<T>& t, int up, int down) {
  if (up == down) throw std::invalid_argument("contraction needs two slots");
  const SlotKind kind = t.slots().at(static_cast<std::size_t>(up));
  detail::check_slot(t, down, kind);
  if (!t.is_upper(up) || t.is_upper(down))
    throw std::invalid_argument("contraction pairs an upper slot with a lower slot");
  std::vector<SlotKind> rest;
  std::vector<int> keep;
  for (int s = 0; s < t.rank(); ++s)
    if (s != up && s != down) {
      rest.push_back(t.slots()[static_cast<std::size_t>(s)]);
      keep.push_back(s);
    }
  FullTensor<T> out(rest, t[0] * 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::size_t base = 0;
    for (std::size_t i = 0; i < keep.size(); ++i)
      base = FullTensor<T>::with_digit(base, t.rank(), keep[i], out.digit(j, static_cast<int>(i)));
    T acc = t[0] * 0.0;
    for (int v = 0; v < 2; ++v) {
      std::size_t lin = FullTensor<T>::with_digit(base, t.rank(), up, v);
      lin = FullTensor<T>::with_digit(lin, t.rank(), down, v);
      acc = acc + t[lin];
    }
    out[j] = acc;
  }
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.set_upper(static_cast<int>(i), t.is_upper(keep[i]));
  return out;
}

/// Full index sum of a*conj(b).
[[nodiscard]] inline cplx inner_product(const FullTensor<cplx>& a, const FullTensor<cplx>& b) {
  if (a.slots() != b.slots()) throw std::invalid_argument("tensor shapes differ");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
  return s;
}

namespace detail {

[[nodiscard]] inline int ones(std::size_t bits) { return __builtin_popcountll(bits); }

[[nodiscard]] inline std::vector<SlotKind> reduced_slots(FieldKind kind, int k) {
  const int primed = kind == FieldKind::Sym ? k : kind == FieldKind::Mixed ? k - 1 : k - 2;
  const int unprimed = kind == FieldKind::Sym ? 0 : kind == FieldKind::Mixed ? 1 : 2;
  std::vector<SlotKind> s(static_cast<std::size_t>(primed), SlotKind::Primed);
  s.insert(s.end(), static_cast<std::size_t>(unprimed), SlotKind::Unprimed);
  return s;
}

}  // namespace detail

/// Expand a reduced tensor into every index tuple (primed slots first).
template <class T>
[[nodiscard]] FullTensor<T> embed_full(const ReducedTensor<T>& r) {
  const T zero = r.c.empty() ? T{} : r.c[0] * 0.0;
  FullTensor<T> out(detail::reduced_slots(r.kind, r.k), zero);
  const int unprimed = r.kind == FieldKind::Sym ? 0 : r.kind == FieldKind::Mixed ? 1 : 2;
  for (std::size_t lin = 0; lin < out.size(); ++lin) {
    const std::size_t primed_bits = lin >> unprimed;
    const int l = detail::ones(primed_bits);
    switch (r.kind) {
      case FieldKind::Sym: out[lin] = r.c[static_cast<std::size_t>(l)]; break;
      case FieldKind::Mixed: out[lin] = r.at(l, static_cast<int>(lin & 1U)); break;
      case FieldKind::TwoForm: {
        const int a = static_cast<int>((lin >> 1) & 1U), b = static_cast<int>(lin & 1U);
        if (a == 0 && b == 1) out[lin] = r.c[static_cast<std::size_t>(l)];
        else if (a == 1 && b == 0) out[lin] = r.c[static_cast<std::size_t>(l)] * -1.0;
        break;
      }
    }
  }
  return out;
}

/**
 * Read reduced components back from a full tensor. Each component is the
 * tuple with the 1' indices in the trailing primed slots; the input must be
 * symmetric (and antisymmetric in the unprimed pair for TwoForm) to `tol`.
 */
template <class T>
[[nodiscard]] ReducedTensor<T> project_reduced(const FullTensor<T>& t, FieldKind kind, int k,
                                               double tol = 1e-12) {
  if (t.slots() != detail::reduced_slots(kind, k))
    throw std::invalid_argument("tensor shape does not match the reduced kind");
  ReducedTensor<T> out(kind, k, t[0] * 0.0);
  const int unprimed = kind == FieldKind::Sym ? 0 : kind == FieldKind::Mixed ? 1 : 2;
  const int primed = t.rank() - unprimed;
  double scale = 0.0;
  for (std::size_t lin = 0; lin < t.size(); ++lin) scale = std::max(scale, magnitude(t[lin]));
  const double limit = tol * std::max(1.0, scale);
  auto representative = [&](int l) {
    return ((std::size_t{1} << l) - 1U) << unprimed;  // trailing ones
  };
  for (int l = 0; l <= primed; ++l) {
    const std::size_t rep = representative(l);
    if (kind == FieldKind::Sym) out.c[static_cast<std::size_t>(l)] = t[rep];
    else if (kind == FieldKind::Mixed) {
      if (l < k) {
        out.at(l, 0) = t[rep];
        out.at(l, 1) = t[rep | 1U];
      }
    } else if (l < k - 1) {
      out.c[static_cast<std::size_t>(l)] = t[rep | 1U];
    }
  }
  // symmetry check against the embedding of what was read
  const FullTensor<T> back = embed_full(out);
  for (std::size_t lin = 0; lin < t.size(); ++lin)
    if (magnitude(t[lin] - back[lin]) > limit)
      throw std::invalid_argument("tensor is not symmetric in its primed slots (index " +
                                  std::to_string(lin) + ")");
  return out;
}

}  // namespace fueter
