#include "catch_amalgamated.hpp"

#include <algorithm>
#include <numeric>

#include "fueter/experiments.hpp"
#include "fueter/rng.hpp"
#include "fueter/spinor.hpp"

using namespace fueter;
using Catch::Matchers::WithinAbs;

namespace {

FullTensor<cplx> random_tensor(const std::vector<SlotKind>& slots, Rng& rng) {
  FullTensor<cplx> t(slots);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.complex_normal();
  return t;
}

double gap(const FullTensor<cplx>& a, const FullTensor<cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ReducedTensor<cplx> random_reduced(FieldKind kind, int k, Rng& rng) {
  ReducedTensor<cplx> r(kind, k);
  for (auto& c : r.c) c = rng.complex_normal();
  return r;
}

}  // namespace

TEST_CASE("epsilon tensors are inverse to each other") {
  CHECK(EpsilonTensor::lower(0, 1) == 1);
  CHECK(EpsilonTensor::lower(1, 0) == -1);
  CHECK(EpsilonTensor::upper(0, 1) == -1);
  CHECK(EpsilonTensor::upper(1, 0) == 1);
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c) {
      int s = 0;
      for (int b = 0; b < 2; ++b) s += EpsilonTensor::lower(a, b) * EpsilonTensor::upper(b, c);
      CHECK(s == (a == c ? 1 : 0));
    }
}

TEST_CASE("symmetrize averages a single off-diagonal entry") {
  auto h = FullTensor<cplx>::primed(2);
  h({0, 1}) = 1.0;
  const auto s = symmetrize_primed(h, {0, 1});
  CHECK(s({0, 1}) == cplx(0.5));
  CHECK(s({1, 0}) == cplx(0.5));
  CHECK(s({0, 0}) == cplx(0.0));
  CHECK(s({1, 1}) == cplx(0.0));
}

TEST_CASE("symmetrize leaves a symmetric tensor unchanged") {
  Rng rng(3);
  const auto t = symmetrize_all_primed(random_tensor(std::vector<SlotKind>(3, SlotKind::Primed), rng));
  CHECK(gap(symmetrize_all_primed(t), t) < 1e-15);
}

TEST_CASE("symmetrize matches an explicit S3 average") {
  Rng rng(11);
  const auto t = random_tensor(std::vector<SlotKind>(3, SlotKind::Primed), rng);
  const auto s = symmetrize_primed(t, {0, 1, 2});
  std::array<int, 3> perm{0, 1, 2};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const std::array<int, 3> idx{a, b, c};
        cplx sum = 0.0;
        std::sort(perm.begin(), perm.end());
        int count = 0;
        do {
          sum += t({idx[perm[0]], idx[perm[1]], idx[perm[2]]});
          ++count;
        } while (std::next_permutation(perm.begin(), perm.end()));
        REQUIRE(count == 6);
        CHECK(std::abs(s({a, b, c}) - sum / 6.0) < 1e-15);
      }
}

TEST_CASE("symmetrize rejects bad slots") {
  const auto mixed = FullTensor<cplx>({SlotKind::Primed, SlotKind::Unprimed});
  CHECK_THROWS_AS(symmetrize_primed(mixed, {0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(symmetrize_primed(mixed, {0, 5}), std::out_of_range);
  CHECK_THROWS_AS(symmetrize_primed(FullTensor<cplx>::primed(2), {0, 0}), std::invalid_argument);
}

TEST_CASE("antisymmetrize a pair") {
  auto H = FullTensor<cplx>::unprimed(2);
  H({0, 1}) = 1.0;
  const auto A = antisymmetrize_pair(H, 0, 1);
  CHECK(A({0, 1}) == cplx(0.5));
  CHECK(A({1, 0}) == cplx(-0.5));
  CHECK(A({0, 0}) == cplx(0.0));

  auto S = FullTensor<cplx>::unprimed(2);
  S({0, 1}) = S({1, 0}) = 2.0;
  S({0, 0}) = 3.0;
  CHECK(gap(antisymmetrize_pair(S, 0, 1), FullTensor<cplx>::unprimed(2)) == 0.0);

  Rng rng(5);
  const auto R = random_tensor({SlotKind::Unprimed, SlotKind::Unprimed}, rng);
  const auto once = antisymmetrize_pair(R, 0, 1);
  CHECK(gap(antisymmetrize_pair(once, 0, 1), once) == 0.0);

  CHECK_THROWS_AS(antisymmetrize_pair(R, 1, 1), std::invalid_argument);
}

TEST_CASE("raising and lowering") {
  auto f = FullTensor<cplx>::primed(1);
  f({0}) = 1.0;
  const auto up = raise_primed(f, 0);
  CHECK(up({0}) == cplx(0.0));
  CHECK(up({1}) == cplx(-1.0));

  Rng rng(9);
  const auto t = random_tensor({SlotKind::Primed, SlotKind::Unprimed, SlotKind::Primed}, rng);
  CHECK(gap(lower_primed(raise_primed(t, 2), 2), t) == 0.0);
  CHECK(gap(lower_unprimed(raise_unprimed(t, 1), 1), t) == 0.0);

  CHECK_THROWS_AS(raise_unprimed(t, 0), std::invalid_argument);
  CHECK_THROWS_AS(raise_primed(up, 0), std::invalid_argument);
  CHECK_THROWS_AS(lower_primed(t, 0), std::invalid_argument);
}

TEST_CASE("contraction of an antisymmetric pair") {
  auto f = FullTensor<cplx>::unprimed(2);
  f({0, 1}) = 1.0;
  f({1, 0}) = -1.0;
  const auto tr = contract(raise_unprimed(f, 0), 0, 1);
  REQUIRE(tr.rank() == 0);
  CHECK(tr[0] == cplx(-2.0));
  CHECK(tr[0] == -2.0 * antisymmetrize_pair(f, 0, 1)({0, 1}));

  CHECK_THROWS_AS(contract(f, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(contract(raise_unprimed(f, 0), 0, 0), std::invalid_argument);
}

TEST_CASE("reduced inner products carry the multiplicities") {
  ReducedTensor<cplx> u(FieldKind::Sym, 2);
  u[1] = 1.0;
  CHECK(inner_product(u, u) == cplx(2.0));

  ReducedTensor<cplx> F(FieldKind::TwoForm, 2);
  F[0] = 1.0;
  CHECK(inner_product(F, F) == cplx(2.0));

  CHECK(multiplicity(FieldKind::Sym, 4, 2) == 6.0);
  CHECK(multiplicity(FieldKind::Mixed, 4, mixed_index(1, 1)) == 3.0);
  CHECK(multiplicity(FieldKind::TwoForm, 4, 1) == 4.0);
}

TEST_CASE("reduced inner products equal full index sums") {
  Rng rng(21);
  for (FieldKind kind : {FieldKind::Sym, FieldKind::Mixed, FieldKind::TwoForm})
    for (int k = 2; k <= 6; ++k) {
      const auto a = random_reduced(kind, k, rng), b = random_reduced(kind, k, rng);
      const auto fa = embed_full(a), fb = embed_full(b);
      cplx brute = 0.0;
      for (std::size_t i = 0; i < fa.size(); ++i) brute += fa[i] * std::conj(fb[i]);
      CAPTURE(to_string(kind), k);
      CHECK(std::abs(inner_product(a, b) - brute) <= 1e-12 * std::max(1.0, std::abs(brute)));
    }
}

TEST_CASE("inner product rejects mismatched shapes") {
  const ReducedTensor<cplx> a(FieldKind::Sym, 2), b(FieldKind::Sym, 3), c(FieldKind::Mixed, 2);
  CHECK_THROWS_AS(inner_product(a, b), std::invalid_argument);
  CHECK_THROWS_AS(inner_product(a, c), std::invalid_argument);
  CHECK_THROWS_AS(ReducedTensor<cplx>(FieldKind::Mixed, 1), std::invalid_argument);
}

TEST_CASE("embedding and projection") {
  ReducedTensor<cplx> u(FieldKind::Sym, 2);
  u[0] = 1.0;
  const auto full = embed_full(u);
  CHECK(full({0, 0}) == cplx(1.0));
  CHECK(full({0, 1}) == cplx(0.0));
  CHECK(full({1, 1}) == cplx(0.0));

  auto t = FullTensor<cplx>::primed(2);
  t({0, 1}) = t({1, 0}) = 3.0;
  CHECK(project_reduced(t, FieldKind::Sym, 2)[1] == cplx(3.0));

  Rng rng(4);
  for (FieldKind kind : {FieldKind::Sym, FieldKind::Mixed, FieldKind::TwoForm}) {
    const auto r = random_reduced(kind, 5, rng);
    const auto back = project_reduced(embed_full(r), kind, 5);
    CHECK(back.c == r.c);
  }

  const auto two = embed_full(random_reduced(FieldKind::TwoForm, 4, rng));
  for (std::size_t lin = 0; lin < two.size(); ++lin) {
    const std::size_t swapped = (lin & ~std::size_t{3}) | ((lin & 1U) << 1) | ((lin >> 1) & 1U);
    CHECK(two[lin] == -two[swapped]);
  }

  t({0, 1}) = 1.0;
  CHECK_THROWS_AS(project_reduced(t, FieldKind::Sym, 2), std::invalid_argument);
  CHECK_THROWS_AS(project_reduced(t, FieldKind::Sym, 3), std::invalid_argument);
}

TEST_CASE("pairing and contraction lemmas on random tensors") {
  Rng rng(77);
  Recorder rec;
  checks::spinor_lemmas(1000, rng, rec);
  for (const auto& f : rec.failures()) FAIL(f);
  CHECK(rec.pass());
}

TEST_CASE("FullTensor rank cap") {
  CHECK_NOTHROW(FullTensor<cplx>::primed(12));
  CHECK_THROWS_AS(FullTensor<cplx>::primed(13), std::invalid_argument);
}
