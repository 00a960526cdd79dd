#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mla/lie.hpp"
#include "mla/prng.hpp"

using namespace mla;

namespace {

// sl(2) over F: basis e, f, h with [h,e] = 2e, [h,f] = -2f, [e,f] = h.
LieAlgebra sl2(const Field& F) {
  LieBuilder b(F, 3);
  b.label(0, "e");
  b.label(1, "f");
  b.label(2, "h");
  b.add(2, 0, 0, 2);
  b.add(2, 1, 1, F.neg(2));
  b.add(0, 1, 2, 1);
  return b.build();
}

// Heisenberg: [e0, e1] = e2, e2 central.
LieAlgebra heisenberg(const Field& F) {
  LieBuilder b(F, 3);
  b.add(0, 1, 2, 1);
  return b.build();
}

LieAlgebra abelian(const Field& F, std::uint32_t n) { return LieBuilder(F, n).build(); }

// Witt algebra W(1;1): basis x^{(a)}d for 0 <= a < p, graded by a - 1, with
// [x^{(a)}d, x^{(b)}d] = (C(a+b-1,a) - C(a+b-1,b)) x^{(a+b-1)}d.
LieAlgebra witt(const Field& F, bool with_grading) {
  std::uint32_t p = F.p;
  LieBuilder b(F, p);
  for (std::uint32_t a = 0; a < p; ++a)
    for (std::uint32_t bb = a + 1; bb < p; ++bb) {
      if (a + bb < 1 || a + bb - 1 >= p) continue;
      felem c = F.sub(F.from_int(lucas_binomial(a + bb - 1, a, p)),
                      F.from_int(lucas_binomial(a + bb - 1, bb, p)));
      if (c != 0) b.add(a, bb, a + bb - 1, c);
    }
  if (with_grading) {
    std::vector<int> deg(p);
    for (std::uint32_t a = 0; a < p; ++a) deg[a] = int(a) - 1;
    b.set_grading(std::move(deg));
  }
  return b.build();
}

// Direct sum on a concatenated basis.
LieAlgebra direct_sum(const LieAlgebra& A, const LieAlgebra& B) {
  LieBuilder b(A.F, A.dim + B.dim);
  for (std::uint32_t i = 0; i < A.dim; ++i)
    for (std::uint32_t j = i + 1; j < A.dim; ++j)
      for (auto [k, v] : A.c[std::size_t(i) * A.dim + j]) b.add(i, j, k, v);
  for (std::uint32_t i = 0; i < B.dim; ++i)
    for (std::uint32_t j = i + 1; j < B.dim; ++j)
      for (auto [k, v] : B.c[std::size_t(i) * B.dim + j])
        b.add(A.dim + i, A.dim + j, A.dim + k, v);
  return b.build();
}

Subspace span_of_basis(const LieAlgebra& L, std::vector<std::uint32_t> idx) {
  std::vector<Vec> rows;
  for (auto i : idx) rows.push_back(L.basis_vec(i));
  return Subspace::from_rows(L.F, L.dim, rows);
}

Vec random_vec(const Field& F, Prng& rng, std::uint32_t n) {
  Vec v(n);
  for (auto& x : v) x = rng.elem(F);
  return v;
}

}  // namespace

TEST_CASE("builder validates Jacobi, grading, pmap") {
  Field F = Field::prime_field(5);

  LieBuilder bad(F, 3);
  bad.add(0, 1, 0, 1);
  bad.add(0, 2, 1, 1);
  CHECK_THROWS_AS(bad.build(), verification_error);

  // Same constants, deferred: residual on the violating triple is nonzero.
  LieBuilder deferred(F, 3);
  deferred.add(0, 1, 0, 1);
  deferred.add(0, 2, 1, 1);
  LieAlgebra L = deferred.build(/*defer_jacobi=*/true);
  CHECK(!vec_is_zero(jacobi_residual(L, 0, 1, 2)));

  // Witt algebra with its natural grading builds; a shifted grading fails.
  CHECK_NOTHROW(witt(F, true));
  {
    LieBuilder b(F, 5);
    for (std::uint32_t a = 0; a < 5; ++a)
      for (std::uint32_t bb = a + 1; bb < 5; ++bb) {
        if (a + bb < 1 || a + bb - 1 >= 5) continue;
        felem c = F.sub(F.from_int(lucas_binomial(a + bb - 1, a, 5)),
                        F.from_int(lucas_binomial(a + bb - 1, bb, 5)));
        if (c != 0) b.add(a, bb, a + bb - 1, c);
      }
    b.set_grading(std::vector<int>{0, 1, 2, 3, 4});  // off by one everywhere
    CHECK_THROWS_AS(b.build(), verification_error);
  }

  // sl2 is restricted: e^[5] = f^[5] = 0, h^[5] = h.
  {
    LieBuilder b(F, 3);
    b.add(2, 0, 0, 2);
    b.add(2, 1, 1, F.neg(2));
    b.add(0, 1, 2, 1);
    std::vector<Vec> pm{{0, 0, 0}, {0, 0, 0}, {0, 0, 1}};
    b.set_pmap(pm);
    LieAlgebra R = b.build();
    CHECK(R.p_power_basis(2) == Vec{0, 0, 1});
    // Wrong p-map is rejected by the ad-compatibility check.
    LieBuilder b2(F, 3);
    b2.add(2, 0, 0, 2);
    b2.add(2, 1, 1, F.neg(2));
    b2.add(0, 1, 2, 1);
    b2.set_pmap({{0, 0, 0}, {0, 0, 0}, {1, 0, 1}});
    CHECK_THROWS_AS(b2.build(), verification_error);
  }

  LieAlgebra A = abelian(F, 2);
  CHECK_THROWS_AS(A.p_power_basis(0), verification_error);
}

TEST_CASE("bracket, ad, and basic identities") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);

  CHECK(L.bracket_basis(2, 0) == SRow{{0, 2}});
  CHECK(L.bracket_basis(0, 2) == SRow{{0, 3}});  // sign flip
  CHECK(L.bracket_basis(1, 1).empty());

  DMat adh = L.ad_basis(2);
  CHECK(adh.at(0, 0) == 2);
  CHECK(adh.at(1, 1) == 3);
  CHECK(adh.at(2, 2) == 0);

  Prng rng(7);
  for (int t = 0; t < 50; ++t) {
    Vec x = random_vec(F, rng, 3), y = random_vec(F, rng, 3), z = random_vec(F, rng, 3);
    // antisymmetry and ad consistency
    Vec xy = L.bracket(x, y), yx = L.bracket(y, x);
    for (std::uint32_t i = 0; i < 3; ++i) CHECK(xy[i] == F.neg(yx[i]));
    CHECK(mat_vec(F, L.ad(x), y) == xy);
    // Jacobi on random vectors
    Vec j = L.bracket(xy, z);
    vec_axpy(F, j, 1, L.bracket(L.bracket(y, z), x));
    vec_axpy(F, j, 1, L.bracket(L.bracket(z, x), y));
    CHECK(vec_is_zero(j));
  }
}

TEST_CASE("closure, span_bracket, centralizer, normalizer") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);

  Subspace Fe = closure(L, {L.basis_vec(0)}, ClosureMode::subalgebra);
  CHECK(Fe.dim() == 1);
  Subspace ideal_e = closure(L, {L.basis_vec(0)}, ClosureMode::ideal);
  CHECK(ideal_e.dim() == 3);  // sl2 simple

  // Monotone + idempotent on random generator sets (direct sum playground).
  LieAlgebra D = direct_sum(sl2(F), heisenberg(F));
  Prng rng(11);
  for (int t = 0; t < 10; ++t) {
    std::vector<Vec> g1{random_vec(F, rng, D.dim)};
    std::vector<Vec> g2 = g1;
    g2.push_back(random_vec(F, rng, D.dim));
    Subspace c1 = closure(D, g1, ClosureMode::subalgebra);
    Subspace c2 = closure(D, g2, ClosureMode::subalgebra);
    CHECK(c2.contains_subspace(F, c1));
    std::vector<Vec> again;
    for (std::uint32_t i = 0; i < c1.basis.rows; ++i) again.push_back(c1.basis.row_vec(i));
    CHECK(closure(D, again, ClosureMode::subalgebra) == c1);
  }

  CHECK(center(L).dim() == 0);
  CHECK(center(heisenberg(F)) == span_of_basis(heisenberg(F), {2}));

  Subspace Fh = span_of_basis(L, {2});
  CHECK(centralizer(L, Fh) == Fh);
  CHECK(normalizer(L, span_of_basis(L, {0})) == span_of_basis(L, {0, 2}));
  // Centralizer of h inside the borel is still Fh.
  CHECK(centralizer_in(L, span_of_basis(L, {0, 2}), Fh) == Fh);
}

TEST_CASE("series and structure predicates") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);
  Subspace full = Subspace::full(F, 3);

  auto der = series(L, full, SeriesKind::derived);
  CHECK(der.size() == 1);  // [sl2, sl2] = sl2
  CHECK_FALSE(is_solvable(L, full));
  CHECK_FALSE(is_abelian(L, full));

  Subspace borel = span_of_basis(L, {0, 2});
  auto bder = series(L, borel, SeriesKind::derived);
  REQUIRE(bder.size() == 3);
  CHECK(bder[1] == span_of_basis(L, {0}));
  CHECK(bder[2].dim() == 0);
  CHECK(is_solvable(L, borel));
  CHECK_FALSE(is_nilpotent(L, borel));  // lower central sticks at Fe

  LieAlgebra H = heisenberg(F);
  CHECK(is_nilpotent(H, Subspace::full(F, 3)));
  CHECK(is_abelian(abelian(F, 4), Subspace::full(F, 4)));

  CHECK_THROWS_AS(series(L, span_of_basis(L, {0, 1}), SeriesKind::derived),
                  std::domain_error);
}

TEST_CASE("quotient and subalgebra extraction") {
  Field F = Field::prime_field(5);
  LieAlgebra H = heisenberg(F);

  QuotientResult q = quotient(H, span_of_basis(H, {2}));
  CHECK(q.algebra.dim == 2);
  CHECK(is_abelian(q.algebra, Subspace::full(F, 2)));
  CHECK(q.projection.verified);
  CHECK(q.complement == std::vector<std::uint32_t>{0, 1});
  CHECK(H.dim == q.algebra.dim + 1);

  // Quotient by the zero ideal is the identity on structure constants.
  QuotientResult qz = quotient(H, Subspace::zero(F, 3));
  CHECK(qz.algebra.dim == H.dim);
  CHECK(qz.algebra.c == H.c);
  CHECK(qz.projection.matrix == DMat::identity(3));

  LieAlgebra L = sl2(F);
  CHECK_THROWS_AS(quotient(L, span_of_basis(L, {0})), std::domain_error);

  SubalgebraResult borel = subalgebra(L, span_of_basis(L, {0, 2}));
  CHECK(borel.algebra.dim == 2);
  CHECK(borel.inclusion.verified);
  CHECK(is_solvable(borel.algebra, Subspace::full(F, 2)));
  CHECK_THROWS_AS(subalgebra(L, span_of_basis(L, {0, 1})), std::domain_error);
}

TEST_CASE("morphisms: verification, composition, inversion") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);

  Morphism id = identity_morphism(L);
  CHECK(id.verified);

  // e -> 2e, f -> 3f (= 2^{-1}), h -> h is an automorphism.
  DMat m(3, 3);
  m.at(0, 0) = 2;
  m.at(1, 1) = 3;
  m.at(2, 2) = 1;
  Morphism phi = make_morphism(L, L, m);
  CHECK(phi.verified);
  Morphism inv = invert(F, phi);
  CHECK(compose(F, inv, phi).matrix == DMat::identity(3));

  // Swapping e and h is not a morphism; the witness names a violating pair.
  DMat s(3, 3);
  s.at(2, 0) = 1;
  s.at(1, 1) = 1;
  s.at(0, 2) = 1;
  Morphism bad = make_morphism(L, L, s);
  CHECK_FALSE(bad.verified);
  CHECK(bad.witness.has_value());

  CHECK_THROWS_AS(invert(F, make_morphism(L, L, DMat(3, 3))), verification_error);
}

TEST_CASE("derivations: abelian, Heisenberg, sl2") {
  Field F = Field::prime_field(5);

  Derivations dab = derivations(abelian(F, 2));
  CHECK(dab.algebra.dim == 4);  // gl(2)
  // gl(2) has one-dimensional center and derived algebra sl(2).
  CHECK(center(dab.algebra).dim() == 1);
  CHECK(span_bracket(dab.algebra, Subspace::full(F, 4), Subspace::full(F, 4)).dim() == 3);

  CHECK(derivations(heisenberg(F)).algebra.dim == 6);

  LieAlgebra L = sl2(F);
  Derivations d = derivations(L, 3);
  CHECK(d.algebra.dim == 3);  // Der sl2 = ad sl2 away from characteristic 2
  // Every adjoint operator lies in the span of the returned matrices.
  Echelon span(F, 9);
  for (const DMat& M : d.matrices) span.insert(M.a);
  for (std::uint32_t i = 0; i < 3; ++i) CHECK(span.contains(L.ad_basis(i).a));

  // Leibniz property re-check on random pairs.
  Prng rng(5);
  for (const DMat& M : d.matrices)
    for (int t = 0; t < 20; ++t) {
      Vec x = random_vec(F, rng, 3), y = random_vec(F, rng, 3);
      Vec lhs = mat_vec(F, M, L.bracket(x, y));
      Vec rhs = L.bracket(mat_vec(F, M, x), y);
      vec_axpy(F, rhs, 1, L.bracket(x, mat_vec(F, M, y)));
      CHECK(lhs == rhs);
    }

  // Witt algebra: Der W(1;1) = ad W(1;1), dimension p.
  CHECK(derivations(witt(F, false)).algebra.dim == 5);
}

TEST_CASE("generating sets") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);
  auto gens = generating_set(L, 2);
  CHECK(gens.size() <= 3);
  CHECK(closure(L, gens, ClosureMode::subalgebra).dim() == 3);

  auto agens = generating_set(abelian(F, 4));
  CHECK(agens.size() == 4);  // nothing generates anything new
}

TEST_CASE("minimal ideals: simple, direct sum, Heisenberg") {
  Field F = Field::prime_field(5);

  MinimalIdeals ms = minimal_ideals(sl2(F), 1);
  REQUIRE(ms.ideals.size() == 1);
  CHECK(ms.ideals[0].dim() == 3);

  LieAlgebra D = direct_sum(sl2(F), sl2(F));
  MinimalIdeals md = minimal_ideals(D, 1);
  REQUIRE(md.ideals.size() == 2);
  CHECK(md.ideals[0] == span_of_basis(D, {0, 1, 2}));
  CHECK(md.ideals[1] == span_of_basis(D, {3, 4, 5}));
  CHECK(md.witness_log.find("seed=1") == 0);
  // Same seed, same answer; different seed, same ideals.
  CHECK(minimal_ideals(D, 1).witness_log == md.witness_log);
  CHECK(minimal_ideals(D, 99).ideals == md.ideals);

  LieAlgebra H = heisenberg(F);
  MinimalIdeals mh = minimal_ideals(H, 1);
  REQUIRE(mh.ideals.size() == 1);
  CHECK(mh.ideals[0] == span_of_basis(H, {2}));
}

TEST_CASE("weisfeiler filtration and graded algebra on W(1;1)") {
  Field F = Field::prime_field(5);
  LieAlgebra W = witt(F, false);
  Subspace l_minus1 = Subspace::full(F, 5);
  Subspace l_zero = span_of_basis(W, {1, 2, 3, 4});

  Filtration f = weisfeiler_filtration(W, l_minus1, l_zero);
  CHECK(f.lo == -1);
  CHECK(f.hi == 4);
  for (int d = -1; d <= 3; ++d) CHECK(f.at(d).dim() == std::uint32_t(4 - d));
  CHECK(f.at(4).dim() == 0);
  CHECK(f.at(-10).dim() == 5);
  CHECK(f.at(10).dim() == 0);

  GradedAlgebra g = graded_algebra(W, f);
  CHECK(g.algebra.dim == 5);
  for (int d = -1; d <= 3; ++d) CHECK(g.dim_at(d) == 1);
  CHECK(g.algebra.grading.has_value());
  // W(1;1) is already graded, so gr reproduces its structure constants.
  CHECK(g.algebra.c == W.c);

  // The text-variant recursion freezes at L_(0) (a subalgebra), so it differs.
  Filtration fv = weisfeiler_filtration_variant(W, l_minus1, l_zero);
  CHECK(fv.hi == 0);

  // Constant filtration from L_(-1) = L_(0) = L; its graded algebra is zero.
  Filtration fc = weisfeiler_filtration(W, l_minus1, l_minus1);
  CHECK(fc.lo == -1);
  CHECK(fc.hi == 0);
  CHECK(fc.at(3) == l_minus1);
  CHECK(graded_algebra(W, fc).algebra.dim == 0);

  // User-built trivial filtration: everything in degree 0 reproduces L.
  Filtration ft;
  ft.lo = 0;
  ft.hi = 1;
  ft.spaces = {l_minus1, Subspace::zero(F, 5)};
  GradedAlgebra gt = graded_algebra(W, ft);
  CHECK(gt.algebra.dim == 5);
  CHECK(gt.algebra.c == W.c);

  // Precondition violations: containment, then L_(0) bracket closure.
  CHECK_THROWS_AS(weisfeiler_filtration(W, l_zero, l_minus1), std::domain_error);
  CHECK_THROWS_AS(weisfeiler_filtration(W, l_minus1, span_of_basis(W, {0, 4})),
                  std::domain_error);
}

TEST_CASE("restrict_operator") {
  Field F = Field::prime_field(5);
  LieAlgebra L = sl2(F);
  Subspace Fe = span_of_basis(L, {0});
  DMat r = restrict_operator(F, L.ad_basis(2), Fe);
  CHECK(r.at(0, 0) == 2);
  CHECK_THROWS_AS(restrict_operator(F, L.ad_basis(1), Fe), verification_error);
}

TEST_CASE("JSON round trip") {
  Field F = Field::prime_field(5);

  LieBuilder b(F, 3);
  b.label(0, "e");
  b.label(1, "f");
  b.label(2, "h");
  b.add(2, 0, 0, 2);
  b.add(2, 1, 1, F.neg(2));
  b.add(0, 1, 2, 1);
  b.set_pmap({{0, 0, 0}, {0, 0, 0}, {0, 0, 1}});
  LieAlgebra L = b.build();

  LieAlgebra back = algebra_from_json(algebra_to_json(L));
  CHECK(back == L);

  LieAlgebra W = witt(F, true);
  CHECK(algebra_from_json(algebra_to_json(W)) == W);

  // Extension-field coefficients survive the trip.
  Field E = Field::extension(5, 2);
  LieBuilder be(E, 2);
  be.add(0, 1, 0, E.from_int(7));  // a non-prime-subfield element code
  LieAlgebra Le = be.build();
  CHECK(algebra_from_json(algebra_to_json(Le)) == Le);

  CHECK_THROWS(algebra_from_json("{not json"));
  CHECK_THROWS(algebra_from_json("{\"field\":{\"p\":5,\"k\":1},\"dim\":2,"
                                 "\"labels\":[\"a\",\"b\"],"
                                 "\"brackets\":[[1,0,[[0,\"1\"]]]]}"));
}
