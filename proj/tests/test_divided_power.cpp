#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mla/divided_power.hpp"
#include "mla/prng.hpp"

using namespace mla;

namespace {

// Exact integer binomial for small arguments, reduced mod p at the end.
felem binom(const Field& F, std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t num = 1, den = 1;
  for (std::uint64_t t = 1; t <= k; ++t) {
    num *= n - k + t;
    den *= t;
  }
  return F.from_int(std::int64_t((num / den) % F.p));
}

DPElement random_element(Prng& rng, const DPAmbientPtr& amb, std::uint32_t nterms,
                         bool no_constant = false) {
  DPElement f = dp_zero(amb);
  for (std::uint32_t t = 0; t < nterms; ++t) {
    std::uint32_t r =
        std::uint32_t(no_constant ? 1 + rng.below(amb->size - 1) : rng.below(amb->size));
    f = dp_add(f, dp_monomial(amb, amb->exps[r], rng.elem(amb->F)));
  }
  return f;
}

DPElement dp_int_pow(const DPElement& f, std::uint32_t k) {
  DPElement out = dp_one(f.amb);
  for (std::uint32_t t = 0; t < k; ++t) out = dp_mul(out, f);
  return out;
}

DPElement poisson(const DPElement& f, const DPElement& g) {
  return dp_sub(dp_mul(dp_partial(f, 0), dp_partial(g, 1)),
                dp_mul(dp_partial(f, 1), dp_partial(g, 0)));
}

template <typename Fn>
void check_throws_substr(Fn&& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected a domain error containing \"" << needle << "\"");
  } catch (const std::domain_error& e) {
    CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos,
                  "message \"" << e.what() << "\" lacks \"" << needle << "\"");
  }
}

}  // namespace

TEST_CASE("truncated multiplication follows the binomial rule") {
  Field F = Field::prime_field(5);
  auto amb = dp_ambient(F, {1, 1});
  auto line = dp_ambient(F, {2});

  DPElement x1 = dp_var(amb, 0), x2 = dp_var(amb, 1);
  CHECK(dp_mul(x1, x1) == dp_monomial(amb, {2, 0}, 2));
  CHECK(dp_mul(dp_monomial(amb, {2, 0}), dp_monomial(amb, {3, 0})).is_zero());
  CHECK(dp_mul(x1, x2) == dp_monomial(amb, {1, 1}));

  // (1 + x1)^5 = 1: the five binomial cross terms all carry mod 5
  DPElement u = dp_add(dp_one(amb), x1);
  CHECK(dp_int_pow(u, 5) == dp_one(amb));

  // with the bound raised the vanishing comes from the binomials themselves
  DPElement y = dp_var(line, 0);
  CHECK(dp_mul(dp_monomial(line, {2}), dp_monomial(line, {3})).is_zero());
  CHECK(dp_mul(dp_monomial(line, {3}), dp_monomial(line, {4})).is_zero());
  CHECK(dp_mul(y, dp_monomial(line, {5})) == dp_monomial(line, {6}));
  CHECK(dp_mul(dp_monomial(line, {5}), dp_monomial(line, {5})) ==
        dp_monomial(line, {10}, 2));
  CHECK(dp_mul(dp_monomial(line, {10}), dp_monomial(line, {10})) ==
        dp_monomial(line, {20}));

  // unit laws and coefficient access
  DPElement f = dp_add(dp_monomial(amb, {2, 1}, 3),
                       dp_add(dp_monomial(amb, {0, 1}), dp_monomial(amb, {0, 0}, 2)));
  CHECK(dp_mul(dp_one(amb), f) == f);
  CHECK(dp_mul(dp_zero(amb), f).is_zero());
  CHECK(dp_coeff(f, {2, 1}) == 3);
  CHECK(dp_coeff(f, {1, 1}) == 0);
  CHECK(dp_to_text(f) == "2 + 1·x2^(1) + 3·x1^(2)·x2^(1)");
  CHECK(dp_to_text(dp_zero(amb)) == "0");
  CHECK(dp_to_text(dp_one(amb)) == "1");

  CHECK_THROWS_AS(dp_monomial(amb, {5, 0}), std::domain_error);
  CHECK_THROWS_AS(dp_coeff(f, {0, 7}), std::domain_error);
  CHECK_THROWS_AS(dp_mul(x1, y), std::domain_error);

  // structurally equal ambients from separate calls interoperate
  auto line2 = dp_ambient(F, {2});
  CHECK(dp_mul(y, dp_var(line2, 0)) == dp_monomial(line, {2}, 2));

  // commutativity, associativity, bilinearity on random elements
  Prng rng(2026);
  for (const auto& a : {dp_ambient(F, {2}), dp_ambient(F, {1, 1}), dp_ambient(F, {2, 1})}) {
    for (int t = 0; t < 1000; ++t) {
      DPElement p = random_element(rng, a, 4);
      DPElement q = random_element(rng, a, 4);
      DPElement r = random_element(rng, a, 4);
      CHECK(dp_mul(p, q) == dp_mul(q, p));
      CHECK(dp_mul(dp_mul(p, q), r) == dp_mul(p, dp_mul(q, r)));
      CHECK(dp_mul(dp_add(p, q), r) == dp_add(dp_mul(p, r), dp_mul(q, r)));
    }
  }
}

TEST_CASE("divided powers of augmentation ideal elements") {
  Field F = Field::prime_field(5);
  auto line = dp_ambient(F, {2});   // O(1;2)
  auto small = dp_ambient(F, {1});  // O(1;1)
  auto amb = dp_ambient(F, {1, 1});

  DPElement x = dp_var(line, 0);
  Prng rng(7);

  // gamma_0 = 1, gamma_1 = identity
  DPElement f = random_element(rng, line, 5, true);
  CHECK(dp_divided_power(f, 0) == dp_one(line));
  CHECK(dp_divided_power(f, 1) == f);
  CHECK(dp_divided_power(dp_zero(line), 3).is_zero());

  // gamma_k(x) = x^(k), including across the p and p^2 thresholds
  for (std::uint32_t k = 0; k < 25; ++k)
    CHECK(dp_divided_power(x, k) == dp_monomial(line, {k}));
  CHECK(dp_divided_power(x, 25).is_zero());
  CHECK(dp_divided_power(dp_var(small, 0), 5).is_zero());
  CHECK(dp_divided_power(dp_monomial(line, {5}), 5).is_zero());

  // single-monomial coefficients (ka)!/((a!)^k k!) mod 5
  CHECK(dp_divided_power(dp_monomial(small, {2}), 2) == dp_monomial(small, {4}, 3));
  CHECK(dp_divided_power(dp_monomial(line, {5}), 2) == dp_monomial(line, {10}));
  CHECK(dp_divided_power(dp_monomial(line, {6}), 2) == dp_monomial(line, {12}, 2));
  CHECK(dp_divided_power(dp_monomial(line, {6}), 4) == dp_monomial(line, {24}, 4));
  CHECK(dp_divided_power(dp_monomial(amb, {1, 1}), 2) == dp_monomial(amb, {2, 2}, 2));

  // cross terms: (x1 + x2)^(2) and (x + x^(5))^(2)
  DPElement s = dp_add(dp_var(amb, 0), dp_var(amb, 1));
  DPElement expect = dp_add(dp_monomial(amb, {2, 0}),
                            dp_add(dp_monomial(amb, {1, 1}), dp_monomial(amb, {0, 2})));
  CHECK(dp_divided_power(s, 2) == expect);
  DPElement tail = dp_add(x, dp_monomial(line, {5}));
  DPElement expect2 = dp_add(dp_monomial(line, {2}),
                             dp_add(dp_monomial(line, {6}), dp_monomial(line, {10})));
  CHECK(dp_divided_power(tail, 2) == expect2);

  // oracle below p: k! gamma_k(f) = f^k
  auto big = dp_ambient(F, {2, 1});
  for (int t = 0; t < 20; ++t) {
    DPElement g = random_element(rng, big, 5, true);
    felem kf = 1;
    for (std::uint32_t k = 1; k < 5; ++k) {
      kf = F.mul(kf, F.from_int(std::int64_t(k)));
      CHECK(dp_scale(kf, dp_divided_power(g, k)) == dp_int_pow(g, k));
    }
  }

  CHECK_THROWS_AS(dp_divided_power(dp_add(dp_one(line), x), 2), std::domain_error);
}

TEST_CASE("special derivations and witt algebras") {
  Field F = Field::prime_field(5);

  // partials and application
  auto amb = dp_ambient(F, {2, 1});
  DPElement f = dp_monomial(amb, {3, 1}, 2);
  CHECK(dp_partial(f, 0) == dp_monomial(amb, {2, 1}, 2));
  CHECK(dp_partial(f, 1) == dp_monomial(amb, {3, 0}, 2));
  CHECK(dp_partial(dp_one(amb), 0).is_zero());
  WElement D = w_zero(amb);
  D.comp[1] = dp_var(amb, 0);  // x1 d2
  CHECK(w_apply(D, dp_monomial(amb, {0, 2})) == dp_monomial(amb, {1, 1}));

  WittAlgebra w1 = witt(F, {2});
  CHECK(w1.algebra.dim == 25);
  WittAlgebra w2 = witt(F, {1, 1});
  CHECK(w2.algebra.dim == 50);
  CHECK(w2.algebra.labels[0] == "d1");
  CHECK(w2.algebra.labels[1] == "d2");
  CHECK(w2.algebra.labels[2] == "x2^(1)·d1");
  CHECK(w2.algebra.labels[3] == "x2^(1)·d2");
  REQUIRE(w2.algebra.grading.has_value());
  CHECK((*w2.algebra.grading)[0] == -1);
  CHECK((*w2.algebra.grading)[2] == 0);

  // W(1;1): the structure constants against the closed binomial formula
  WittAlgebra ws = witt(F, {1});
  CHECK(ws.algebra.dim == 5);
  CHECK(ws.algebra.bracket_basis(0, 4) == SRow{{3, 1}});
  for (std::uint32_t a = 0; a < 5; ++a)
    for (std::uint32_t b = a + 1; b < 5; ++b) {
      felem c = F.sub(binom(F, a + b - 1, a), binom(F, a + b - 1, b));
      SRow expect;
      if (a + b >= 1 && a + b - 1 < 5 && c != 0) expect.push_back({a + b - 1, c});
      CHECK(ws.algebra.bracket_basis(a, b) == expect);
    }

  // coordinates round-trip and match the abstract bracket
  Prng rng(11);
  for (int t = 0; t < 50; ++t) {
    WElement a = w_zero(w1.amb), b = w_zero(w1.amb);
    a.comp[0] = random_element(rng, w1.amb, 4);
    b.comp[0] = random_element(rng, w1.amb, 4);
    CHECK(w1.element(w1.coords(a)) == a);
    CHECK(w1.coords(w_bracket(a, b)) == w1.algebra.bracket(w1.coords(a), w1.coords(b)));
  }
}

TEST_CASE("hamiltonian derivations") {
  Field F = Field::prime_field(5);
  auto amb = dp_ambient(F, {2, 1});

  CHECK(d_h(dp_one(amb)).is_zero());
  WElement d2 = d_h(dp_var(amb, 1));  // D_H(x2) = -D1
  CHECK(d2.comp[0] == dp_monomial(amb, {0, 0}, F.neg(1)));
  CHECK(d2.comp[1].is_zero());
  WElement h = d_h(dp_monomial(amb, {1, 1}));  // x2 D2 - x1 D1
  CHECK(h.comp[0] == dp_monomial(amb, {1, 0}, F.neg(1)));
  CHECK(h.comp[1] == dp_monomial(amb, {0, 1}));

  // kernel = constants, over every monomial
  for (std::uint32_t r = 0; r < amb->size; ++r)
    CHECK(d_h(dp_monomial(amb, amb->exps[r])).is_zero() == (r == 0));

  // Lie map into W: [D_H f, D_H g] = D_H{f, g}
  Prng rng(13);
  for (int t = 0; t < 1000; ++t) {
    DPElement f = random_element(rng, amb, 5);
    DPElement g = random_element(rng, amb, 5);
    CHECK(w_bracket(d_h(f), d_h(g)) == d_h(poisson(f, g)));
  }
}

TEST_CASE("hamiltonian chain construction") {
  Field F = Field::prime_field(5);
  HamiltonianCast H = hamiltonian_cast(F);
  const DPAmbient& A = *H.amb;

  CHECK(H.s.dim == 123);
  CHECK(H.g.dim == 126);
  CHECK(H.s_p.algebra.dim == 124);
  CHECK(H.gp.algebra.dim == 127);
  CHECK(H.w.algebra.dim == 250);
  CHECK(H.s_to_g.verified);
  CHECK(H.s_to_w.verified);
  CHECK(H.g_to_w.verified);
  CHECK(H.sp_to_gp.verified);
  CHECK(H.s_p.embedding.verified);
  CHECK(H.gp.embedding.verified);
  CHECK(H.s.labels[0] == "DH(x2^(1))");
  CHECK(H.g.labels[123] == "DH(x1^(25))");
  CHECK(H.g.labels[124] == "DH(x2^(5))");
  CHECK(H.g.labels[125] == "DH(x1^(24)·x2^(4))");
  CHECK(H.s_p.algebra.labels[123] == "DH(x2^(1))^[5]");

  // the second derived subalgebra, recomputed from scratch, equals span(s)
  {
    std::vector<Vec> rows;
    for (std::uint32_t r = 0; r < A.size; ++r)
      rows.push_back(H.w.coords(d_h(dp_monomial(H.amb, A.exps[r]))));
    rows.push_back(H.w.coords(H.g_basis[123]));
    rows.push_back(H.w.coords(H.g_basis[124]));
    Subspace g_sub = Subspace::from_rows(F, 250, rows);
    CHECK(g_sub.dim() == 126);
    std::vector<Subspace> chain = series(H.w.algebra, g_sub, SeriesKind::derived);
    REQUIRE(chain.size() >= 3);
    std::vector<Vec> srows;
    for (const WElement& e : H.s_basis) srows.push_back(H.w.coords(e));
    CHECK(chain[1].dim() == 124);
    CHECK(chain[2] == Subspace::from_rows(F, 250, srows));
  }

  // gradings: s spans degrees -1..25, the outer directions sit at 23, 3, 26
  REQUIRE(H.s.grading.has_value());
  REQUIRE(H.g.grading.has_value());
  CHECK((*H.s.grading)[0] == -1);
  CHECK((*H.s.grading)[122] == 25);
  CHECK((*H.g.grading)[123] == 23);
  CHECK((*H.g.grading)[124] == 3);
  CHECK((*H.g.grading)[125] == 26);
  CHECK((*H.s_p.algebra.grading)[123] == -5);
  CHECK((*H.gp.algebra.grading)[126] == -5);

  // filtration components from the grading
  CHECK(H.s_filt.lo == -1);
  CHECK(H.s_filt.hi == 26);
  CHECK(H.s_filt.at(-1).dim() == 123);
  CHECK(H.s_filt.at(0).dim() == 121);
  CHECK(H.s_filt.at(25).dim() == 2);
  CHECK(H.s_filt.at(26).dim() == 0);
  CHECK(H.g_filt.at(0).dim() == 124);
  CHECK(H.g_filt.at(26).dim() == 1);
  CHECK(H.g_filt.at(27).dim() == 0);

  // [v1, v2] = v3 and the V-sector vanishing: V^3 = 0, V^[5] = 0 in Der s
  CHECK(H.g.bracket_basis(123, 124) == SRow{{125, 1}});
  for (std::uint32_t i = 123; i < 126; ++i)
    for (std::uint32_t j = 123; j < 126; ++j)
      for (std::uint32_t k = 123; k < 126; ++k) {
        DMat prod = dmat_mul(F, H.gp.matrices[i],
                             dmat_mul(F, H.gp.matrices[j], H.gp.matrices[k]));
        CHECK(prod == DMat(123, 123));
      }
  for (std::uint32_t i = 123; i < 126; ++i)
    CHECK(p_power(H.gp.algebra, H.gp.algebra.basis_vec(i)) == Vec(127, 0));

  // s itself is not closed under fifth powers (witness: D_H(x2) = -D1)
  check_throws_substr([&] { p_map_from_adjoint(H.s); }, "DH(x2^(1))");

  // D1^5 lands on the appended envelope generator with sign -1
  {
    Vec expect(124, 0);
    expect[123] = F.neg(1);
    CHECK(H.d1p_sp == expect);
    Vec expect_g(127, 0);
    expect_g[126] = F.neg(1);
    CHECK(H.d1p_gp == expect_g);
    CHECK(p_power(H.s_p.algebra, H.d1p_sp) == Vec(124, 0));
    CHECK(p_power(H.gp.algebra, H.d1p_gp) == Vec(127, 0));
  }

  // [D1^5, D_H(f)] = D_H(D1^5 f) through the envelope coordinates
  {
    WElement a = d_h(dp_monomial(H.amb, {6, 1}));
    WElement b = d_h(dp_monomial(H.amb, {1, 1}));
    Vec lhs = H.gp.algebra.bracket(H.d1p_gp, H.gp_element(a, 0));
    CHECK(lhs == H.gp_element(b, 0));
    CHECK(H.gp.algebra.bracket(H.d1p_gp, H.gp_element(d_h(dp_var(H.amb, 0)), 0)) ==
          Vec(127, 0));
  }

  // coordinate helpers agree with the embeddings
  {
    Vec v = H.s_coords(H.s_basis[7]);
    Vec e(123, 0);
    e[7] = 1;
    CHECK(v == e);
    CHECK(H.g_coords(H.g_basis[124]) == H.g.basis_vec(124));
    CHECK_THROWS_AS(H.s_coords(H.g_basis[123]), std::domain_error);
    Vec emb = H.sp_element(H.s_basis[7], 2);
    CHECK(emb[7] == 1);
    CHECK(emb[123] == F.mul(2, F.neg(1)));
  }

}

TEST_CASE("substitution endomorphisms induce automorphisms") {
  Field F = Field::prime_field(5);
  auto line = dp_ambient(F, {2});
  auto small = dp_ambient(F, {1});

  // identity substitution
  {
    SubstMap id = substitution_map(line, {dp_var(line, 0)});
    DMat eye(line->size, line->size);
    for (std::uint32_t r = 0; r < line->size; ++r) eye.at(r, r) = 1;
    CHECK(id.matrix == eye);
    WittAlgebra w = witt(F, {2});
    Morphism mor = induced_automorphism(id, w.algebra, w.basis);
    CHECK(mor.verified);
    CHECK(mor.matrix == identity_morphism(w.algebra).matrix);
  }

  // rejected inputs
  check_throws_substr(
      [&] { substitution_map(line, {dp_add(dp_one(line), dp_var(line, 0))}); },
      "constant term");
  {
    auto amb = dp_ambient(F, {1, 1});
    DPElement both = dp_add(dp_var(amb, 0), dp_var(amb, 1));
    check_throws_substr([&] { substitution_map(amb, {both, both}); }, "not bijective");
  }
  {
    auto big = dp_ambient(F, {2, 1});
    check_throws_substr(
        [&] { substitution_map(big, {dp_var(big, 1), dp_var(big, 0)}); },
        "not bijective");
  }

  // x -> x + x^(5) is bijective but inadmissible: the conjugate of d/dx is
  // a derivation that is not special
  {
    SubstMap bad = substitution_map(
        line, {dp_add(dp_var(line, 0), dp_monomial(line, {5}))});
    WElement d = w_zero(line);
    d.comp[0] = dp_one(line);
    check_throws_substr([&] { conjugate_derivation(bad, d); }, "not special");
  }

  // x -> exp(E)(x) for E = x^(2) d matches the exponential automorphism
  {
    WittAlgebra w = witt(F, {1});
    WElement E = w_zero(small);
    E.comp[0] = dp_monomial(small, {2});
    DPElement img = dp_var(small, 0), cur = dp_var(small, 0);
    felem kf = 1;
    for (std::uint32_t k = 1; k < 5; ++k) {
      cur = w_apply(E, cur);
      kf = F.mul(kf, F.from_int(std::int64_t(k)));
      img = dp_add(img, dp_scale(F.inv(kf), cur));
    }
    SubstMap s = substitution_map(small, {img});
    Morphism lhs = induced_automorphism(s, w.algebra, w.basis);
    Morphism rhs = exp_ad(w.algebra, w.coords(E), 1);
    CHECK(lhs.verified);
    CHECK(rhs.verified);
    CHECK(lhs.matrix == rhs.matrix);
  }

  // conjugates that leave the spanned algebra are refused
  {
    LieBuilder b(F, 1);
    b.label(0, "d1");
    LieAlgebra one = b.build();
    WElement d = w_zero(small);
    d.comp[0] = dp_one(small);
    SubstMap s = substitution_map(
        small, {dp_add(dp_var(small, 0), dp_monomial(small, {2}))});
    check_throws_substr([&] { induced_automorphism(s, one, {d}); }, "escapes");
  }

  // scalings act diagonally on the hamiltonian chain: x1 -> a x1 scales
  // D_H(x^(r,s)) by a^{r-1}, the dual scaling x1 -> b^{-1} x1, x2 -> b x2
  // by b^{s-r}
  {
    HamiltonianCast H = hamiltonian_cast(F);
    const DPAmbient& A = *H.amb;
    felem a = 2, bb = 3;
    SubstMap sc = substitution_map(
        H.amb, {dp_monomial(H.amb, {1, 0}, a), dp_var(H.amb, 1)});
    SubstMap dual = substitution_map(
        H.amb, {dp_monomial(H.amb, {1, 0}, F.inv(bb)), dp_monomial(H.amb, {0, 1}, bb)});
    Morphism ma = induced_automorphism(sc, H.s, H.s_basis);
    Morphism mb = induced_automorphism(dual, H.s, H.s_basis);
    CHECK(ma.verified);
    CHECK(mb.verified);
    std::uint32_t top_rank = A.rank({A.bounds[0] - 1, A.bounds[1] - 1});
    std::uint32_t k = 0;
    for (std::uint32_t r = 1; r < A.size; ++r) {
      if (r == top_rank) continue;
      std::uint32_t e1 = A.exps[r][0], e2 = A.exps[r][1];
      felem da = F.div(F.pow(a, e1), a);          // a^{r-1}
      felem db = F.div(F.pow(bb, e2), F.pow(bb, e1));  // b^{s-r}
      for (std::uint32_t row = 0; row < H.s.dim; ++row) {
        CHECK(ma.matrix.at(row, k) == (row == k ? da : 0));
        CHECK(mb.matrix.at(row, k) == (row == k ? db : 0));
      }
      ++k;
    }
  }
}
