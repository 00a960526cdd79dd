#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "mla/field.hpp"
#include "mla/prng.hpp"

using namespace mla;

namespace {

// Big-integer decimal strings (most significant digit first): enough of an
// exact integer type to run Pascal's recurrence without any modular shortcut.
std::string big_add(const std::string& a, const std::string& b) {
  std::string r;
  int i = int(a.size()) - 1, j = int(b.size()) - 1, carry = 0;
  while (i >= 0 || j >= 0 || carry) {
    int s = carry + (i >= 0 ? a[i--] - '0' : 0) + (j >= 0 ? b[j--] - '0' : 0);
    r.push_back(char('0' + s % 10));
    carry = s / 10;
  }
  std::reverse(r.begin(), r.end());
  return r;
}

std::uint32_t big_mod(const std::string& a, std::uint32_t p) {
  std::uint64_t r = 0;
  for (char c : a) r = (r * 10 + (c - '0')) % p;
  return std::uint32_t(r);
}

}  // namespace

TEST_CASE("prime field arithmetic: pinned examples") {
  Field F = Field::prime_field(5);
  CHECK(F.mul(3, 4) == 2);
  CHECK(F.inv(2) == 3);
  CHECK(F.add(4, 3) == 2);
  CHECK(F.sub(1, 3) == 3);
  CHECK(F.neg(0) == 0);
  CHECK(F.from_int(-7) == 3);
  CHECK(F.pow(2, 4) == 1);
  CHECK_THROWS_AS(F.inv(0), std::domain_error);
  CHECK_THROWS_AS(Field::prime_field(6), verification_error);
  CHECK_THROWS_AS(Field::prime_field(3), verification_error);
}

TEST_CASE("extension field F_25: fixed modulus and frobenius") {
  Field F = Field::extension(5, 2);
  CHECK(F.q == 25);
  // Deterministic modulus choice: X^2 + 2 is the first irreducible monic
  // quadratic in coefficient-code order over F_5.
  CHECK(F.modulus == Poly{2, 0, 1});

  felem xbar = 5;  // the class of X: digits (0, 1)
  CHECK(F.mul(xbar, xbar) == 3);  // X^2 = -2 = 3 mod (X^2 + 2)

  // frobenius(xbar) = -xbar, checked against a repeated-multiplication
  // oracle independent of the square-and-multiply path.
  felem naive = 1;
  for (int i = 0; i < 5; ++i) naive = F.mul(naive, xbar);
  CHECK(naive == F.neg(xbar));
  CHECK(F.frobenius(xbar) == F.neg(xbar));

  // Frobenius fixes exactly the prime subfield and is a ring morphism.
  for (felem a = 0; a < 25; ++a) {
    CHECK((F.frobenius(a) == a) == F.is_prime_subfield(a));
    for (felem b = 0; b < 25; ++b) {
      CHECK(F.frobenius(F.add(a, b)) == F.add(F.frobenius(a), F.frobenius(b)));
      CHECK(F.frobenius(F.mul(a, b)) == F.mul(F.frobenius(a), F.frobenius(b)));
    }
  }
}

TEST_CASE("field axioms on random triples") {
  for (std::uint32_t k : {1u, 2u}) {
    Field F = Field::extension(5, k);
    Prng rng(42);
    for (int n = 0; n < 10000; ++n) {
      felem a = rng.elem(F), b = rng.elem(F), c = rng.elem(F);
      CHECK(F.add(a, b) == F.add(b, a));
      CHECK(F.mul(a, b) == F.mul(b, a));
      CHECK(F.add(F.add(a, b), c) == F.add(a, F.add(b, c)));
      CHECK(F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c)));
      CHECK(F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c)));
      CHECK(F.add(a, F.neg(a)) == 0);
      if (a != 0) CHECK(F.mul(a, F.inv(a)) == 1);
    }
  }
}

TEST_CASE("larger extension field exercises the non-table path") {
  Field F = Field::extension(5, 5);  // q = 3125 > table limit
  CHECK(F.q == 3125);
  Prng rng(7);
  for (int n = 0; n < 2000; ++n) {
    felem a = rng.elem(F), b = rng.elem(F), c = rng.elem(F);
    CHECK(F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c)));
    if (a != 0) CHECK(F.mul(a, F.inv(a)) == 1);
  }
  // The canonical generator's multiplicative order divides q - 1 and the
  // frobenius orbit of xbar has size 5 (degree of the field).
  felem xbar = 5, t = xbar;
  int orbit = 1;
  while ((t = F.frobenius(t)) != xbar) ++orbit;
  CHECK(orbit == 5);
}

TEST_CASE("lucas binomial: pinned examples") {
  CHECK(lucas_binomial(6, 2, 5) == 0);   // C(6,2) = 15
  CHECK(lucas_binomial(24, 5, 5) == 4);  // C(24,5) = 42504 = 4 mod 5
  CHECK(lucas_binomial(0, 0, 5) == 1);
  for (std::uint64_t a : {0ull, 1ull, 7ull, 123ull, 100000ull})
    CHECK(lucas_binomial(a, 0, 5) == 1);
  CHECK(lucas_binomial(3, 5, 5) == 0);  // b > a
}

TEST_CASE("lucas binomial agrees with exact big-integer Pascal triangle") {
  const int N = 200;
  for (std::uint32_t p : {5u, 7u}) {
    std::vector<std::string> row{"1"};
    for (int a = 0; a <= N; ++a) {
      for (int b = 0; b <= a; ++b)
        CHECK(lucas_binomial(a, b, p) == big_mod(row[b], p));
      std::vector<std::string> next(a + 2, "1");
      for (int b = 1; b <= a; ++b) next[b] = big_add(row[b - 1], row[b]);
      row = std::move(next);
    }
  }
}

TEST_CASE("polynomial division, gcd, evaluation") {
  Field F = Field::prime_field(5);
  Poly a{1, 0, 3, 4, 2};  // 2X^4 + 4X^3 + 3X^2 + 1
  Poly b{2, 1, 1};        // X^2 + X + 2
  auto [quo, rem] = poly_divmod(F, a, b);
  CHECK(poly_add(F, poly_mul(F, quo, b), rem) == a);
  CHECK(poly_deg(rem) < poly_deg(b));

  // gcd((X-1)(X-2), (X-1)(X-3)) = X - 1, monic.
  Poly f = poly_mul(F, Poly{4, 1}, Poly{3, 1});
  Poly g = poly_mul(F, Poly{4, 1}, Poly{2, 1});
  CHECK(poly_gcd(F, f, g) == Poly{4, 1});

  CHECK(poly_eval(F, Poly{1, 2, 3}, 2) == F.from_int(1 + 4 + 12));
  CHECK_THROWS_AS(poly_divmod(F, a, Poly{}), verification_error);
}

TEST_CASE("irreducibility test over F_5") {
  Field F = Field::prime_field(5);
  CHECK(poly_is_irreducible(F, Poly{2, 0, 1}));        // X^2 + 2
  CHECK_FALSE(poly_is_irreducible(F, Poly{1, 0, 1}));  // X^2 + 1 = (X+2)(X+3)
  CHECK_FALSE(poly_is_irreducible(F, Poly{0, 1, 1}));  // X(X + 1)
  CHECK(poly_is_irreducible(F, Poly{1, 1, 0, 1}));     // X^3 + X + 1: no roots
  CHECK(poly_is_irreducible(F, Poly{3, 1}));           // linear
}

TEST_CASE("poly_roots: pinned examples over F_5") {
  Field F = Field::prime_field(5);
  CHECK(poly_roots(F, Poly{4, 0, 1}) == std::vector<felem>{1, 4});  // X^2 - 1
  CHECK(poly_roots(F, Poly{0, 4, 0, 0, 0, 1}) ==
        std::vector<felem>{0, 1, 2, 3, 4});                    // X^5 - X
  CHECK(poly_roots(F, Poly{2, 0, 1}).empty());                 // X^2 + 2
  CHECK_THROWS_AS(poly_roots(F, Poly{}), std::domain_error);

  // Multiplicity: (X-1)^2 (X-2).
  Poly f = poly_mul(F, poly_mul(F, Poly{4, 1}, Poly{4, 1}), Poly{3, 1});
  CHECK(poly_roots(F, f) == std::vector<felem>{1, 1, 2});
}

TEST_CASE("poly_roots agrees with exhaustive evaluation") {
  for (std::uint32_t k : {1u, 2u}) {
    Field F = Field::extension(5, k);
    Prng rng(11);
    for (int n = 0; n < 100; ++n) {
      int deg = 1 + int(rng.below(6));
      Poly f(deg + 1);
      for (auto& c : f) c = rng.elem(F);
      f[deg] = rng.nonzero_elem(F);
      auto roots = poly_roots(F, f, 99);
      CHECK(int(roots.size()) <= deg);
      for (felem r : roots) CHECK(poly_eval(F, f, r) == 0);
      // Distinct-root set matches brute force over the whole field.
      std::vector<felem> brute;
      for (felem x = 0; x < F.q; ++x)
        if (poly_eval(F, f, x) == 0) brute.push_back(x);
      std::vector<felem> dedup = roots;
      dedup.erase(std::unique(dedup.begin(), dedup.end()), dedup.end());
      CHECK(dedup == brute);
      // Multiplicities match repeated exact division.
      std::map<felem, int> mult;
      for (felem r : roots) ++mult[r];
      for (auto [r, m] : mult) {
        Poly rest = f;
        int cnt = 0;
        for (;;) {
          auto [q2, r2] = poly_divmod(F, rest, Poly{F.neg(r), 1});
          if (!r2.empty()) break;
          ++cnt;
          rest = q2;
        }
        CHECK(cnt == m);
      }
      // Seed independence of the sorted result.
      CHECK(poly_roots(F, f, 1) == roots);
      CHECK(poly_roots(F, f, 12345) == roots);
    }
  }
}

TEST_CASE("element string round trip") {
  Field F1 = Field::prime_field(5);
  for (felem a = 0; a < 5; ++a) CHECK(F1.parse_elem(F1.elem_str(a)) == a);
  CHECK(F1.elem_str(3) == "3");

  Field F2 = Field::extension(5, 2);
  for (felem a = 0; a < 25; ++a) CHECK(F2.parse_elem(F2.elem_str(a)) == a);
  CHECK(F2.elem_str(13) == "3,2");  // 13 = 3 + 2*5
  CHECK_THROWS_AS(F2.parse_elem("9,1"), verification_error);
  CHECK_THROWS_AS(F2.parse_elem("1"), verification_error);
}

TEST_CASE("polynomial derivative and factorization") {
  Field F = Field::prime_field(5);

  CHECK(poly_derivative(F, Poly{1, 3, 1}) == Poly{3, 2});     // X^2+3X+1 -> 2X+3
  CHECK(poly_derivative(F, Poly{2, 0, 0, 0, 0, 1}).empty());  // X^5+2 -> 0

  // Pinned: (X - 1)(X^2 + 2)^2, with X^2 + 2 irreducible.
  Poly sq{2, 0, 1};
  Poly f = poly_mul(F, Poly{4, 1}, poly_mul(F, sq, sq));
  auto fac = poly_factor(F, f);
  REQUIRE(fac.size() == 2);
  CHECK(fac[0] == std::pair<Poly, std::uint32_t>{Poly{4, 1}, 1});
  CHECK(fac[1] == std::pair<Poly, std::uint32_t>{sq, 2});

  // Pinned: X^5 + 1 = (X + 1)^5 exercises the p-th-power branch.
  auto pow5 = poly_factor(F, Poly{1, 0, 0, 0, 0, 1});
  REQUIRE(pow5.size() == 1);
  CHECK(pow5[0] == std::pair<Poly, std::uint32_t>{Poly{1, 1}, 5});

  // X^25 - X = product of all monic irreducibles of degree 1 and 2.
  Poly x25(26, 0);
  x25[1] = 4;
  x25[25] = 1;
  auto all12 = poly_factor(F, x25);
  CHECK(all12.size() == 15);  // 5 linear + 10 quadratic
  std::size_t linear = 0;
  for (const auto& [u, e] : all12) {
    CHECK(e == 1);
    if (poly_deg(u) == 1) ++linear;
  }
  CHECK(linear == 5);

  // Property: factors are irreducible, multiply back, seed-independent.
  for (std::uint32_t k : {1u, 2u}) {
    Field E = Field::extension(5, k);
    Prng rng(17 * k);
    for (int t = 0; t < 40; ++t) {
      Poly g(2 + rng.below(11), 0);
      for (auto& c : g) c = rng.elem(E);
      g = poly_trim(std::move(g));
      if (poly_deg(g) < 1) continue;
      auto fs = poly_factor(E, g);
      Poly prod{E.one()};
      for (const auto& [u, e] : fs) {
        CHECK(poly_is_irreducible(E, u));
        for (std::uint32_t i = 0; i < e; ++i) prod = poly_mul(E, prod, u);
      }
      CHECK(prod == poly_monic(E, g));
      CHECK(poly_factor(E, g, 999) == fs);
    }
  }

  CHECK_THROWS_AS(poly_factor(F, Poly{3}), std::domain_error);
  CHECK_THROWS_AS(poly_factor(F, Poly{}), std::domain_error);
}
