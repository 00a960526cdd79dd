#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mla {

// Thrown when a mathematical consistency check fails (construction-time
// validation, cross-checks between independent computation routes, ...).
// Distinct from std::domain_error, which signals a caller contract violation.
struct verification_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw verification_error(msg);
}

// Element of F_{p^k} as a canonical integer code: sum d_i * p^i of the
// little-endian coordinates d_i in the power basis of the modulus, so every
// valid code is < q = p^k and equality/ordering of codes is equality/ordering
// of elements.
using felem = std::uint32_t;

// Univariate polynomial, little-endian coefficients, normalized (no trailing
// zero coefficients); the empty vector is the zero polynomial.
using Poly = std::vector<felem>;

// F_{p^k} with p prime > 3 and k >= 1.  The modulus for k > 1 is chosen
// deterministically per (p, k): the monic irreducible of degree k whose
// coefficient code sum c_i * p^i is smallest (for p=5, k=2 this is X^2 + 2),
// so serialized data is portable between runs and machines.  Irreducibility
// is certified at construction by gcd(modulus, X^{p^i} - X) = const for all
// i <= k/2: any factor of degree d <= k/2 divides X^{p^d} - X, and a monic
// degree-k polynomial without factors of degree <= k/2 is irreducible.
struct Field {
  std::uint32_t p = 5;
  std::uint32_t k = 1;
  std::uint64_t q = 5;  // p^k
  Poly modulus;         // monic, degree k; empty when k == 1

  static Field prime_field(std::uint32_t p);
  static Field extension(std::uint32_t p, std::uint32_t k);

  bool operator==(const Field& o) const {
    return p == o.p && k == o.k && modulus == o.modulus;
  }

  felem zero() const { return 0; }
  felem one() const { return 1; }

  // Embeds an integer via its residue mod p (prime-subfield element).
  felem from_int(std::int64_t n) const {
    std::int64_t r = n % static_cast<std::int64_t>(p);
    if (r < 0) r += p;
    return static_cast<felem>(r);
  }

  felem add(felem a, felem b) const {
    if (k == 1) {
      felem s = a + b;
      return s >= p ? s - p : s;
    }
    if (!add_tab_.empty()) return add_tab_[a * q + b];
    return add_slow(a, b);
  }

  felem neg(felem a) const {
    if (k == 1) return a == 0 ? 0 : p - a;
    if (!neg_tab_.empty()) return neg_tab_[a];
    return neg_slow(a);
  }

  felem sub(felem a, felem b) const { return add(a, neg(b)); }

  felem mul(felem a, felem b) const {
    if (k == 1) return static_cast<felem>((std::uint64_t(a) * b) % p);
    if (!mul_tab_.empty()) return mul_tab_[a * q + b];
    return mul_slow(a, b);
  }

  // a != 0 (domain error on zero).
  felem inv(felem a) const {
    if (a == 0) throw std::domain_error("field inverse of zero");
    if (!inv_tab_.empty()) return inv_tab_[a];
    return pow(a, q - 2);
  }

  felem div(felem a, felem b) const { return mul(a, inv(b)); }

  felem pow(felem a, std::uint64_t e) const;

  felem frobenius(felem a) const { return pow(a, p); }

  bool is_prime_subfield(felem a) const { return a < p; }

  // k = 1: decimal residue.  k > 1: comma-joined little-endian digits.
  std::string elem_str(felem a) const;
  felem parse_elem(const std::string& s) const;

  // Little-endian base-p digits of a code (d must hold k entries).
  void decode(felem a, felem* d) const {
    for (std::uint32_t i = 0; i < k; ++i) {
      d[i] = a % p;
      a /= p;
    }
  }
  felem encode(const felem* d) const {
    felem a = 0;
    for (std::uint32_t i = k; i-- > 0;) a = a * p + d[i];
    return a;
  }

 private:
  felem add_slow(felem a, felem b) const;
  felem neg_slow(felem a) const;
  felem mul_slow(felem a, felem b) const;
  void build_tables();

  // Lookup tables, built for extension fields with q <= 1024; the prime-field
  // path never consults them.
  std::vector<felem> add_tab_, mul_tab_, neg_tab_, inv_tab_;
};

// C(a, b) mod p by Lucas' theorem: the product over base-p digits of
// C(a_i, b_i), zero as soon as some digit of b exceeds the digit of a.
felem lucas_binomial(std::uint64_t a, std::uint64_t b, std::uint32_t p);

// --- Polynomial helpers over a Field (coefficients are field codes) ---

int poly_deg(const Poly& f);  // -1 for the zero polynomial
Poly poly_trim(Poly f);
Poly poly_add(const Field& F, const Poly& a, const Poly& b);
Poly poly_sub(const Field& F, const Poly& a, const Poly& b);
Poly poly_scale(const Field& F, felem c, const Poly& a);
Poly poly_mul(const Field& F, const Poly& a, const Poly& b);
// b != 0; returns (quotient, remainder) with deg r < deg b.
std::pair<Poly, Poly> poly_divmod(const Field& F, const Poly& a, const Poly& b);
Poly poly_mod(const Field& F, const Poly& a, const Poly& b);
Poly poly_monic(const Field& F, const Poly& a);
Poly poly_gcd(const Field& F, Poly a, Poly b);  // monic, or zero if both zero
Poly poly_powmod(const Field& F, Poly base, std::uint64_t e, const Poly& mod);
felem poly_eval(const Field& F, const Poly& f, felem x);

// True iff f is monic of degree >= 1 and irreducible over F (prime field of F
// when F is an extension is NOT assumed: the test runs over F itself).
bool poly_is_irreducible(const Field& F, const Poly& f);

// All roots of f in F, with multiplicity, sorted ascending by element code.
// Found via gcd with X^q - X followed by seeded equal-degree splitting, so the
// result is deterministic given the seed.  f = 0 is a domain error.
std::vector<felem> poly_roots(const Field& F, const Poly& f,
                              std::uint64_t seed = 1);

Poly poly_derivative(const Field& F, const Poly& f);

// Full factorization of nonzero f of degree >= 1 into monic irreducibles with
// multiplicities, sorted by (degree, coefficient codes).  Distinct-degree
// splitting plus trace-map equal-degree splitting; p-th-power parts are
// handled by coefficient-wise p-th roots.  Deterministic given the seed.
std::vector<std::pair<Poly, std::uint32_t>> poly_factor(const Field& F, Poly f,
                                                        std::uint64_t seed = 1);

}  // namespace mla
