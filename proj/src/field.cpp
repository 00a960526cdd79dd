#include "mla/field.hpp"

#include <algorithm>

#include "mla/prng.hpp"

namespace mla {

namespace {

bool is_prime(std::uint32_t n) {
  if (n < 2) return false;
  for (std::uint32_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace

Field Field::prime_field(std::uint32_t p) {
  require(is_prime(p) && p > 3, "field characteristic must be a prime > 3");
  Field F;
  F.p = p;
  F.k = 1;
  F.q = p;
  return F;
}

Field Field::extension(std::uint32_t p, std::uint32_t k) {
  require(is_prime(p) && p > 3, "field characteristic must be a prime > 3");
  require(k >= 1, "extension degree must be >= 1");
  if (k == 1) return prime_field(p);

  Field F;
  F.p = p;
  F.k = k;
  F.q = 1;
  for (std::uint32_t i = 0; i < k; ++i) {
    require(F.q <= (std::uint64_t(1) << 31) / p, "field too large for element codes");
    F.q *= p;
  }

  // Scan monic degree-k polynomials in ascending coefficient-code order and
  // take the first irreducible one.
  Field Fp = prime_field(p);
  std::uint64_t code = 0;
  for (;; ++code) {
    require(code < F.q, "no irreducible modulus found (impossible)");
    Poly f(k + 1, 0);
    std::uint64_t c = code;
    for (std::uint32_t i = 0; i < k; ++i) {
      f[i] = static_cast<felem>(c % p);
      c /= p;
    }
    f[k] = 1;
    if (poly_is_irreducible(Fp, f)) {
      F.modulus = f;
      break;
    }
  }
  F.build_tables();
  return F;
}

void Field::build_tables() {
  if (q > 1024) return;
  const std::size_t n = static_cast<std::size_t>(q);
  neg_tab_.resize(n);
  for (std::size_t a = 0; a < n; ++a) neg_tab_[a] = neg_slow(static_cast<felem>(a));
  add_tab_.resize(n * n);
  mul_tab_.resize(n * n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      add_tab_[a * n + b] = add_slow(static_cast<felem>(a), static_cast<felem>(b));
      mul_tab_[a * n + b] = mul_slow(static_cast<felem>(a), static_cast<felem>(b));
    }
  inv_tab_.resize(n, 0);
  for (std::size_t a = 1; a < n; ++a) {
    for (std::size_t b = 1; b < n; ++b)
      if (mul_tab_[a * n + b] == 1) {
        inv_tab_[a] = static_cast<felem>(b);
        break;
      }
    require(inv_tab_[a] != 0, "field table construction: missing inverse");
  }
}

felem Field::add_slow(felem a, felem b) const {
  felem out = 0, pw = 1;
  for (std::uint32_t i = 0; i < k; ++i) {
    out += ((a % p) + (b % p)) % p * pw;
    a /= p;
    b /= p;
    pw *= p;
  }
  return out;
}

felem Field::neg_slow(felem a) const {
  felem out = 0, pw = 1;
  for (std::uint32_t i = 0; i < k; ++i) {
    felem d = a % p;
    out += (d == 0 ? 0 : p - d) * pw;
    a /= p;
    pw *= p;
  }
  return out;
}

felem Field::mul_slow(felem a, felem b) const {
  // Digit convolution followed by reduction modulo the (monic) modulus.
  std::vector<std::uint64_t> da(k), db(k), t(2 * k - 1, 0);
  for (std::uint32_t i = 0; i < k; ++i) {
    da[i] = a % p;
    a /= p;
    db[i] = b % p;
    b /= p;
  }
  for (std::uint32_t i = 0; i < k; ++i)
    for (std::uint32_t j = 0; j < k; ++j) t[i + j] += da[i] * db[j];
  for (auto& v : t) v %= p;
  for (std::uint32_t i = 2 * k - 2; i >= k; --i) {
    std::uint64_t c = t[i];
    if (c) {
      t[i] = 0;
      for (std::uint32_t j = 0; j < k; ++j)
        t[i - k + j] = (t[i - k + j] + c * (p - modulus[j])) % p;
    }
  }
  felem out = 0;
  for (std::uint32_t i = k; i-- > 0;) out = out * p + static_cast<felem>(t[i]);
  return out;
}

felem Field::pow(felem a, std::uint64_t e) const {
  felem r = 1;
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

std::string Field::elem_str(felem a) const {
  if (k == 1) return std::to_string(a);
  std::string s;
  for (std::uint32_t i = 0; i < k; ++i) {
    if (i) s += ',';
    s += std::to_string(a % p);
    a /= p;
  }
  return s;
}

felem Field::parse_elem(const std::string& s) const {
  std::vector<felem> digits;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    require(!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos,
            "bad field element string: " + s);
    digits.push_back(static_cast<felem>(std::stoul(tok)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  require(digits.size() == k, "field element string has wrong digit count: " + s);
  felem out = 0;
  for (std::uint32_t i = k; i-- > 0;) {
    require(digits[i] < p, "field element digit out of range: " + s);
    out = out * p + digits[i];
  }
  return out;
}

felem lucas_binomial(std::uint64_t a, std::uint64_t b, std::uint32_t p) {
  require(is_prime(p), "lucas_binomial needs a prime modulus");
  // Pascal's triangle mod p for digit binomials C(i, j), i, j < p.
  std::vector<std::uint32_t> pas(p * p, 0);
  for (std::uint32_t i = 0; i < p; ++i) {
    pas[i * p] = 1;
    for (std::uint32_t j = 1; j <= i; ++j)
      pas[i * p + j] = (pas[(i - 1) * p + j - 1] + (j <= i - 1 ? pas[(i - 1) * p + j] : 0)) % p;
  }
  std::uint64_t r = 1;
  while (a || b) {
    std::uint64_t ad = a % p, bd = b % p;
    if (bd > ad) return 0;
    r = (r * pas[ad * p + bd]) % p;
    a /= p;
    b /= p;
  }
  return static_cast<felem>(r);
}

int poly_deg(const Poly& f) { return static_cast<int>(f.size()) - 1; }

Poly poly_trim(Poly f) {
  while (!f.empty() && f.back() == 0) f.pop_back();
  return f;
}

Poly poly_add(const Field& F, const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = F.add(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  return poly_trim(std::move(r));
}

Poly poly_sub(const Field& F, const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = F.sub(i < a.size() ? a[i] : 0, i < b.size() ? b[i] : 0);
  return poly_trim(std::move(r));
}

Poly poly_scale(const Field& F, felem c, const Poly& a) {
  if (c == 0) return {};
  Poly r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = F.mul(c, a[i]);
  return poly_trim(std::move(r));
}

Poly poly_mul(const Field& F, const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j)
      r[i + j] = F.add(r[i + j], F.mul(a[i], b[j]));
  }
  return poly_trim(std::move(r));
}

std::pair<Poly, Poly> poly_divmod(const Field& F, const Poly& a, const Poly& b) {
  require(!b.empty(), "polynomial division by zero");
  Poly rem = a, quo;
  if (a.size() >= b.size()) quo.assign(a.size() - b.size() + 1, 0);
  felem lead_inv = F.inv(b.back());
  while (rem.size() >= b.size()) {
    felem c = F.mul(rem.back(), lead_inv);
    std::size_t shift = rem.size() - b.size();
    quo[shift] = c;
    for (std::size_t i = 0; i < b.size(); ++i)
      rem[shift + i] = F.sub(rem[shift + i], F.mul(c, b[i]));
    // The leading term cancels exactly, so the trim strictly shrinks rem.
    rem = poly_trim(std::move(rem));
  }
  return {poly_trim(std::move(quo)), std::move(rem)};
}

Poly poly_mod(const Field& F, const Poly& a, const Poly& b) {
  return poly_divmod(F, a, b).second;
}

Poly poly_monic(const Field& F, const Poly& a) {
  if (a.empty() || a.back() == 1) return a;
  return poly_scale(F, F.inv(a.back()), a);
}

Poly poly_gcd(const Field& F, Poly a, Poly b) {
  while (!b.empty()) {
    Poly r = poly_mod(F, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return poly_monic(F, a);
}

Poly poly_powmod(const Field& F, Poly base, std::uint64_t e, const Poly& mod) {
  require(poly_deg(mod) >= 1, "poly_powmod modulus must have degree >= 1");
  Poly r{1};
  base = poly_mod(F, base, mod);
  while (e) {
    if (e & 1) r = poly_mod(F, poly_mul(F, r, base), mod);
    base = poly_mod(F, poly_mul(F, base, base), mod);
    e >>= 1;
  }
  return r;
}

felem poly_eval(const Field& F, const Poly& f, felem x) {
  felem r = 0;
  for (std::size_t i = f.size(); i-- > 0;) r = F.add(F.mul(r, x), f[i]);
  return r;
}

bool poly_is_irreducible(const Field& F, const Poly& f) {
  int d = poly_deg(f);
  if (d < 1 || f.back() != 1) return false;
  if (d == 1) return true;
  // Any factor of degree e <= d/2 divides X^{q^e} - X.
  for (int i = 1; i <= d / 2; ++i) {
    std::uint64_t e = 1;
    for (int j = 0; j < i; ++j) e *= F.q;
    Poly xq = poly_powmod(F, Poly{0, 1}, e, f);
    Poly g = poly_gcd(F, f, poly_sub(F, xq, Poly{0, 1}));
    if (poly_deg(g) > 0) return false;
  }
  return true;
}

namespace {

// Splits a monic product of distinct linear factors into roots.
void split_linear(const Field& F, const Poly& g, Prng& rng, std::vector<felem>& out) {
  int d = poly_deg(g);
  if (d <= 0) return;
  if (d == 1) {
    out.push_back(F.neg(g[0]));  // monic: root of X + c is -c
    return;
  }
  for (;;) {
    // gcd(g, (X + a)^{(q-1)/2} - 1) captures exactly the roots r with
    // r + a a nonzero square; random a separates some pair eventually.
    felem a = rng.elem(F);
    Poly h = poly_powmod(F, Poly{a, 1}, (F.q - 1) / 2, g);
    h = poly_sub(F, h, Poly{1});
    Poly g1 = poly_gcd(F, g, h);
    int d1 = poly_deg(g1);
    if (d1 > 0 && d1 < d) {
      split_linear(F, g1, rng, out);
      split_linear(F, poly_divmod(F, g, g1).first, rng, out);
      return;
    }
  }
}

}  // namespace

std::vector<felem> poly_roots(const Field& F, const Poly& f, std::uint64_t seed) {
  if (f.empty()) throw std::domain_error("poly_roots of the zero polynomial");
  std::vector<felem> roots;
  if (poly_deg(f) >= 1) {
    // Distinct roots in F = roots of gcd(f, X^q - X).
    Poly xq = poly_powmod(F, Poly{0, 1}, F.q, f);
    Poly g = poly_gcd(F, f, poly_sub(F, xq, Poly{0, 1}));
    Prng rng(seed);
    split_linear(F, g, rng, roots);
  }
  // Multiplicities by repeated exact division.
  std::vector<felem> out;
  for (felem r : roots) {
    Poly rest = f;
    Poly lin{F.neg(r), 1};
    for (;;) {
      auto [quo, rem] = poly_divmod(F, rest, lin);
      if (!rem.empty()) break;
      out.push_back(r);
      rest = std::move(quo);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Poly poly_derivative(const Field& F, const Poly& f) {
  Poly d;
  for (std::size_t i = 1; i < f.size(); ++i)
    d.push_back(F.mul(F.from_int(std::int64_t(i % F.p)), f[i]));
  return poly_trim(std::move(d));
}

namespace {

// Splits a squarefree monic h all of whose irreducible factors have degree d.
// Modulo each factor the trace map T(r) = r + r^q + ... + r^{q^{d-1}} is a
// constant in F, so gcd with T(r) (constant 0) or T(r)^{(q-1)/2} - 1
// (constant a nonzero square) separates factors; no exponent beyond q is
// ever formed, keeping everything in 64 bits.
void split_equal_degree(const Field& F, const Poly& h, int d, Prng& rng,
                        std::vector<Poly>& out) {
  int dh = poly_deg(h);
  if (dh <= 0) return;
  if (dh == d) {
    out.push_back(h);
    return;
  }
  for (int attempt = 0; attempt < 256; ++attempt) {
    Poly r(std::size_t(dh), 0);
    for (auto& c : r) c = rng.elem(F);
    r = poly_trim(std::move(r));
    if (poly_deg(r) < 1) continue;
    Poly t = poly_mod(F, r, h);
    Poly acc = t;
    for (int i = 1; i < d; ++i) {
      t = poly_powmod(F, t, F.q, h);
      acc = poly_mod(F, poly_add(F, acc, t), h);
    }
    Poly g = poly_gcd(F, h, acc);
    int dg = poly_deg(g);
    if (!(dg > 0 && dg < dh)) {
      Poly s = poly_sub(F, poly_powmod(F, acc, (F.q - 1) / 2, h), Poly{1});
      g = poly_gcd(F, h, s);
      dg = poly_deg(g);
    }
    if (dg > 0 && dg < dh) {
      split_equal_degree(F, g, d, rng, out);
      split_equal_degree(F, poly_monic(F, poly_divmod(F, h, g).first), d, rng, out);
      return;
    }
  }
  throw verification_error("equal-degree splitting failed to separate factors");
}

}  // namespace

std::vector<std::pair<Poly, std::uint32_t>> poly_factor(const Field& F, Poly f,
                                                        std::uint64_t seed) {
  if (poly_deg(f) < 1) throw std::domain_error("poly_factor needs degree >= 1");
  f = poly_monic(F, f);
  Prng rng(seed);
  std::vector<std::pair<Poly, std::uint32_t>> out;
  std::uint32_t scale = 1;
  while (poly_deg(f) >= 1) {
    Poly fp = poly_derivative(F, f);
    if (fp.empty()) {
      // f = g(X^p): coefficient-wise p-th roots invert the Frobenius.
      Poly g;
      for (std::size_t i = 0; i < f.size(); i += F.p)
        g.push_back(F.pow(f[i], F.q / F.p));
      f = std::move(g);
      scale *= F.p;
      continue;
    }
    // Squarefree part, then distinct-degree then equal-degree splitting.
    Poly w = poly_monic(F, poly_divmod(F, f, poly_gcd(F, f, fp)).first);
    std::vector<Poly> irreducibles;
    Poly xq{0, 1};
    for (int d = 1; poly_deg(w) > 0; ++d) {
      if (2 * d > poly_deg(w)) {
        irreducibles.push_back(w);
        break;
      }
      xq = poly_powmod(F, xq, F.q, w);  // X^{q^d} mod w
      Poly h = poly_gcd(F, w, poly_sub(F, xq, Poly{0, 1}));
      if (poly_deg(h) > 0) {
        split_equal_degree(F, h, d, rng, irreducibles);
        w = poly_monic(F, poly_divmod(F, w, h).first);
        xq = poly_mod(F, xq, w);
      }
    }
    // Full multiplicity of each factor by trial division; whatever remains
    // has only multiplicities divisible by p and feeds the p-th-root branch.
    for (const Poly& u : irreducibles) {
      std::uint32_t e = 0;
      for (;;) {
        auto [quo, rem] = poly_divmod(F, f, u);
        if (!rem.empty()) break;
        f = std::move(quo);
        ++e;
      }
      out.push_back({u, e * scale});
    }
    f = poly_monic(F, f);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
    return a.first < b.first;
  });
  return out;
}

}  // namespace mla
