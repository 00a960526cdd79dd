#include "mla/divided_power.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <utility>

namespace mla {

namespace {

void check(bool ok, const std::string& msg) {
  if (!ok) throw std::domain_error(msg);
}

bool same_ambient(const DPAmbient& a, const DPAmbient& b) {
  return a.F.p == b.F.p && a.F.k == b.F.k && a.heights == b.heights;
}

void check_ambient(const DPElement& f, const DPElement& g, const char* who) {
  check(f.amb && g.amb, std::string(who) + ": element without ambient");
  if (f.amb == g.amb) return;
  check(same_ambient(*f.amb, *g.amb), std::string(who) + ": ambient mismatch");
}

void check_member(const DPAmbient& A, const DPElement& f, const char* who) {
  check(f.amb && same_ambient(A, *f.amb), std::string(who) + ": ambient mismatch");
}

// dst[r] += c, erasing the entry when it cancels.
void add_term(const Field& F, std::map<std::uint32_t, felem>& dst,
              std::uint32_t r, felem c) {
  if (c == 0) return;
  auto it = dst.find(r);
  if (it == dst.end()) {
    dst.emplace(r, c);
    return;
  }
  it->second = F.add(it->second, c);
  if (it->second == 0) dst.erase(it);
}

// Base-p valuation and unit of n!: val(n) = n/p + val(n/p),
// unit(n) = (-1)^{n/p} (n mod p)! unit(n/p)  (Wilson-block recursion).
struct FactVU {
  std::int64_t val;
  felem unit;
};

FactVU factorial_vu(const Field& F, std::uint64_t n) {
  std::int64_t val = 0;
  felem unit = 1;
  while (n > 0) {
    std::uint64_t quo = n / F.p, rem = n % F.p;
    val += std::int64_t(quo);
    felem blk = 1;
    for (std::uint64_t t = 2; t <= rem; ++t)
      blk = F.mul(blk, F.from_int(std::int64_t(t)));
    unit = F.mul(unit, blk);
    if (quo % 2 == 1) unit = F.neg(unit);
    n = quo;
  }
  return {val, unit};
}

// C(a+b, a) mod p; zero exactly when adding a and b in base p carries.
felem binom_mod_p(const Field& F, std::uint64_t a, std::uint64_t b) {
  FactVU top = factorial_vu(F, a + b);
  FactVU da = factorial_vu(F, a), db = factorial_vu(F, b);
  if (top.val != da.val + db.val) return 0;
  return F.div(top.unit, F.mul(da.unit, db.unit));
}

// "x1^(a)·x2^(b)" with zero exponents omitted; empty for the constant.
std::string monomial_text(const DPAmbient& A, std::uint32_t r) {
  std::string out;
  for (std::uint32_t i = 0; i < A.m; ++i) {
    std::uint32_t e = A.exps[r][i];
    if (e == 0) continue;
    if (!out.empty()) out += "·";
    out += "x" + std::to_string(i + 1) + "^(" + std::to_string(e) + ")";
  }
  return out;
}

DPElement column_element(DPAmbientPtr amb, const DMat& M, std::uint32_t j) {
  DPElement out{std::move(amb), {}};
  for (std::uint32_t r = 0; r < M.rows; ++r)
    if (M.at(r, j) != 0) out.terms.emplace(r, M.at(r, j));
  return out;
}

// Coordinates of a special derivation in the layout rank * m + direction.
Vec w_vectorize(const WElement& D) {
  const DPAmbient& A = *D.comp.at(0).amb;
  Vec v(std::size_t(A.m) * A.size, 0);
  for (std::uint32_t i = 0; i < A.m; ++i)
    for (auto [r, c] : D.comp[i].terms) v[std::size_t(r) * A.m + i] = c;
  return v;
}

// Components of the filtration L_(d) = span{e_k : deg_k >= d}, descending,
// padded with the zero space one step past the top degree.
Filtration grading_filtration(const LieAlgebra& L) {
  require(L.grading.has_value(), "grading_filtration: algebra is not graded");
  const std::vector<int>& deg = *L.grading;
  Filtration f;
  f.lo = *std::min_element(deg.begin(), deg.end());
  f.hi = *std::max_element(deg.begin(), deg.end()) + 1;
  for (int d = f.lo; d <= f.hi; ++d) {
    std::vector<Vec> rows;
    for (std::uint32_t k = 0; k < L.dim; ++k)
      if (deg[k] >= d) rows.push_back(L.basis_vec(k));
    f.spaces.push_back(Subspace::from_rows(L.F, L.dim, rows));
  }
  return f;
}

}  // namespace

bool DPAmbient::in_bounds(const std::vector<std::uint32_t>& a) const {
  if (a.size() != m) return false;
  for (std::uint32_t i = 0; i < m; ++i)
    if (a[i] >= bounds[i]) return false;
  return true;
}

std::uint32_t DPAmbient::rank(const std::vector<std::uint32_t>& a) const {
  require(in_bounds(a), "DPAmbient::rank: exponent out of bounds");
  std::uint32_t code = 0;
  for (std::uint32_t i = 0; i < m; ++i) code += a[i] * stride[i];
  return rank_by_code[code];
}

DPAmbientPtr dp_ambient(const Field& F, std::vector<std::uint32_t> heights) {
  check(!heights.empty(), "dp_ambient: no variables");
  auto amb = std::make_shared<DPAmbient>();
  amb->F = F;
  amb->m = std::uint32_t(heights.size());
  amb->heights = std::move(heights);
  std::uint64_t total = 1;
  for (std::uint32_t h : amb->heights) {
    check(h >= 1, "dp_ambient: heights must be positive");
    std::uint64_t b = 1;
    for (std::uint32_t t = 0; t < h; ++t) b *= F.p;
    total *= b;
    check(total <= (1u << 22), "dp_ambient: monomial basis too large");
    amb->bounds.push_back(std::uint32_t(b));
  }
  amb->size = std::uint32_t(total);
  amb->stride.resize(amb->m);
  std::uint32_t s = 1;
  for (std::uint32_t i = 0; i < amb->m; ++i) {
    amb->stride[i] = s;
    s *= amb->bounds[i];
  }
  std::vector<std::vector<std::uint32_t>> decoded(amb->size);
  for (std::uint32_t code = 0; code < amb->size; ++code) {
    decoded[code].resize(amb->m);
    for (std::uint32_t i = 0; i < amb->m; ++i)
      decoded[code][i] = (code / amb->stride[i]) % amb->bounds[i];
  }
  std::vector<std::uint32_t> order(amb->size);
  std::iota(order.begin(), order.end(), 0u);
  auto total_deg = [&](std::uint32_t code) {
    return std::accumulate(decoded[code].begin(), decoded[code].end(), 0u);
  };
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    std::uint32_t da = total_deg(a), db = total_deg(b);
    if (da != db) return da < db;
    return decoded[a] < decoded[b];
  });
  amb->exps.resize(amb->size);
  amb->degree.resize(amb->size);
  amb->rank_by_code.resize(amb->size);
  for (std::uint32_t r = 0; r < amb->size; ++r) {
    amb->exps[r] = decoded[order[r]];
    amb->degree[r] = total_deg(order[r]);
    amb->rank_by_code[order[r]] = r;
  }
  return amb;
}

DPElement dp_zero(DPAmbientPtr amb) {
  check(bool(amb), "dp_zero: null ambient");
  return DPElement{std::move(amb), {}};
}

DPElement dp_one(DPAmbientPtr amb) {
  check(bool(amb), "dp_one: null ambient");
  return DPElement{std::move(amb), {{0u, felem(1)}}};
}

DPElement dp_monomial(DPAmbientPtr amb, const std::vector<std::uint32_t>& a,
                      felem c) {
  check(bool(amb), "dp_monomial: null ambient");
  check(amb->in_bounds(a), "dp_monomial: exponent out of bounds");
  DPElement out{std::move(amb), {}};
  if (c != 0) out.terms.emplace(out.amb->rank(a), c);
  return out;
}

DPElement dp_var(DPAmbientPtr amb, std::uint32_t i) {
  check(bool(amb) && i < amb->m, "dp_var: no such variable");
  std::vector<std::uint32_t> a(amb->m, 0);
  a[i] = 1;
  return dp_monomial(std::move(amb), a);
}

felem dp_coeff(const DPElement& f, const std::vector<std::uint32_t>& a) {
  check(bool(f.amb), "dp_coeff: element without ambient");
  check(f.amb->in_bounds(a), "dp_coeff: exponent out of bounds");
  auto it = f.terms.find(f.amb->rank(a));
  return it == f.terms.end() ? 0 : it->second;
}

DPElement dp_add(const DPElement& f, const DPElement& g) {
  check_ambient(f, g, "dp_add");
  DPElement out = f;
  for (auto [r, c] : g.terms) add_term(f.amb->F, out.terms, r, c);
  return out;
}

DPElement dp_sub(const DPElement& f, const DPElement& g) {
  check_ambient(f, g, "dp_sub");
  DPElement out = f;
  for (auto [r, c] : g.terms) add_term(f.amb->F, out.terms, r, f.amb->F.neg(c));
  return out;
}

DPElement dp_scale(felem c, const DPElement& f) {
  check(bool(f.amb), "dp_scale: element without ambient");
  DPElement out{f.amb, {}};
  if (c == 0) return out;
  for (auto [r, v] : f.terms) out.terms.emplace(r, f.amb->F.mul(c, v));
  return out;
}

DPElement dp_mul(const DPElement& f, const DPElement& g) {
  check_ambient(f, g, "dp_mul");
  const DPAmbient& A = *f.amb;
  const Field& F = A.F;
  DPElement out{f.amb, {}};
  std::vector<std::uint32_t> sum(A.m);
  for (auto [ra, ca] : f.terms)
    for (auto [rb, cb] : g.terms) {
      const auto& a = A.exps[ra];
      const auto& b = A.exps[rb];
      bool inside = true;
      felem coeff = F.mul(ca, cb);
      for (std::uint32_t i = 0; i < A.m; ++i) {
        sum[i] = a[i] + b[i];
        if (sum[i] >= A.bounds[i]) {
          // the binomial carries in base p, so the coefficient is zero anyway
          inside = false;
          break;
        }
        coeff = F.mul(coeff, binom_mod_p(F, a[i], b[i]));
      }
      if (inside) add_term(F, out.terms, A.rank(sum), coeff);
    }
  return out;
}

DPElement dp_divided_power(const DPElement& f, std::uint32_t k) {
  check(bool(f.amb), "dp_divided_power: element without ambient");
  check(f.terms.count(0) == 0, "dp_divided_power: nonzero constant term");
  const DPAmbient& A = *f.amb;
  const Field& F = A.F;
  // acc[j] = gamma_j of the terms folded so far
  std::vector<DPElement> acc(k + 1, dp_zero(f.amb));
  acc[0] = dp_one(f.amb);
  std::vector<DPElement> tj(k + 1, dp_zero(f.amb));
  for (auto [rank0, c] : f.terms) {
    const auto& a = A.exps[rank0];
    // gamma_j(c x^(a)) = c^j [(ja)!/((a!)^j j!)] x^(ja), truncated
    tj[0] = dp_one(f.amb);
    felem cpow = 1;
    std::vector<std::uint32_t> ja(A.m);
    for (std::uint32_t j = 1; j <= k; ++j) {
      tj[j] = dp_zero(f.amb);
      cpow = F.mul(cpow, c);
      bool inside = true;
      for (std::uint32_t i = 0; i < A.m; ++i) {
        ja[i] = j * a[i];
        if (ja[i] >= A.bounds[i]) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      FactVU jf = factorial_vu(F, j);
      std::int64_t val = -jf.val;
      felem unit = F.inv(jf.unit);
      for (std::uint32_t i = 0; i < A.m; ++i) {
        FactVU top = factorial_vu(F, ja[i]);
        FactVU bot = factorial_vu(F, a[i]);
        val += top.val - std::int64_t(j) * bot.val;
        unit = F.mul(unit, F.div(top.unit, F.pow(bot.unit, j)));
      }
      require(val >= 0, "dp_divided_power: negative factorial valuation");
      if (val > 0) continue;  // coefficient divisible by p
      tj[j].terms.emplace(A.rank(ja), F.mul(cpow, unit));
    }
    // fold: gamma_j(t + rest) = sum_i gamma_i(t) gamma_{j-i}(rest)
    std::vector<DPElement> nxt(k + 1, dp_zero(f.amb));
    for (std::uint32_t j = 0; j <= k; ++j)
      for (std::uint32_t i = 0; i <= j; ++i) {
        if (tj[i].is_zero() || acc[j - i].is_zero()) continue;
        nxt[j] = dp_add(nxt[j], dp_mul(tj[i], acc[j - i]));
      }
    acc = std::move(nxt);
  }
  return acc[k];
}

DPElement dp_partial(const DPElement& f, std::uint32_t i) {
  check(bool(f.amb), "dp_partial: element without ambient");
  check(i < f.amb->m, "dp_partial: no such variable");
  const DPAmbient& A = *f.amb;
  DPElement out{f.amb, {}};
  std::vector<std::uint32_t> b(A.m);
  for (auto [r, c] : f.terms) {
    b = A.exps[r];
    if (b[i] == 0) continue;
    --b[i];
    out.terms.emplace(A.rank(b), c);
  }
  return out;
}

DPElement dp_inverse(const DPElement& f) {
  check(bool(f.amb), "dp_inverse: element without ambient");
  const Field& F = f.amb->F;
  felem c0 = 0;
  if (auto it = f.terms.find(0); it != f.terms.end()) c0 = it->second;
  check(c0 != 0, "dp_inverse: element has zero constant term");
  DPElement n = dp_scale(F.inv(c0), f);
  n.terms.erase(0);  // nilpotent part of f / f(0)
  DPElement acc = dp_one(f.amb);
  DPElement pw = dp_one(f.amb);
  felem sign = 1;
  for (std::uint32_t j = 1;; ++j) {
    require(j < 256, "dp_inverse: series failed to terminate");
    pw = dp_mul(pw, n);
    if (pw.is_zero()) break;
    sign = F.neg(sign);
    acc = dp_add(acc, dp_scale(sign, pw));
  }
  DPElement inv = dp_scale(F.inv(c0), acc);
  require(dp_mul(f, inv) == dp_one(f.amb), "dp_inverse: product check failed");
  return inv;
}

std::string dp_to_text(const DPElement& f) {
  check(bool(f.amb), "dp_to_text: element without ambient");
  if (f.terms.empty()) return "0";
  std::string out;
  for (auto [r, c] : f.terms) {
    if (!out.empty()) out += " + ";
    out += f.amb->F.elem_str(c);
    std::string mono = monomial_text(*f.amb, r);
    if (!mono.empty()) out += "·" + mono;
  }
  return out;
}

bool WElement::is_zero() const {
  for (const DPElement& c : comp)
    if (!c.is_zero()) return false;
  return true;
}

bool WElement::operator==(const WElement& o) const {
  if (comp.size() != o.comp.size()) return false;
  for (std::size_t i = 0; i < comp.size(); ++i)
    if (!(comp[i] == o.comp[i])) return false;
  return true;
}

WElement w_zero(DPAmbientPtr amb) {
  check(bool(amb), "w_zero: null ambient");
  WElement out;
  out.comp.assign(amb->m, dp_zero(amb));
  return out;
}

static void check_w(const WElement& D, const char* who) {
  check(!D.comp.empty() && bool(D.comp[0].amb), std::string(who) + ": empty derivation");
  check(D.comp.size() == D.comp[0].amb->m, std::string(who) + ": wrong component count");
}

WElement w_add(const WElement& D, const WElement& E) {
  check_w(D, "w_add");
  check_w(E, "w_add");
  WElement out;
  for (std::size_t i = 0; i < D.comp.size(); ++i)
    out.comp.push_back(dp_add(D.comp[i], E.comp[i]));
  return out;
}

WElement w_sub(const WElement& D, const WElement& E) {
  check_w(D, "w_sub");
  check_w(E, "w_sub");
  WElement out;
  for (std::size_t i = 0; i < D.comp.size(); ++i)
    out.comp.push_back(dp_sub(D.comp[i], E.comp[i]));
  return out;
}

WElement w_scale(felem c, const WElement& D) {
  check_w(D, "w_scale");
  WElement out;
  for (const DPElement& f : D.comp) out.comp.push_back(dp_scale(c, f));
  return out;
}

DPElement w_apply(const WElement& D, const DPElement& f) {
  check_w(D, "w_apply");
  DPElement out = dp_zero(f.amb);
  for (std::size_t i = 0; i < D.comp.size(); ++i)
    out = dp_add(out, dp_mul(D.comp[i], dp_partial(f, std::uint32_t(i))));
  return out;
}

WElement w_bracket(const WElement& D, const WElement& E) {
  check_w(D, "w_bracket");
  check_w(E, "w_bracket");
  WElement out;
  for (std::size_t j = 0; j < D.comp.size(); ++j)
    out.comp.push_back(dp_sub(w_apply(D, E.comp[j]), w_apply(E, D.comp[j])));
  return out;
}

WElement d_h(const DPElement& f) {
  check(bool(f.amb), "d_h: element without ambient");
  check(f.amb->m == 2, "d_h: two variables required");
  WElement out;
  out.comp.push_back(dp_scale(f.amb->F.neg(1), dp_partial(f, 1)));
  out.comp.push_back(dp_partial(f, 0));
  return out;
}

Vec WittAlgebra::coords(const WElement& D) const {
  check_w(D, "WittAlgebra::coords");
  check_member(*amb, D.comp[0], "WittAlgebra::coords");
  return w_vectorize(D);
}

WElement WittAlgebra::element(const Vec& v) const {
  require(v.size() == std::size_t(amb->m) * amb->size,
          "WittAlgebra::element: length mismatch");
  WElement out = w_zero(amb);
  for (std::uint32_t r = 0; r < amb->size; ++r)
    for (std::uint32_t i = 0; i < amb->m; ++i) {
      felem c = v[std::size_t(r) * amb->m + i];
      if (c != 0) out.comp[i].terms.emplace(r, c);
    }
  return out;
}

WittAlgebra witt(const Field& F, std::vector<std::uint32_t> heights) {
  WittAlgebra W;
  W.amb = dp_ambient(F, std::move(heights));
  const DPAmbient& A = *W.amb;
  const std::uint32_t dim = A.m * A.size;
  LieBuilder b(F, dim);
  std::vector<int> deg(dim);
  for (std::uint32_t r = 0; r < A.size; ++r)
    for (std::uint32_t i = 0; i < A.m; ++i) {
      WElement e = w_zero(W.amb);
      e.comp[i] = dp_monomial(W.amb, A.exps[r]);
      W.basis.push_back(std::move(e));
      std::string mono = monomial_text(A, r);
      b.label(r * A.m + i,
              mono.empty() ? "d" + std::to_string(i + 1)
                           : mono + "·d" + std::to_string(i + 1));
      deg[std::size_t(r) * A.m + i] = int(A.degree[r]) - 1;
    }
  for (std::uint32_t i = 0; i < dim; ++i)
    for (std::uint32_t j = i + 1; j < dim; ++j) {
      WElement br = w_bracket(W.basis[i], W.basis[j]);
      for (std::uint32_t d = 0; d < A.m; ++d)
        for (auto [r, c] : br.comp[d].terms) b.add(i, j, r * A.m + d, c);
    }
  b.set_grading(std::move(deg));
  W.algebra = b.build();
  return W;
}

Vec HamiltonianCast::s_coords(const WElement& D) const {
  auto c = s_ech->express(w.coords(D));
  check(c.has_value(), "hamiltonian_cast: derivation outside s");
  return *c;
}

Vec HamiltonianCast::g_coords(const WElement& D) const {
  auto c = g_ech->express(w.coords(D));
  check(c.has_value(), "hamiltonian_cast: derivation outside g");
  return *c;
}

Vec HamiltonianCast::sp_element(const WElement& in_s, felem c) const {
  Vec v = s_coords(in_s);
  v.resize(d1p_sp.size(), 0);
  vec_axpy(s.F, v, c, d1p_sp);
  return v;
}

Vec HamiltonianCast::gp_element(const WElement& in_g, felem c) const {
  Vec v = g_coords(in_g);
  v.resize(d1p_gp.size(), 0);
  vec_axpy(g.F, v, c, d1p_gp);
  return v;
}

HamiltonianCast hamiltonian_cast(const Field& F) {
  check(F.p >= 3, "hamiltonian_cast: odd characteristic required");
  HamiltonianCast H;
  H.w = witt(F, {2, 1});
  H.amb = H.w.amb;
  const DPAmbient& A = *H.amb;
  const std::uint32_t M = A.size;        // p^3 monomials
  const std::uint32_t q = A.bounds[0];   // p^2
  const std::uint32_t pb = A.bounds[1];  // p
  const std::vector<std::uint32_t> top{q - 1, pb - 1};
  const std::uint32_t top_rank = A.rank(top);

  // interior monomial basis of s and the three outer directions of g
  std::vector<std::string> s_labels, g_labels;
  std::vector<int> s_deg, g_deg;
  for (std::uint32_t r = 1; r < M; ++r) {
    if (r == top_rank) continue;
    H.s_basis.push_back(d_h(dp_monomial(H.amb, A.exps[r])));
    s_labels.push_back("DH(" + monomial_text(A, r) + ")");
    s_deg.push_back(int(A.degree[r]) - 2);
  }
  WElement v1 = w_zero(H.amb);
  v1.comp[1] = dp_monomial(H.amb, {q - 1, 0});
  WElement v2 = w_zero(H.amb);
  v2.comp[0] = dp_monomial(H.amb, {0, pb - 1}, F.neg(1));
  WElement v3 = d_h(dp_monomial(H.amb, top));
  H.g_basis = H.s_basis;
  H.g_basis.push_back(v1);
  H.g_basis.push_back(v2);
  H.g_basis.push_back(v3);
  g_labels = s_labels;
  g_labels.push_back("DH(x1^(" + std::to_string(q) + "))");
  g_labels.push_back("DH(x2^(" + std::to_string(pb) + "))");
  g_labels.push_back("DH(" + monomial_text(A, top_rank) + ")");
  g_deg = s_deg;
  g_deg.push_back(int(q) - 2);
  g_deg.push_back(int(pb) - 2);
  g_deg.push_back(int(A.degree[top_rank]) - 2);
  const std::uint32_t ns = std::uint32_t(H.s_basis.size());  // p^3 - 2
  const std::uint32_t ng = ns + 3;

  // s is pinned down as the second derived subalgebra of the span of all
  // Hamiltonian derivations together with v1 and v2; the interior monomial
  // basis must land inside that output.
  {
    std::vector<Vec> rows;
    for (std::uint32_t r = 0; r < M; ++r)
      rows.push_back(H.w.coords(d_h(dp_monomial(H.amb, A.exps[r]))));
    rows.push_back(H.w.coords(v1));
    rows.push_back(H.w.coords(v2));
    Subspace g_sub = Subspace::from_rows(F, 2 * M, rows);
    require(g_sub.dim() == M + 1,
            "hamiltonian_cast: Hamiltonian span has unexpected dimension");
    std::vector<Subspace> chain = series(H.w.algebra, g_sub, SeriesKind::derived);
    require(chain.size() >= 3, "hamiltonian_cast: derived series stabilizes early");
    const Subspace& s_sub = chain[2];
    require(s_sub.dim() == M - 2,
            "hamiltonian_cast: second derived subalgebra has unexpected dimension");
    for (const WElement& e : H.s_basis)
      require(s_sub.contains(F, H.w.coords(e)),
              "hamiltonian_cast: monomial basis escapes the second derived subalgebra");
  }

  // coordinate solvers over the chosen bases
  auto seed = [&](const std::vector<WElement>& basis) {
    auto e = std::make_shared<Echelon>(F, 2 * M, std::uint32_t(basis.size()));
    for (std::uint32_t k = 0; k < basis.size(); ++k) {
      Vec row = H.w.coords(basis[k]);
      row.resize(std::size_t(2) * M + basis.size(), 0);
      row[std::size_t(2) * M + k] = 1;
      require(e->insert(std::move(row)), "hamiltonian_cast: basis is dependent");
    }
    return e;
  };
  H.s_ech = seed(H.s_basis);
  H.g_ech = seed(H.g_basis);

  // abstract copies with structure constants re-expressed over those bases
  auto build_abstract = [&](const std::vector<WElement>& basis,
                            const std::shared_ptr<const Echelon>& ech,
                            const std::vector<std::string>& labels,
                            std::vector<int> deg, const char* who) {
    const std::uint32_t n = std::uint32_t(basis.size());
    LieBuilder b(F, n);
    for (std::uint32_t k = 0; k < n; ++k) b.label(k, labels[k]);
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = i + 1; j < n; ++j) {
        WElement br = w_bracket(basis[i], basis[j]);
        if (br.is_zero()) continue;
        auto c = ech->express(w_vectorize(br));
        require(c.has_value(),
                std::string(who) + " is not closed under the bracket");
        for (std::uint32_t k = 0; k < n; ++k)
          if ((*c)[k] != 0) b.add(i, j, k, (*c)[k]);
      }
    b.set_grading(std::move(deg));
    return b.build();
  };
  H.s = build_abstract(H.s_basis, H.s_ech, s_labels, s_deg, "hamiltonian_cast: s");
  H.g = build_abstract(H.g_basis, H.g_ech, g_labels, g_deg, "hamiltonian_cast: g");

  // embeddings (each bracket-checked)
  {
    DMat inc(ng, ns);
    for (std::uint32_t k = 0; k < ns; ++k) inc.at(k, k) = 1;
    H.s_to_g = make_morphism(H.s, H.g, std::move(inc));
    require(H.s_to_g.verified, "hamiltonian_cast: s does not embed in g");
  }
  auto into_w = [&](const LieAlgebra& L, const std::vector<WElement>& basis) {
    DMat mat(2 * M, std::uint32_t(basis.size()));
    for (std::uint32_t k = 0; k < basis.size(); ++k) {
      Vec col = H.w.coords(basis[k]);
      for (std::uint32_t r = 0; r < 2 * M; ++r) mat.at(r, k) = col[r];
    }
    Morphism mor = make_morphism(L, H.w.algebra, std::move(mat));
    require(mor.verified, "hamiltonian_cast: derivation meanings do not match");
    return mor;
  };
  H.s_to_w = into_w(H.s, H.s_basis);
  H.g_to_w = into_w(H.g, H.g_basis);

  // restricted closures inside gl(s): adjoint images for s, bracket action
  // on s for the three outer directions of g
  std::vector<DMat> acts;
  for (std::uint32_t k = 0; k < ns; ++k) acts.push_back(H.s.ad_basis(k));
  H.s_p = p_envelope(H.s, acts);
  require(H.s_p.algebra.dim == M - 1,
          "hamiltonian_cast: restricted closure of s has unexpected dimension");
  for (const WElement& v : {v1, v2, v3}) {
    DMat mat(ns, ns);
    for (std::uint32_t j = 0; j < ns; ++j) {
      auto col = H.s_ech->express(w_vectorize(w_bracket(v, H.s_basis[j])));
      require(col.has_value(), "hamiltonian_cast: outer direction does not preserve s");
      for (std::uint32_t r = 0; r < ns; ++r) mat.at(r, j) = (*col)[r];
    }
    acts.push_back(std::move(mat));
  }
  H.gp = p_envelope(H.g, acts);
  require(H.gp.algebra.dim == M + 2,
          "hamiltonian_cast: restricted closure of g has unexpected dimension");
  {
    std::vector<int> deg = s_deg;
    for (std::uint32_t k = ns; k < H.s_p.algebra.dim; ++k) deg.push_back(-int(F.p));
    H.s_p.algebra = with_grading(std::move(H.s_p.algebra), std::move(deg));
    deg = g_deg;
    for (std::uint32_t k = ng; k < H.gp.algebra.dim; ++k) deg.push_back(-int(F.p));
    H.gp.algebra = with_grading(std::move(H.gp.algebra), std::move(deg));
  }

  // the operator D1^p as an element of both closures: its matrix on s is
  // computed independently (D1^p pushes through to the coefficients), then
  // expressed over the envelope's host matrices
  DMat d1p(ns, ns);
  for (std::uint32_t j = 0; j < ns; ++j) {
    WElement im = H.s_basis[j];
    for (DPElement& c : im.comp)
      for (std::uint32_t t = 0; t < F.p; ++t) c = dp_partial(c, 0);
    auto col = H.s_ech->express(w_vectorize(im));
    require(col.has_value(), "hamiltonian_cast: D1^p does not preserve s");
    for (std::uint32_t r = 0; r < ns; ++r) d1p.at(r, j) = (*col)[r];
  }
  auto express_mat = [&](const std::vector<DMat>& mats, const DMat& target) {
    Echelon e(F, ns * ns, std::uint32_t(mats.size()));
    for (std::uint32_t t = 0; t < mats.size(); ++t) {
      Vec row = mats[t].a;
      row.resize(std::size_t(ns) * ns + mats.size(), 0);
      row[std::size_t(ns) * ns + t] = 1;
      require(e.insert(std::move(row)), "hamiltonian_cast: envelope matrices are dependent");
    }
    auto c = e.express(target.a);
    require(c.has_value(), "hamiltonian_cast: D1^p escapes the restricted closure");
    return *c;
  };
  H.d1p_sp = express_mat(H.s_p.matrices, d1p);
  H.d1p_gp = express_mat(H.gp.matrices, d1p);

  // degree-descending filtrations and the closure embedding
  H.s_filt = grading_filtration(H.s);
  H.g_filt = grading_filtration(H.g);
  {
    DMat inc(H.gp.algebra.dim, H.s_p.algebra.dim);
    for (std::uint32_t k = 0; k < ns; ++k) inc.at(k, k) = 1;
    inc.at(H.gp.algebra.dim - 1, H.s_p.algebra.dim - 1) = 1;
    H.sp_to_gp = make_morphism(H.s_p.algebra, H.gp.algebra, std::move(inc));
    require(H.sp_to_gp.verified,
            "hamiltonian_cast: closure of s does not embed in closure of g");
  }
  return H;
}

SubstMap substitution_map(DPAmbientPtr amb, std::vector<DPElement> images) {
  check(bool(amb), "substitution_map: null ambient");
  const DPAmbient& A = *amb;
  const Field& F = A.F;
  check(images.size() == A.m, "substitution_map: one image per variable");
  for (const DPElement& im : images) {
    check_member(A, im, "substitution_map");
    check(im.terms.count(0) == 0,
          "substitution_map: image has nonzero constant term");
  }
  // divided powers of each image, then columns sigma(x^(a)) as products
  std::vector<std::vector<DPElement>> pw(A.m);
  for (std::uint32_t i = 0; i < A.m; ++i) {
    pw[i].reserve(A.bounds[i]);
    DPElement local{amb, images[i].terms};  // rebind to the map's ambient
    for (std::uint32_t k = 0; k < A.bounds[i]; ++k)
      pw[i].push_back(dp_divided_power(local, k));
  }
  std::vector<DPElement> col(A.size, dp_zero(amb));
  for (std::uint32_t r = 0; r < A.size; ++r) {
    DPElement e = pw[0][A.exps[r][0]];
    for (std::uint32_t i = 1; i < A.m; ++i) e = dp_mul(e, pw[i][A.exps[r][i]]);
    col[r] = std::move(e);
  }
  SubstMap S;
  S.amb = amb;
  S.images = std::move(images);
  S.matrix = DMat(A.size, A.size);
  Echelon ech(F, A.size, A.size);
  for (std::uint32_t r = 0; r < A.size; ++r) {
    Vec row(std::size_t(A.size) * 2, 0);
    for (auto [rr, c] : col[r].terms) {
      S.matrix.at(rr, r) = c;
      row[rr] = c;
    }
    row[std::size_t(A.size) + r] = 1;
    check(ech.insert(std::move(row)), "substitution_map: substitution is not bijective");
  }
  S.inverse = DMat(A.size, A.size);
  for (std::uint32_t r = 0; r < A.size; ++r) {
    Vec unit(A.size, 0);
    unit[r] = 1;
    auto c = ech.express(unit);
    require(c.has_value(), "substitution_map: inversion failed after rank check");
    for (std::uint32_t k = 0; k < A.size; ++k) S.inverse.at(k, r) = (*c)[k];
  }
  // multiplicativity on every monomial pair; with exact truncation this can
  // only fail if the divided-power tables are broken, so it doubles as a
  // self-check of gamma
  std::vector<std::uint32_t> sum(A.m);
  for (std::uint32_t ra = 0; ra < A.size; ++ra)
    for (std::uint32_t rb = ra; rb < A.size; ++rb) {
      DPElement lhs = dp_mul(col[ra], col[rb]);
      felem coeff = 1;
      bool inside = true;
      for (std::uint32_t i = 0; i < A.m; ++i) {
        sum[i] = A.exps[ra][i] + A.exps[rb][i];
        if (sum[i] >= A.bounds[i]) {
          inside = false;
          break;
        }
        coeff = F.mul(coeff, binom_mod_p(F, A.exps[ra][i], A.exps[rb][i]));
      }
      DPElement rhs = inside ? dp_scale(coeff, col[A.rank(sum)]) : dp_zero(amb);
      if (!(lhs == rhs))
        throw std::domain_error("inadmissible substitution (witness pair " +
                                monomial_text(A, ra) + ", " + monomial_text(A, rb) +
                                ")");
    }
  return S;
}

WElement conjugate_derivation(const SubstMap& s, const WElement& E) {
  check_w(E, "conjugate_derivation");
  const DPAmbient& A = *s.amb;
  check_member(A, E.comp[0], "conjugate_derivation");
  const Field& F = A.F;
  // matrix of E on the monomial basis, conjugated by the substitution
  DMat Em(A.size, A.size);
  for (std::uint32_t r = 0; r < A.size; ++r) {
    DPElement im = w_apply(E, dp_monomial(s.amb, A.exps[r]));
    for (auto [rr, c] : im.terms) Em.at(rr, r) = c;
  }
  DMat phi = dmat_mul(F, s.matrix, dmat_mul(F, Em, s.inverse));
  // candidate special form: component i reads off the image of x_{i+1}
  WElement out = w_zero(s.amb);
  std::vector<std::uint32_t> e(A.m, 0);
  for (std::uint32_t i = 0; i < A.m; ++i) {
    std::fill(e.begin(), e.end(), 0u);
    e[i] = 1;
    out.comp[i] = column_element(s.amb, phi, A.rank(e));
  }
  // the conjugate is special iff the candidate reproduces it everywhere
  for (std::uint32_t r = 0; r < A.size; ++r) {
    DPElement got = w_apply(out, dp_monomial(s.amb, A.exps[r]));
    if (!(got == column_element(s.amb, phi, r)))
      throw std::domain_error(
          "inadmissible substitution: conjugate is not special (witness monomial " +
          monomial_text(A, r) + ")");
  }
  return out;
}

Morphism induced_automorphism(const SubstMap& s, const LieAlgebra& L,
                              const std::vector<WElement>& basis_meaning) {
  check(basis_meaning.size() == L.dim,
        "induced_automorphism: one meaning per basis vector");
  const DPAmbient& A = *s.amb;
  const Field& F = A.F;
  const std::uint32_t W = A.m * A.size;
  Echelon ech(F, W, L.dim);
  for (std::uint32_t k = 0; k < L.dim; ++k) {
    check_w(basis_meaning[k], "induced_automorphism");
    check_member(A, basis_meaning[k].comp[0], "induced_automorphism");
    Vec row = w_vectorize(basis_meaning[k]);
    row.resize(std::size_t(W) + L.dim, 0);
    row[std::size_t(W) + k] = 1;
    check(ech.insert(std::move(row)), "induced_automorphism: meanings are dependent");
  }
  DMat mat(L.dim, L.dim);
  for (std::uint32_t k = 0; k < L.dim; ++k) {
    WElement conj = conjugate_derivation(s, basis_meaning[k]);
    auto c = ech.express(w_vectorize(conj));
    check(c.has_value(),
          "induced_automorphism: conjugate escapes the algebra (witness " +
              L.labels[k] + ")");
    for (std::uint32_t r = 0; r < L.dim; ++r) mat.at(r, k) = (*c)[r];
  }
  return make_morphism(L, L, std::move(mat));
}

}  // namespace mla
