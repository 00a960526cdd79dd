#include "mla/restricted.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace mla {

namespace {

void check_domain(bool ok, const std::string& msg) {
  if (!ok) throw std::domain_error(msg);
}

Vec vectorize(const DMat& m) { return m.a; }

// Column-sparse square matrices: the envelope closure works column by column,
// so products and p-th powers cost what the host matrices' fill costs.
using SCols = std::vector<SRow>;

SCols to_cols(const DMat& M) {
  SCols out(M.cols);
  for (std::uint32_t j = 0; j < M.cols; ++j)
    for (std::uint32_t i = 0; i < M.rows; ++i)
      if (M.at(i, j) != 0) out[j].push_back({i, M.at(i, j)});
  return out;
}

DMat to_dense(const SCols& M) {
  const std::uint32_t m = std::uint32_t(M.size());
  DMat out(m, m);
  for (std::uint32_t j = 0; j < m; ++j)
    for (auto [i, v] : M[j]) out.at(i, j) = v;
  return out;
}

Vec cols_vectorize(const SCols& M) {
  const std::uint32_t m = std::uint32_t(M.size());
  Vec out(std::size_t(m) * m, 0);
  for (std::uint32_t j = 0; j < m; ++j)
    for (auto [i, v] : M[j]) out[std::size_t(i) * m + j] = v;
  return out;
}

// acc += c * (M * v)
void cols_apply_acc(const Field& F, const SCols& M, const SRow& v, felem c,
                    std::map<std::uint32_t, felem>& acc) {
  for (auto [k, a] : v) {
    const felem ca = F.mul(c, a);
    for (auto [r, w] : M[k]) {
      felem& slot = acc[r];
      slot = F.add(slot, F.mul(ca, w));
    }
  }
}

SRow strip(const std::map<std::uint32_t, felem>& acc) {
  SRow out;
  for (auto [k, v] : acc)
    if (v != 0) out.push_back({k, v});
  return out;
}

SCols cols_mul(const Field& F, const SCols& A, const SCols& B) {
  SCols out(B.size());
  std::map<std::uint32_t, felem> acc;
  for (std::size_t j = 0; j < B.size(); ++j) {
    acc.clear();
    cols_apply_acc(F, A, B[j], 1, acc);
    out[j] = strip(acc);
  }
  return out;
}

SCols cols_pow(const Field& F, const SCols& M, std::uint32_t e) {
  SCols r = M;
  for (std::uint32_t t = 1; t < e; ++t) r = cols_mul(F, M, r);
  return r;
}

SCols cols_commutator(const Field& F, const SCols& A, const SCols& B) {
  SCols out(A.size());
  std::map<std::uint32_t, felem> acc;
  for (std::size_t j = 0; j < A.size(); ++j) {
    acc.clear();
    cols_apply_acc(F, A, B[j], 1, acc);
    cols_apply_acc(F, B, A[j], F.neg(1), acc);
    out[j] = strip(acc);
  }
  return out;
}

// Adds c * ad(e_k) into M (columns indexed by the second bracket argument).
void ad_accumulate(const LieAlgebra& L, DMat& M, std::uint32_t k, felem c) {
  for (std::uint32_t j = 0; j < L.dim; ++j) {
    if (j == k) continue;
    for (const auto& [m, v] : L.bracket_basis(k, j))
      M.at(m, j) = L.F.add(M.at(m, j), L.F.mul(c, v));
  }
}

}  // namespace

Vec p_power(const LieAlgebra& L, const Vec& x) {
  check_domain(L.pmap.has_value(), "p_power: algebra carries no p-map");
  require(x.size() == L.dim, "p_power: vector has wrong dimension");
  const Field& F = L.F;
  const std::uint32_t n = L.dim, p = F.p;

  Vec result(n, 0);
  Vec cur(n, 0);            // partial sum of the already-folded terms
  DMat ad_cur(n, n);        // ad(cur), updated incrementally
  bool have_terms = false;

  for (std::uint32_t k = 0; k < n; ++k) {
    const felem a = x[k];
    if (a == 0) continue;
    // semilinear term: (a e_k)^{[p]} = a^p e_k^{[p]}
    vec_axpy(F, result, F.pow(a, p), (*L.pmap)[k]);

    if (have_terms) {
      // corrections s_i(term, cur): i * s_i is the t^{i-1} coefficient of
      // ad(t*term + cur)^{p-1}(term)
      Vec term(n, 0);
      term[k] = a;
      std::vector<Vec> coeff(p, Vec(n, 0));
      coeff[0] = term;
      for (std::uint32_t step = 0; step + 1 < p; ++step) {
        std::vector<Vec> next(p, Vec(n, 0));
        for (std::uint32_t d = 0; d < p; ++d) {
          if (!vec_is_zero(coeff[d])) {
            Vec lo = mat_vec(F, ad_cur, coeff[d]);
            vec_axpy(F, next[d], 1, lo);
            if (d + 1 < p) {
              Vec hi = L.bracket(term, coeff[d]);
              vec_axpy(F, next[d + 1], 1, hi);
            }
          }
        }
        coeff = std::move(next);
      }
      for (std::uint32_t i = 1; i < p; ++i)
        vec_axpy(F, result, F.inv(F.from_int(std::int64_t(i))), coeff[i - 1]);
    }
    cur[k] = F.add(cur[k], a);
    ad_accumulate(L, ad_cur, k, a);
    have_terms = true;
  }

  require(L.ad(result) == dmat_pow(F, L.ad(x), p),
          "p_power: Jacobson result violates ad(x^[p]) = (ad x)^p");
  return result;
}

bool is_toral(const LieAlgebra& L, const Vec& x) { return p_power(L, x) == x; }

bool is_p_nilpotent(const LieAlgebra& L, const Vec& x) {
  Vec v = x;
  for (std::uint32_t e = 0; e <= L.dim; ++e) {
    if (vec_is_zero(v)) return true;
    v = p_power(L, v);
  }
  return false;
}

std::vector<Vec> p_map_from_adjoint(const LieAlgebra& L) {
  check_domain(center(L).dim() == 0,
               "p_map_from_adjoint: algebra has nonzero center");
  const Field& F = L.F;
  const std::uint32_t n = L.dim;
  const std::size_t w = std::size_t(n) * n;

  Echelon ech(F, std::uint32_t(w), n);
  for (std::uint32_t k = 0; k < n; ++k) {
    Vec row = vectorize(L.ad_basis(k));
    row.resize(w + n, 0);
    row[w + k] = 1;
    require(ech.insert(std::move(row)),
            "p_map_from_adjoint: adjoint images are dependent despite zero center");
  }

  std::vector<Vec> table;
  table.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto coords = ech.express(vectorize(ad_basis_pow(L, i, F.p)));
    if (!coords)
      throw std::domain_error(
          "p_map_from_adjoint: not closed under p-th powers (witness " +
          L.labels[i] + ")");
    table.push_back(std::move(*coords));
  }
  return table;
}

LieAlgebra with_pmap(LieAlgebra L, std::vector<Vec> table) {
  check_domain(table.size() == L.dim, "with_pmap: table has wrong size");
  const Field& F = L.F;
  for (std::uint32_t i = 0; i < L.dim; ++i) {
    require(table[i].size() == L.dim, "with_pmap: table row has wrong dimension");
    require(L.ad(table[i]) == ad_basis_pow(L, i, F.p),
            "with_pmap: table violates ad(x_i^[p]) = (ad x_i)^p at " + L.labels[i]);
  }
  L.pmap = std::move(table);
  return L;
}

PEnvelope p_envelope(const LieAlgebra& L, const std::vector<DMat>& generator_images) {
  const Field& F = L.F;
  const std::uint32_t n = L.dim;
  check_domain(generator_images.size() == n,
               "p_envelope: one host matrix per basis vector required");
  check_domain(n > 0, "p_envelope: empty algebra");
  const std::uint32_t m = generator_images[0].rows;
  for (const DMat& g : generator_images)
    check_domain(g.rows == m && g.cols == m, "p_envelope: host matrices must be square and uniform");
  const std::size_t w = std::size_t(m) * m;

  // pass 1: learn the closure and its dimension
  std::vector<DMat> mats(generator_images);
  std::vector<SCols> cols;
  cols.reserve(mats.size());
  for (const DMat& g : mats) cols.push_back(to_cols(g));
  std::vector<std::string> labels;
  {
    Echelon span(F, std::uint32_t(w));
    for (std::uint32_t k = 0; k < n; ++k) {
      check_domain(span.insert(vectorize(mats[k])),
                   "p_envelope: generator images are linearly dependent");
      labels.push_back(L.labels[k]);
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
      SCols q = cols_pow(F, cols[i], F.p);
      if (span.insert(cols_vectorize(q))) {
        labels.push_back(labels[i] + "^[" + std::to_string(F.p) + "]");
        mats.push_back(to_dense(q));
        cols.push_back(std::move(q));
      }
    }
  }
  const std::uint32_t N = std::uint32_t(mats.size());

  // pass 2: coordinates of everything in the closure basis
  Echelon ech(F, std::uint32_t(w), N);
  for (std::uint32_t t = 0; t < N; ++t) {
    Vec row = vectorize(mats[t]);
    row.resize(w + N, 0);
    row[w + t] = 1;
    require(ech.insert(std::move(row)), "p_envelope: closure basis not independent");
  }

  LieBuilder b(F, N);
  for (std::uint32_t t = 0; t < N; ++t) b.label(t, labels[t]);
  for (std::uint32_t i = 0; i < N; ++i)
    for (std::uint32_t j = i + 1; j < N; ++j) {
      SCols comm = cols_commutator(F, cols[i], cols[j]);
      if (j < n) {
        // within the generated part the structure constants are L's own,
        // and the images must reproduce them
        SRow cij = L.bracket_basis(i, j);
        SCols expect(m);
        std::map<std::uint32_t, felem> acc;
        for (std::uint32_t jj = 0; jj < m; ++jj) {
          acc.clear();
          for (auto [k, v] : cij)
            for (auto [r, wv] : cols[k][jj]) {
              felem& slot = acc[r];
              slot = F.add(slot, F.mul(v, wv));
            }
          expect[jj] = strip(acc);
        }
        if (comm != expect)
          throw std::domain_error(
              "p_envelope: generator images do not represent the algebra "
              "(witness pair " + L.labels[i] + ", " + L.labels[j] + ")");
        for (auto [k, v] : cij) b.add(i, j, k, v);
        continue;
      }
      auto coords = ech.express(cols_vectorize(comm));
      require(coords.has_value(), "p_envelope: commutator escaped the p-closure");
      for (std::uint32_t k = 0; k < N; ++k)
        if ((*coords)[k] != 0) b.add(i, j, k, (*coords)[k]);
    }

  std::vector<Vec> table;
  for (std::uint32_t t = 0; t < N; ++t) {
    auto coords = ech.express(cols_vectorize(cols_pow(F, cols[t], F.p)));
    require(coords.has_value(), "p_envelope: p-th power escaped the p-closure");
    table.push_back(std::move(*coords));
  }
  b.set_pmap(std::move(table));

  PEnvelope env;
  env.algebra = b.build();
  env.matrices = std::move(mats);

  DMat inc(N, n);
  for (std::uint32_t k = 0; k < n; ++k) inc.at(k, k) = 1;
  env.embedding = make_morphism(L, env.algebra, std::move(inc));
  require(env.embedding.verified, "p_envelope: embedding failed verification");
  return env;
}

JordanChevalley jordan_chevalley(const LieAlgebra& L, const Vec& x) {
  check_domain(L.pmap.has_value(), "jordan_chevalley: algebra carries no p-map");
  require(x.size() == L.dim, "jordan_chevalley: vector has wrong dimension");
  const Field& F = L.F;
  const std::uint32_t n = L.dim;

  if (vec_is_zero(x)) return {Vec(n, 0), Vec(n, 0)};

  // iterate p-powers until the span of the chain stabilizes
  std::vector<Vec> chain{x};
  Echelon span(F, n);
  span.insert(x);
  while (true) {
    Vec nxt = p_power(L, chain.back());
    bool grew = !vec_is_zero(nxt) && span.insert(nxt);
    chain.push_back(std::move(nxt));
    if (!grew) break;
  }
  const std::uint32_t m = span.rank();  // dim <x>_p

  // stable part: iterates from index E on span the torus of <x>_p
  const std::uint32_t E = m + 1;
  while (chain.size() < std::size_t(E) + m + 1)
    chain.push_back(p_power(L, chain.back()));
  Echelon torus(F, n);
  for (std::size_t k = E; k < chain.size(); ++k) torus.insert(chain[k]);

  Vec xs(n, 0);
  if (torus.rank() > 0) {
    // solve the semilinear map backwards E times: y_{k} with y_k^{[p]} = y_{k+1}
    const auto& tb = torus.rows();
    std::vector<Vec> pt;  // p-powers of the torus basis
    Echelon img(F, n, torus.rank());
    for (std::uint32_t i = 0; i < torus.rank(); ++i) {
      pt.push_back(p_power(L, tb[i]));
      Vec row = pt.back();
      row.resize(std::size_t(n) + torus.rank(), 0);
      row[std::size_t(n) + i] = 1;
      require(img.insert(std::move(row)),
              "jordan_chevalley: p-map not bijective on the stable part");
    }
    Vec y = chain[E];
    for (std::uint32_t step = 0; step < E; ++step) {
      auto d = img.express(y);
      require(d.has_value(), "jordan_chevalley: semilinear back-solve failed");
      Vec next(n, 0);
      for (std::uint32_t i = 0; i < torus.rank(); ++i)
        vec_axpy(F, next, F.pow((*d)[i], F.q / F.p), tb[i]);
      y = std::move(next);
    }
    xs = std::move(y);
  }

  Vec xn = vec_sub(F, x, xs);
  require(vec_is_zero(L.bracket(xs, xn)), "jordan_chevalley: parts do not commute");
  require(is_p_nilpotent(L, xn), "jordan_chevalley: nilpotent part fails to vanish");
  return {std::move(xs), std::move(xn)};
}

Subspace max_torus_of_nilpotent(const LieAlgebra& L, const Subspace& N) {
  check_domain(L.pmap.has_value(), "max_torus_of_nilpotent: algebra carries no p-map");
  check_domain(N.ambient == L.dim, "max_torus_of_nilpotent: ambient mismatch");
  const Field& F = L.F;
  const std::uint32_t r = N.dim();
  for (std::uint32_t i = 0; i < r; ++i)
    check_domain(N.contains(F, p_power(L, N.basis.row_vec(i))),
                 "max_torus_of_nilpotent: subspace not closed under p-th powers");
  check_domain(is_nilpotent(L, N), "max_torus_of_nilpotent: subspace is not nilpotent");

  Echelon torus(F, L.dim);
  std::vector<Vec> parts;
  for (std::uint32_t i = 0; i < r; ++i) {
    parts.push_back(jordan_chevalley(L, N.basis.row_vec(i)).semisimple);
    torus.insert(parts.back());
  }

  // the semisimple elements of a nilpotent algebra are central, hence the
  // span above is already closed; verify the claim on the result
  for (const Vec& t : torus.rows()) {
    for (std::uint32_t i = 0; i < r; ++i)
      require(vec_is_zero(L.bracket(t, N.basis.row_vec(i))),
              "max_torus_of_nilpotent: semisimple part is not central");
    require(torus.contains(p_power(L, t)),
            "max_torus_of_nilpotent: torus not closed under p-th powers");
    require(vec_is_zero(jordan_chevalley(L, t).nilpotent),
            "max_torus_of_nilpotent: torus element is not semisimple");
  }
  for (std::uint32_t i = 0; i + 1 < r && i < 8; ++i) {
    Vec s = vec_add(F, N.basis.row_vec(i), N.basis.row_vec(i + 1));
    require(torus.contains(jordan_chevalley(L, s).semisimple),
            "max_torus_of_nilpotent: semisimple parts are not additive");
  }
  return torus.to_subspace();
}

Morphism exp_ad(const LieAlgebra& L, const Vec& D, felem c) {
  const Field& F = L.F;
  const std::uint32_t n = L.dim, p = F.p;
  require(D.size() == n, "exp_ad: vector has wrong dimension");

  std::vector<DMat> pw(p);  // (ad D)^j
  pw[0] = DMat::identity(n);
  DMat A = L.ad(D);
  for (std::uint32_t j = 1; j < p; ++j) pw[j] = dmat_mul(F, pw[j - 1], A);
  check_domain(dmat_is_zero(dmat_mul(F, pw[p - 1], A)), "exp_ad: (ad D)^p != 0");

  DMat phi = DMat::identity(n);
  felem cj = 1, fact = 1;
  for (std::uint32_t j = 1; j < p; ++j) {
    cj = F.mul(cj, c);
    fact = F.mul(fact, F.from_int(std::int64_t(j)));
    phi = dmat_add(F, phi, dmat_scale(F, F.mul(cj, F.inv(fact)), pw[j]));
  }

  // columns of Delta = phi - I and of each (ad D)^j, with supports
  auto columns = [n](const DMat& M) {
    std::vector<Vec> cols(n, Vec(n, 0));
    for (std::uint32_t i = 0; i < n; ++i)
      for (std::uint32_t j = 0; j < n; ++j) cols[j][i] = M.at(i, j);
    return cols;
  };
  DMat delta = dmat_sub(F, phi, DMat::identity(n));
  std::vector<Vec> dcol = columns(delta);
  std::vector<std::vector<Vec>> pcol(p);
  for (std::uint32_t j = 1; j < p; ++j) pcol[j] = columns(pw[j]);

  // route (a): exact bracket compatibility,
  //   [Dx_i, e_j] + [e_i, Dx_j] + [Dx_i, Dx_j] = Delta([e_i, e_j])
  bool bracket_ok = true;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> bracket_witness;
  for (std::uint32_t i = 0; i < n && bracket_ok; ++i) {
    const Vec ei = L.basis_vec(i);
    for (std::uint32_t j = i + 1; j < n; ++j) {
      Vec res = L.bracket(dcol[i], L.basis_vec(j));
      vec_axpy(F, res, 1, L.bracket(ei, dcol[j]));
      vec_axpy(F, res, 1, L.bracket(dcol[i], dcol[j]));
      for (const auto& [k, v] : L.bracket_basis(i, j))
        vec_axpy(F, res, F.neg(v), dcol[k]);
      if (!vec_is_zero(res)) {
        bracket_ok = false;
        bracket_witness = {i, j};
        break;
      }
    }
  }

  // route (b): the degree-p cocycle sums on all basis pairs
  std::vector<felem> cw(p, 0);  // 1 / (k! (p-k)!)
  {
    std::vector<felem> f(p, 1);
    for (std::uint32_t k = 1; k < p; ++k) f[k] = F.mul(f[k - 1], F.from_int(std::int64_t(k)));
    for (std::uint32_t k = 1; k < p; ++k) cw[k] = F.inv(F.mul(f[k], f[p - 1 - (k - 1)]));
  }
  bool cocycle_zero = true;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> cocycle_witness;
  for (std::uint32_t i = 0; i < n && cocycle_zero; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) {
      Vec s(n, 0);
      for (std::uint32_t k = 1; k < p; ++k)
        vec_axpy(F, s, cw[k], L.bracket(pcol[k][i], pcol[p - k][j]));
      if (!vec_is_zero(s)) {
        cocycle_zero = false;
        cocycle_witness = {i, j};
        break;
      }
    }

  // the two routes are equivalent for c != 0 and must agree
  if (c != 0)
    require(bracket_ok == cocycle_zero,
            "exp_ad: bracket check and cocycle criterion disagree");

  Morphism mor;
  mor.src_dim = mor.dst_dim = n;
  mor.matrix = std::move(phi);
  mor.verified = bracket_ok;  // ground truth for the returned map (c = 0 gives the identity)
  if (!mor.verified) mor.witness = bracket_witness ? bracket_witness : cocycle_witness;
  return mor;
}

}  // namespace mla
