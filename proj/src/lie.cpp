#include "mla/lie.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "mla/prng.hpp"

namespace mla {

namespace {

void accumulate_row(const Field& F, SRow& acc, felem coeff, const SRow& row) {
  for (auto [k, v] : row) {
    felem add = F.mul(coeff, v);
    if (add == 0) continue;
    auto it = std::lower_bound(acc.begin(), acc.end(), k,
                               [](const auto& e, std::uint32_t c) { return e.first < c; });
    if (it != acc.end() && it->first == k) {
      it->second = F.add(it->second, add);
      if (it->second == 0) acc.erase(it);
    } else {
      acc.insert(it, {k, add});
    }
  }
}

std::vector<std::uint32_t> support(const Vec& v) {
  std::vector<std::uint32_t> s;
  for (std::uint32_t i = 0; i < v.size(); ++i)
    if (v[i] != 0) s.push_back(i);
  return s;
}

}  // namespace

SRow LieAlgebra::bracket_basis(std::uint32_t i, std::uint32_t j) const {
  if (i == j) return {};
  if (i < j) return c[std::size_t(i) * dim + j];
  SRow row = c[std::size_t(j) * dim + i];
  for (auto& [k, v] : row) v = F.neg(v);
  return row;
}

Vec LieAlgebra::bracket(const Vec& x, const Vec& y) const {
  require(x.size() == dim && y.size() == dim, "bracket: coordinate length mismatch");
  Vec out(dim, 0);
  auto sx = support(x), sy = support(y);
  for (auto i : sx)
    for (auto j : sy) {
      if (i == j) continue;
      const SRow& row = c[i < j ? std::size_t(i) * dim + j : std::size_t(j) * dim + i];
      if (row.empty()) continue;
      felem coeff = F.mul(x[i], y[j]);
      if (i > j) coeff = F.neg(coeff);
      for (auto [k, v] : row) out[k] = F.add(out[k], F.mul(coeff, v));
    }
  return out;
}

DMat LieAlgebra::ad(const Vec& x) const {
  DMat m(dim, dim);
  auto sx = support(x);
  for (std::uint32_t j = 0; j < dim; ++j)
    for (auto i : sx) {
      if (i == j) continue;
      const SRow& row = c[i < j ? std::size_t(i) * dim + j : std::size_t(j) * dim + i];
      if (row.empty()) continue;
      felem coeff = (i > j) ? F.neg(x[i]) : x[i];
      for (auto [k, v] : row) m.at(k, j) = F.add(m.at(k, j), F.mul(coeff, v));
    }
  return m;
}

DMat LieAlgebra::ad_basis(std::uint32_t i) const { return ad(basis_vec(i)); }

LieBuilder::LieBuilder(const Field& F, std::uint32_t dim)
    : F_(F), dim_(dim), labels_(dim), acc_(std::size_t(dim) * dim) {
  for (std::uint32_t i = 0; i < dim; ++i) labels_[i] = "e" + std::to_string(i);
}

void LieBuilder::add(std::uint32_t i, std::uint32_t j, std::uint32_t k, felem v) {
  require(i < dim_ && j < dim_ && k < dim_, "LieBuilder::add: index out of range");
  require(i != j, "LieBuilder::add: diagonal entry");
  if (v == 0) return;
  if (i < j)
    acc_[std::size_t(i) * dim_ + j].push_back({k, v});
  else
    acc_[std::size_t(j) * dim_ + i].push_back({k, F_.neg(v)});
}

Vec jacobi_residual(const LieAlgebra& L, std::uint32_t i, std::uint32_t j,
                    std::uint32_t k) {
  Vec out(L.dim, 0);
  auto add_term = [&](std::uint32_t a, std::uint32_t b, std::uint32_t target) {
    for (auto [m, v] : L.bracket_basis(a, b))
      for (auto [l, w] : L.bracket_basis(m, target))
        out[l] = L.F.add(out[l], L.F.mul(v, w));
  };
  add_term(i, j, k);
  add_term(j, k, i);
  add_term(k, i, j);
  return out;
}

DMat ad_basis_pow(const LieAlgebra& L, std::uint32_t i, std::uint32_t e) {
  DMat out(L.dim, L.dim);
  Vec cur(L.dim), nxt(L.dim);
  for (std::uint32_t j = 0; j < L.dim; ++j) {
    std::fill(cur.begin(), cur.end(), 0);
    cur[j] = 1;
    for (std::uint32_t t = 0; t < e; ++t) {
      std::fill(nxt.begin(), nxt.end(), 0);
      for (std::uint32_t k = 0; k < L.dim; ++k) {
        if (cur[k] == 0 || k == i) continue;
        const SRow& row =
            L.c[i < k ? std::size_t(i) * L.dim + k : std::size_t(k) * L.dim + i];
        felem coeff = (i > k) ? L.F.neg(cur[k]) : cur[k];
        for (auto [r, v] : row) nxt[r] = L.F.add(nxt[r], L.F.mul(coeff, v));
      }
      std::swap(cur, nxt);
    }
    for (std::uint32_t r = 0; r < L.dim; ++r) out.at(r, j) = cur[r];
  }
  return out;
}

LieAlgebra with_grading(LieAlgebra L, std::vector<int> degrees) {
  require(degrees.size() == L.dim, "grading table has wrong length");
  for (std::uint32_t i = 0; i < L.dim; ++i)
    for (std::uint32_t j = i + 1; j < L.dim; ++j)
      for (auto [k, v] : L.c[std::size_t(i) * L.dim + j])
        require(degrees[k] == degrees[i] + degrees[j],
                "grading incompatible with bracket at pair (" + std::to_string(i) +
                    "," + std::to_string(j) + ")");
  L.grading = std::move(degrees);
  return L;
}

LieAlgebra LieBuilder::build(bool defer_jacobi) {
  LieAlgebra L;
  L.F = F_;
  L.dim = dim_;
  L.labels = std::move(labels_);
  L.c.assign(std::size_t(dim_) * dim_, {});
  for (std::uint32_t i = 0; i < dim_; ++i)
    for (std::uint32_t j = i + 1; j < dim_; ++j) {
      auto& raw = acc_[std::size_t(i) * dim_ + j];
      if (raw.empty()) continue;
      std::sort(raw.begin(), raw.end());
      SRow row;
      for (auto [k, v] : raw) {
        if (!row.empty() && row.back().first == k) {
          row.back().second = F_.add(row.back().second, v);
          if (row.back().second == 0) row.pop_back();
        } else if (v != 0) {
          row.push_back({k, v});
        }
      }
      L.c[std::size_t(i) * dim_ + j] = std::move(row);
    }

  if (!defer_jacobi) {
    // buffered residual with a touched-index list: cost follows the actual
    // structure-constant fill, not dim^4
    Vec buf(dim_, 0);
    std::vector<std::uint32_t> touched;
    auto acc = [&](std::uint32_t a, std::uint32_t b, felem cf) {
      if (a == b || cf == 0) return;
      const SRow& row =
          L.c[a < b ? std::size_t(a) * dim_ + b : std::size_t(b) * dim_ + a];
      if (a > b) cf = F_.neg(cf);
      for (auto [k, v] : row) {
        buf[k] = F_.add(buf[k], F_.mul(cf, v));
        touched.push_back(k);
      }
    };
    for (std::uint32_t i = 0; i < dim_; ++i)
      for (std::uint32_t j = i + 1; j < dim_; ++j) {
        const SRow& rij = L.c[std::size_t(i) * dim_ + j];
        for (std::uint32_t k = j + 1; k < dim_; ++k) {
          const SRow& rjk = L.c[std::size_t(j) * dim_ + k];
          const SRow& rik = L.c[std::size_t(i) * dim_ + k];
          if (rij.empty() && rjk.empty() && rik.empty()) continue;
          for (auto [m, v] : rij) acc(m, k, v);
          for (auto [m, v] : rjk) acc(m, i, v);
          for (auto [m, v] : rik) acc(m, j, F_.neg(v));  // [[k,e_i],e_j]
          bool bad = false;
          for (auto t : touched) {
            if (buf[t] != 0) bad = true;
            buf[t] = 0;
          }
          touched.clear();
          if (bad)
            throw verification_error("Jacobi identity fails on basis triple (" +
                                     std::to_string(i) + "," + std::to_string(j) + "," +
                                     std::to_string(k) + ")");
        }
      }
  }

  if (grading_.has_value()) {
    require(grading_->size() == dim_, "grading table has wrong length");
    for (std::uint32_t i = 0; i < dim_; ++i)
      for (std::uint32_t j = i + 1; j < dim_; ++j)
        for (auto [k, v] : L.c[std::size_t(i) * dim_ + j])
          require((*grading_)[k] == (*grading_)[i] + (*grading_)[j],
                  "grading incompatible with bracket at pair (" + std::to_string(i) +
                      "," + std::to_string(j) + ")");
    L.grading = std::move(grading_);
  }

  if (pmap_.has_value()) {
    require(pmap_->size() == dim_, "pmap table has wrong length");
    for (std::uint32_t i = 0; i < dim_; ++i) {
      require((*pmap_)[i].size() == dim_, "pmap entry has wrong length");
      DMat adp = ad_basis_pow(L, i, F_.p);
      if (L.ad((*pmap_)[i]) != adp)
        throw verification_error("pmap fails ad(x^[p]) = (ad x)^p at basis index " +
                                 std::to_string(i));
    }
    L.pmap = std::move(pmap_);
  }
  return L;
}

Morphism make_morphism(const LieAlgebra& src, const LieAlgebra& dst, DMat m) {
  require(m.rows == dst.dim && m.cols == src.dim, "make_morphism: shape mismatch");
  Morphism phi;
  phi.src_dim = src.dim;
  phi.dst_dim = dst.dim;
  phi.matrix = std::move(m);
  phi.verified = true;
  // Column i is the image of the i-th source basis vector.
  std::vector<Vec> img(src.dim);
  for (std::uint32_t i = 0; i < src.dim; ++i) {
    img[i].resize(dst.dim);
    for (std::uint32_t r = 0; r < dst.dim; ++r) img[i][r] = phi.matrix.at(r, i);
  }
  for (std::uint32_t i = 0; i < src.dim && phi.verified; ++i)
    for (std::uint32_t j = i + 1; j < src.dim && phi.verified; ++j) {
      Vec lhs(dst.dim, 0);
      for (auto [k, v] : src.c[std::size_t(i) * src.dim + j])
        vec_axpy(src.F, lhs, v, img[k]);
      if (lhs != dst.bracket(img[i], img[j])) {
        phi.verified = false;
        phi.witness = {i, j};
      }
    }
  return phi;
}

Morphism identity_morphism(const LieAlgebra& L) {
  Morphism phi;
  phi.src_dim = phi.dst_dim = L.dim;
  phi.matrix = DMat::identity(L.dim);
  phi.verified = true;
  return phi;
}

Morphism compose(const Field& F, const Morphism& g, const Morphism& f) {
  require(f.dst_dim == g.src_dim, "compose: shape mismatch");
  Morphism out;
  out.src_dim = f.src_dim;
  out.dst_dim = g.dst_dim;
  out.matrix = dmat_mul(F, g.matrix, f.matrix);
  out.verified = f.verified && g.verified;  // composition preserves the property
  return out;
}

Morphism invert(const Field& F, const Morphism& m) {
  require(m.src_dim == m.dst_dim, "invert: square morphism required");
  std::uint32_t n = m.src_dim;
  // Row-reduce [M | I].
  DMat aug(n, 2 * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) aug.at(i, j) = m.matrix.at(i, j);
    aug.at(i, n + i) = 1;
  }
  RrefResult r = rref_dense(F, aug);
  require(r.rank == n && r.pivots.back() == n - 1, "invert: singular morphism");
  DMat dense = smat_to_dense(r.mat);
  Morphism out;
  out.src_dim = out.dst_dim = n;
  out.matrix = DMat(n, n);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = 0; j < n; ++j) out.matrix.at(i, j) = dense.at(i, n + j);
  out.verified = m.verified;  // the inverse of a bijective morphism is one
  return out;
}

Subspace closure(const LieAlgebra& L, const std::vector<Vec>& gens, ClosureMode mode) {
  Echelon ech(L.F, L.dim);
  std::vector<Vec> members;  // vectors whose pairwise/basis brackets are pending
  std::vector<std::size_t> queue;
  for (const Vec& g : gens)
    if (ech.insert(g)) {
      members.push_back(g);
      queue.push_back(members.size() - 1);
    }
  while (!queue.empty() && ech.rank() < L.dim) {
    std::size_t a = queue.back();
    queue.pop_back();
    if (mode == ClosureMode::ideal) {
      for (std::uint32_t i = 0; i < L.dim && ech.rank() < L.dim; ++i) {
        Vec w = L.bracket(members[a], L.basis_vec(i));
        if (ech.insert(w)) {
          members.push_back(std::move(w));
          queue.push_back(members.size() - 1);
        }
      }
    } else {
      for (std::size_t b = 0; b < members.size() && ech.rank() < L.dim; ++b) {
        if (b == a) continue;
        Vec w = L.bracket(members[a], members[b]);
        if (ech.insert(w)) {
          members.push_back(std::move(w));
          queue.push_back(members.size() - 1);
        }
      }
    }
  }
  if (ech.rank() == L.dim) return Subspace::full(L.F, L.dim);
  return ech.to_subspace();
}

Subspace span_bracket(const LieAlgebra& L, const Subspace& A, const Subspace& B) {
  Echelon ech(L.F, L.dim);
  for (std::uint32_t i = 0; i < A.basis.rows; ++i) {
    Vec a = A.basis.row_vec(i);
    for (std::uint32_t j = 0; j < B.basis.rows; ++j)
      ech.insert(L.bracket(a, B.basis.row_vec(j)));
  }
  return ech.to_subspace();
}

Subspace centralizer_in(const LieAlgebra& L, const Subspace& A, const Subspace& S) {
  // Shrink A's basis by the kernel of x -> [x, s], one s at a time.
  DMat cur = A.basis;
  for (std::uint32_t s = 0; s < S.basis.rows && cur.rows > 0; ++s) {
    Vec sv = S.basis.row_vec(s);
    DMat images(cur.rows, L.dim);
    for (std::uint32_t i = 0; i < cur.rows; ++i) {
      Vec w = L.bracket(cur.row_vec(i), sv);
      std::copy(w.begin(), w.end(), images.row(i));
    }
    DMat lambda = kernel_dense(L.F, dmat_transpose(images));
    DMat next(lambda.rows, L.dim);
    for (std::uint32_t i = 0; i < lambda.rows; ++i) {
      Vec v(L.dim, 0);
      for (std::uint32_t j = 0; j < cur.rows; ++j) vec_axpy(L.F, v, lambda.at(i, j), cur.row_vec(j));
      std::copy(v.begin(), v.end(), next.row(i));
    }
    cur = std::move(next);
  }
  return Subspace::from_dmat(L.F, cur);
}

Subspace centralizer(const LieAlgebra& L, const Subspace& S) {
  return centralizer_in(L, Subspace::full(L.F, L.dim), S);
}

Subspace center(const LieAlgebra& L) {
  return centralizer(L, Subspace::full(L.F, L.dim));
}

Subspace normalizer(const LieAlgebra& L, const Subspace& S) {
  // x with [x, s_b] ∈ S for every basis vector s_b of S.
  std::uint32_t n = L.dim;
  DMat stacked(S.basis.rows * n, n);
  for (std::uint32_t b = 0; b < S.basis.rows; ++b) {
    DMat A = L.ad(S.basis.row_vec(b));  // y -> [s_b, y]; sign irrelevant for kernels
    for (std::uint32_t j = 0; j < n; ++j) {
      Vec col(n);
      for (std::uint32_t i = 0; i < n; ++i) col[i] = A.at(i, j);
      Vec red = S.reduce(L.F, col);
      for (std::uint32_t i = 0; i < n; ++i) stacked.at(b * n + i, j) = red[i];
    }
  }
  return Subspace::from_dmat(L.F, kernel_dense(L.F, stacked));
}

bool is_subalgebra(const LieAlgebra& L, const Subspace& S) {
  for (std::uint32_t i = 0; i < S.basis.rows; ++i)
    for (std::uint32_t j = i + 1; j < S.basis.rows; ++j)
      if (!S.contains(L.F, L.bracket(S.basis.row_vec(i), S.basis.row_vec(j))))
        return false;
  return true;
}

bool is_ideal(const LieAlgebra& L, const Subspace& S) {
  for (std::uint32_t i = 0; i < S.basis.rows; ++i) {
    Vec s = S.basis.row_vec(i);
    for (std::uint32_t j = 0; j < L.dim; ++j)
      if (!S.contains(L.F, L.bracket(s, L.basis_vec(j)))) return false;
  }
  return true;
}

std::vector<Subspace> series(const LieAlgebra& L, const Subspace& S, SeriesKind kind) {
  if (!is_subalgebra(L, S)) throw std::domain_error("series: input is not a subalgebra");
  std::vector<Subspace> chain{S};
  for (;;) {
    const Subspace& cur = chain.back();
    Subspace next = (kind == SeriesKind::derived) ? span_bracket(L, cur, cur)
                                                  : span_bracket(L, S, cur);
    if (next == cur) break;
    chain.push_back(std::move(next));
    if (chain.back().dim() == 0) break;
  }
  return chain;
}

bool is_solvable(const LieAlgebra& L, const Subspace& S) {
  return series(L, S, SeriesKind::derived).back().dim() == 0;
}

bool is_nilpotent(const LieAlgebra& L, const Subspace& S) {
  return series(L, S, SeriesKind::lower_central).back().dim() == 0;
}

bool is_abelian(const LieAlgebra& L, const Subspace& S) {
  return span_bracket(L, S, S).dim() == 0;
}

QuotientResult quotient(const LieAlgebra& L, const Subspace& I) {
  if (!is_ideal(L, I)) throw std::domain_error("quotient: input is not an ideal");
  std::uint32_t n = L.dim, m = n - I.dim();
  std::vector<bool> is_pivot(n, false);
  for (auto p : I.pivots) is_pivot[p] = true;
  std::vector<std::uint32_t> comp;
  for (std::uint32_t j = 0; j < n; ++j)
    if (!is_pivot[j]) comp.push_back(j);

  // Projection: reduce mod I, then read coordinates at the complement columns
  // (reduction output is supported there).
  DMat P(m, n);
  for (std::uint32_t j = 0; j < n; ++j) {
    Vec red = I.reduce(L.F, L.basis_vec(j));
    for (std::uint32_t a = 0; a < m; ++a) P.at(a, j) = red[comp[a]];
  }

  LieBuilder b(L.F, m);
  for (std::uint32_t a = 0; a < m; ++a) b.label(a, L.labels[comp[a]] + "~");
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t bb = a + 1; bb < m; ++bb) {
      Vec w = mat_vec(L.F, P, L.bracket(L.basis_vec(comp[a]), L.basis_vec(comp[bb])));
      for (std::uint32_t k = 0; k < m; ++k)
        if (w[k] != 0) b.add(a, bb, k, w[k]);
    }

  QuotientResult out{b.build(), {}, comp};
  out.projection = make_morphism(L, out.algebra, P);
  require(out.projection.verified, "quotient projection failed the morphism check");
  return out;
}

SubalgebraResult subalgebra(const LieAlgebra& L, const Subspace& S) {
  if (!is_subalgebra(L, S)) throw std::domain_error("subalgebra: span is not bracket-closed");
  std::uint32_t m = S.dim();
  LieBuilder b(L.F, m);
  for (std::uint32_t i = 0; i < m; ++i)
    for (std::uint32_t j = i + 1; j < m; ++j) {
      Vec w = L.bracket(S.basis.row_vec(i), S.basis.row_vec(j));
      auto coords = S.coords(L.F, w);
      require(coords.has_value(), "subalgebra: bracket left the span");
      for (std::uint32_t k = 0; k < m; ++k)
        if ((*coords)[k] != 0) b.add(i, j, k, (*coords)[k]);
    }
  SubalgebraResult out{b.build(), {}};
  out.inclusion = make_morphism(out.algebra, L, dmat_transpose(S.basis));
  require(out.inclusion.verified, "subalgebra inclusion failed the morphism check");
  return out;
}

std::vector<Vec> generating_set(const LieAlgebra& L, std::uint64_t seed) {
  Prng rng(seed);
  std::vector<Vec> gens;
  if (L.dim == 0) return gens;
  Subspace cur = Subspace::zero(L.F, L.dim);
  // Random vectors almost always generate quickly; basis vectors guarantee
  // termination (worst case: the whole basis, e.g. abelian algebras).
  std::vector<Vec> candidates;
  for (int t = 0; t < 4; ++t) {
    Vec v(L.dim);
    for (auto& x : v) x = rng.elem(L.F);
    candidates.push_back(std::move(v));
  }
  for (std::uint32_t i = 0; i < L.dim; ++i) candidates.push_back(L.basis_vec(i));
  for (const Vec& v : candidates) {
    if (cur.dim() == L.dim) break;
    if (cur.contains(L.F, v)) continue;
    gens.push_back(v);
    cur = closure(L, gens, ClosureMode::subalgebra);
  }
  require(cur.dim() == L.dim, "generating_set: search failed to span");
  return gens;
}

namespace {

// d(x_k) = A_k u where u stacks the generator images; built by closure words.
struct GeneratorExpansion {
  std::vector<Vec> gens;
  std::vector<DMat> A;  // per basis index, dim x (gens * dim)
};

GeneratorExpansion build_expansion(const LieAlgebra& L, std::uint64_t seed) {
  GeneratorExpansion out;
  out.gens = generating_set(L, seed);
  std::uint32_t n = L.dim, r = std::uint32_t(out.gens.size()), w = r * n;

  std::vector<Vec> words;
  std::vector<DMat> wordA;
  Echelon ech(L.F, n, n);  // tags index kept words
  auto push_word = [&](const Vec& v, DMat A) -> bool {
    Vec tagged = v;
    tagged.resize(std::size_t(n) + n, 0);
    tagged[n + words.size()] = 1;
    if (!ech.insert(std::move(tagged))) return false;
    words.push_back(v);
    wordA.push_back(std::move(A));
    return true;
  };
  for (std::uint32_t s = 0; s < r; ++s) {
    DMat A(n, w);
    for (std::uint32_t i = 0; i < n; ++i) A.at(i, s * n + i) = 1;
    push_word(out.gens[s], std::move(A));
  }
  for (std::size_t a = 0; a < words.size() && ech.rank() < n; ++a)
    for (std::size_t b = 0; b < a && ech.rank() < n; ++b) {
      Vec v = L.bracket(words[a], words[b]);
      if (ech.contains(v)) continue;
      // d[wa, wb] = ad(wa) d(wb) - ad(wb) d(wa).
      DMat A = dmat_sub(L.F, dmat_mul(L.F, L.ad(words[a]), wordA[b]),
                        dmat_mul(L.F, L.ad(words[b]), wordA[a]));
      push_word(v, std::move(A));
    }
  require(ech.rank() == n, "derivations: generator words do not span");

  out.A.resize(n);
  for (std::uint32_t k = 0; k < n; ++k) {
    auto coords = ech.express(L.basis_vec(k));
    require(coords.has_value(), "derivations: basis expression failed");
    DMat Ak(n, w);
    for (std::size_t m = 0; m < words.size(); ++m)
      if ((*coords)[m] != 0) {
        for (std::size_t idx = 0; idx < Ak.a.size(); ++idx)
          Ak.a[idx] = L.F.add(Ak.a[idx], L.F.mul((*coords)[m], wordA[m].a[idx]));
      }
    out.A[k] = std::move(Ak);
  }
  return out;
}

// Leibniz residual of the candidate with basis images D (columns) on (i, j).
bool leibniz_ok(const LieAlgebra& L, const std::vector<Vec>& dcols,
                std::uint32_t i, std::uint32_t j) {
  Vec lhs(L.dim, 0);
  for (auto [k, v] : L.c[std::size_t(i) * L.dim + j]) vec_axpy(L.F, lhs, v, dcols[k]);
  Vec rhs = L.bracket(dcols[i], L.basis_vec(j));
  vec_axpy(L.F, rhs, 1, L.bracket(L.basis_vec(i), dcols[j]));
  return lhs == rhs;
}

}  // namespace

Derivations derivations(const LieAlgebra& L, std::uint64_t seed) {
  GeneratorExpansion ge = build_expansion(L, seed);
  std::uint32_t n = L.dim, r = std::uint32_t(ge.gens.size()), w = r * n;

  // Leibniz constraints in the generator-image unknowns, sampled in random
  // order; candidates from the sampled system are verified exhaustively and
  // violated pairs are fed back, so the fixed point is the exact solution.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
  Prng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t i = pairs.size(); i > 1; --i)
    std::swap(pairs[i - 1], pairs[rng.below(i)]);

  Echelon constraints(L.F, w);
  auto add_constraint = [&](std::uint32_t i, std::uint32_t j) {
    // rows of sum_k c_ij^k A_k + ad(x_j) A_i - ad(x_i) A_j = 0
    // (that expression applied to u is exactly the Leibniz residual).
    DMat R(n, w);
    for (auto [k, v] : L.c[std::size_t(i) * L.dim + j])
      for (std::size_t idx = 0; idx < R.a.size(); ++idx)
        R.a[idx] = L.F.add(R.a[idx], L.F.mul(v, ge.A[k].a[idx]));
    DMat t = dmat_sub(L.F, dmat_mul(L.F, L.ad_basis(j), ge.A[i]),
                      dmat_mul(L.F, L.ad_basis(i), ge.A[j]));
    for (std::uint32_t row = 0; row < n; ++row) {
      Vec v(w);
      for (std::uint32_t col = 0; col < w; ++col)
        v[col] = L.F.add(R.at(row, col), t.at(row, col));
      constraints.insert(std::move(v));
    }
  };

  std::size_t cursor = 0;
  int stale = 0;
  while (cursor < pairs.size() && stale < 8) {
    std::uint32_t before = constraints.rank();
    add_constraint(pairs[cursor].first, pairs[cursor].second);
    ++cursor;
    stale = (constraints.rank() == before) ? stale + 1 : 0;
  }

  std::vector<DMat> mats;
  for (;;) {
    mats.clear();
    DMat ker = kernel_dense(L.F, constraints.to_subspace().basis);
    bool all_ok = true;
    for (std::uint32_t cnd = 0; cnd < ker.rows && all_ok; ++cnd) {
      Vec u = ker.row_vec(cnd);
      std::vector<Vec> dcols(n);
      for (std::uint32_t k = 0; k < n; ++k) dcols[k] = mat_vec(L.F, ge.A[k], u);
      for (auto [i, j] : pairs)
        if (!leibniz_ok(L, dcols, i, j)) {
          std::uint32_t before = constraints.rank();
          add_constraint(i, j);
          require(constraints.rank() > before,
                  "derivations: violated pair added no constraint");
          all_ok = false;
          break;
        }
      if (all_ok) {
        DMat D(n, n);
        for (std::uint32_t k = 0; k < n; ++k)
          for (std::uint32_t row = 0; row < n; ++row) D.at(row, k) = dcols[k][row];
        mats.push_back(std::move(D));
      }
    }
    if (all_ok) break;
  }

  // Abstract algebra on the kernel basis via generator-image coordinates.
  std::uint32_t d = std::uint32_t(mats.size());
  Echelon span(L.F, w, d);
  for (std::uint32_t a = 0; a < d; ++a) {
    Vec v(std::size_t(w) + d, 0);
    for (std::uint32_t s = 0; s < r; ++s) {
      Vec img = mat_vec(L.F, mats[a], ge.gens[s]);
      std::copy(img.begin(), img.end(), v.begin() + std::size_t(s) * n);
    }
    v[w + a] = 1;
    require(span.insert(std::move(v)), "derivations: dependent solution basis");
  }
  LieBuilder b(L.F, d);
  for (std::uint32_t a = 0; a < d; ++a) b.label(a, "D" + std::to_string(a));
  for (std::uint32_t a = 0; a < d; ++a)
    for (std::uint32_t c2 = a + 1; c2 < d; ++c2) {
      Vec gi(w);
      for (std::uint32_t s = 0; s < r; ++s) {
        Vec t1 = mat_vec(L.F, mats[a], mat_vec(L.F, mats[c2], ge.gens[s]));
        Vec t2 = mat_vec(L.F, mats[c2], mat_vec(L.F, mats[a], ge.gens[s]));
        for (std::uint32_t i = 0; i < n; ++i) gi[s * n + i] = L.F.sub(t1[i], t2[i]);
      }
      auto coords = span.express(gi);
      require(coords.has_value(), "derivations: commutator outside the solution space");
      for (std::uint32_t k = 0; k < d; ++k)
        if ((*coords)[k] != 0) b.add(a, c2, k, (*coords)[k]);
    }

  Derivations out{std::move(mats), b.build(/*defer_jacobi=*/true), std::move(ge.gens)};
  return out;
}

namespace {

// Least-degree monic g with g(w)v = 0, plus the Krylov vectors w^k v
// (one per degree below deg g) for evaluating divisors of g at w on v.
std::pair<Poly, std::vector<Vec>> local_min_poly(const Field& F, const DMat& w,
                                                 const Vec& v) {
  std::uint32_t n = std::uint32_t(v.size());
  Echelon ech(F, n, n + 1);
  std::vector<Vec> krylov;
  Vec u = v;
  for (std::uint32_t k = 0; k <= n; ++k) {
    Vec tagged = u;
    tagged.resize(std::size_t(n) + n + 1, 0);
    tagged[n + k] = 1;
    if (!ech.insert(std::move(tagged))) {
      auto c = ech.express(u);
      require(c.has_value(), "local_min_poly: dependence without expression");
      Poly g(k + 1, 0);
      g[k] = 1;
      for (std::uint32_t m = 0; m < k; ++m) g[m] = F.neg((*c)[m]);
      return {std::move(g), std::move(krylov)};
    }
    krylov.push_back(u);
    u = mat_vec(F, w, u);
  }
  throw verification_error("local_min_poly: no dependence in ambient+1 steps");
}

Vec apply_poly_krylov(const Field& F, const Poly& h, const std::vector<Vec>& krylov,
                      std::uint32_t n) {
  Vec out(n, 0);
  for (std::size_t m = 0; m < h.size(); ++m) vec_axpy(F, out, h[m], krylov[m]);
  return out;
}

}  // namespace

MinimalIdeals minimal_ideals(const LieAlgebra& L, std::uint64_t seed) {
  Prng rng(seed);
  std::ostringstream log;
  log << "seed=" << seed << "\n";

  auto spin = [&](const Vec& v) { return closure(L, {v}, ClosureMode::ideal); };
  auto random_vec = [&]() {
    Vec v(L.dim);
    for (auto& x : v) x = rng.elem(L.F);
    return v;
  };
  // Sums of products of adjoint operators: they preserve every ideal, so
  // Krylov data of a member of an ideal stays inside that ideal.
  auto random_word = [&](std::string& desc) {
    std::uint32_t terms = 1 + std::uint32_t(rng.below(2));
    DMat acc(L.dim, L.dim);
    for (std::uint32_t t = 0; t < terms; ++t) {
      std::uint32_t len = 1 + std::uint32_t(rng.below(2));
      DMat prod = L.ad(random_vec());
      for (std::uint32_t s = 1; s < len; ++s) prod = dmat_mul(L.F, prod, L.ad(random_vec()));
      acc = dmat_add(L.F, acc, prod);
    }
    desc = std::to_string(terms) + "-term adjoint word";
    return acc;
  };
  // Spins of kernel vectors of each irreducible factor of the local minimal
  // polynomial of a word at v; these land in the ideal generated by v.
  auto factor_spins = [&](const Vec& v, const std::string& where,
                          auto&& consume) {
    if (vec_is_zero(v)) return;
    std::string desc;
    DMat wmat = random_word(desc);
    auto [g, krylov] = local_min_poly(L.F, wmat, v);
    if (poly_deg(g) < 1) return;
    for (const auto& [u, e] : poly_factor(L.F, g, rng.next())) {
      Vec vk = apply_poly_krylov(L.F, poly_divmod(L.F, g, u).first, krylov, L.dim);
      if (vec_is_zero(vk)) continue;
      if (consume(spin(vk), "factor kernel spin (" + desc + ", degree " +
                                std::to_string(poly_deg(u)) + ") " + where))
        return;
    }
  };

  std::vector<Subspace> cands;
  auto add_cand = [&](Subspace s, const std::string& how) {
    if (s.dim() == 0) return false;
    if (std::find(cands.begin(), cands.end(), s) != cands.end()) return false;
    log << "candidate dim " << s.dim() << " via " << how << "\n";
    cands.push_back(std::move(s));
    return false;  // collect every factor's spin
  };

  for (int t = 0; t < 6; ++t) factor_spins(random_vec(), "at random vector", add_cand);
  add_cand(spin(random_vec()), "random vector spin");
  for (std::uint32_t i = 0; i < L.dim; i += std::max<std::uint32_t>(1, L.dim / 8))
    add_cand(spin(L.basis_vec(i)), "basis vector spin");

  // Minimize each candidate by spinning kernel vectors of word factors at
  // random members; all such vectors stay inside the candidate.
  const int attempts = 8;
  std::vector<Subspace> minimal;
  for (Subspace I : cands) {
    int stale = 0;
    while (stale < attempts) {
      Vec c(I.dim());
      for (auto& x : c) x = rng.elem(L.F);
      Vec v = I.from_coords(L.F, c);
      if (vec_is_zero(v)) {
        ++stale;
        continue;
      }
      bool refined = false;
      factor_spins(v, "inside dim-" + std::to_string(I.dim()) + " candidate",
                   [&](Subspace J, const std::string& how) {
                     if (J.dim() > 0 && J.dim() < I.dim()) {
                       log << "refined dim " << I.dim() << " -> " << J.dim() << " via "
                           << how << "\n";
                       I = std::move(J);
                       refined = true;
                       return true;  // restart from the refined ideal
                     }
                     return false;
                   });
      if (!refined) {
        Subspace J = spin(v);
        if (J.dim() > 0 && J.dim() < I.dim()) {
          log << "refined dim " << I.dim() << " -> " << J.dim() << " via member spin\n";
          I = std::move(J);
          refined = true;
        }
      }
      stale = refined ? 0 : stale + 1;
    }
    if (std::find(minimal.begin(), minimal.end(), I) == minimal.end()) {
      require(is_ideal(L, I), "minimal_ideals: candidate is not an ideal");
      minimal.push_back(std::move(I));
    }
  }

  // Mutual containment: drop anything that strictly contains another survivor.
  std::vector<Subspace> kept;
  for (const Subspace& I : minimal) {
    bool contains_other = false;
    for (const Subspace& J : minimal)
      if (J.dim() < I.dim() && I.contains_subspace(L.F, J)) {
        contains_other = true;
        break;
      }
    if (contains_other)
      log << "dropped dim " << I.dim() << " (contains a smaller survivor)\n";
    else
      kept.push_back(I);
  }

  std::sort(kept.begin(), kept.end(), [](const Subspace& a, const Subspace& b) {
    if (a.dim() != b.dim()) return a.dim() < b.dim();
    if (a.pivots != b.pivots) return a.pivots < b.pivots;
    return a.basis.a < b.basis.a;
  });
  MinimalIdeals out;
  out.ideals = std::move(kept);
  out.witness_log = log.str();
  return out;
}

namespace {

// Representative-based certification of [L_(i), L_(j)] ⊆ L_(i+j): basis
// vectors of each layer complement (plus the stabilized tail) span every
// space, so bilinearity reduces the full claim to these pairs.
void check_filtration_property(const LieAlgebra& L, const Filtration& f) {
  std::vector<std::pair<int, Vec>> reps;
  for (int d = f.lo; d < f.hi; ++d) {
    Echelon ech(L.F, L.dim);
    const Subspace& next = f.at(d + 1);
    for (std::uint32_t i = 0; i < next.basis.rows; ++i) ech.insert(next.basis.row_vec(i));
    const Subspace& cur = f.at(d);
    for (std::uint32_t i = 0; i < cur.basis.rows; ++i) {
      Vec v = cur.basis.row_vec(i);
      if (ech.insert(v)) reps.push_back({d, std::move(v)});
    }
  }
  const Subspace& tail = f.at(f.hi);
  for (std::uint32_t i = 0; i < tail.basis.rows; ++i)
    reps.push_back({f.hi, tail.basis.row_vec(i)});

  for (std::size_t a = 0; a < reps.size(); ++a)
    for (std::size_t b = a; b < reps.size(); ++b) {
      Vec w = L.bracket(reps[a].second, reps[b].second);
      if (vec_is_zero(w)) continue;
      int d = reps[a].first + reps[b].first;
      require(f.at(d).contains(L.F, w),
              "filtration property [L_i, L_j] ⊆ L_{i+j} fails at degrees " +
                  std::to_string(reps[a].first) + ", " + std::to_string(reps[b].first));
    }
}

Filtration weisfeiler_common(const LieAlgebra& L, const Subspace& l_minus1,
                             const Subspace& l_zero, bool variant) {
  if (!l_minus1.contains_subspace(L.F, l_zero))
    throw std::domain_error("weisfeiler_filtration: L_(0) not inside L_(-1)");
  if (!is_subalgebra(L, l_zero))
    throw std::domain_error("weisfeiler_filtration: L_(0) must be a subalgebra");
  for (std::uint32_t i = 0; i < l_zero.basis.rows; ++i)
    for (std::uint32_t j = 0; j < l_minus1.basis.rows; ++j)
      if (!l_minus1.contains(L.F, L.bracket(l_zero.basis.row_vec(i), l_minus1.basis.row_vec(j))))
        throw std::domain_error("weisfeiler_filtration: [L_(0), L_(-1)] not inside L_(-1)");

  std::vector<Subspace> neg{l_minus1};  // degrees -1, -2, ...
  for (;;) {
    Subspace next = subspace_sum(L.F, span_bracket(L, l_minus1, neg.back()), neg.back());
    if (next == neg.back()) break;
    neg.push_back(std::move(next));
  }
  std::vector<Subspace> pos{l_zero};  // degrees 0, 1, ...
  for (;;) {
    const Subspace& prev = pos.back();
    const Subspace& rhs = variant ? prev : l_minus1;
    // {x in prev : [x, rhs] ⊆ prev}: shrink prev's basis one rhs-vector at a
    // time through the kernel of the reduced image matrix.
    DMat cur = prev.basis;
    for (std::uint32_t s = 0; s < rhs.basis.rows && cur.rows > 0; ++s) {
      Vec sv = rhs.basis.row_vec(s);
      DMat images(cur.rows, L.dim);
      for (std::uint32_t i = 0; i < cur.rows; ++i) {
        Vec w = prev.reduce(L.F, L.bracket(cur.row_vec(i), sv));
        std::copy(w.begin(), w.end(), images.row(i));
      }
      DMat lambda = kernel_dense(L.F, dmat_transpose(images));
      DMat next(lambda.rows, L.dim);
      for (std::uint32_t i = 0; i < lambda.rows; ++i) {
        Vec v(L.dim, 0);
        for (std::uint32_t j = 0; j < cur.rows; ++j)
          vec_axpy(L.F, v, lambda.at(i, j), cur.row_vec(j));
        std::copy(v.begin(), v.end(), next.row(i));
      }
      cur = std::move(next);
    }
    Subspace next = Subspace::from_dmat(L.F, cur);
    if (next == pos.back()) break;
    pos.push_back(std::move(next));
  }

  Filtration f;
  f.lo = -int(neg.size());
  f.hi = int(pos.size()) - 1;
  for (std::size_t i = neg.size(); i-- > 0;) f.spaces.push_back(neg[i]);
  for (auto& s : pos) f.spaces.push_back(std::move(s));
  check_filtration_property(L, f);
  return f;
}

}  // namespace

Filtration weisfeiler_filtration(const LieAlgebra& L, const Subspace& l_minus1,
                                 const Subspace& l_zero) {
  return weisfeiler_common(L, l_minus1, l_zero, false);
}

Filtration weisfeiler_filtration_variant(const LieAlgebra& L, const Subspace& l_minus1,
                                         const Subspace& l_zero) {
  return weisfeiler_common(L, l_minus1, l_zero, true);
}

std::uint32_t GradedAlgebra::dim_at(int d) const {
  std::uint32_t n = 0;
  for (std::size_t i = 0; i < degrees.size(); ++i)
    if (degrees[i] == d) ++n;
  return n;
}

GradedAlgebra graded_algebra(const LieAlgebra& L, const Filtration& filt) {
  // Nesting of the chain (the rest of the Lie-filtration precondition is
  // certified by the representative pair check below).
  for (int d = filt.lo; d < filt.hi; ++d)
    require(filt.at(d).contains_subspace(L.F, filt.at(d + 1)),
            "graded_algebra: filtration is not descending");

  GradedAlgebra g;
  struct Layer {
    int degree;
    std::vector<std::uint32_t> rep_ids;
    Echelon coords;  // space(d+1) rows tag-free, then reps with identity tags
  };
  std::vector<Layer> layers;
  for (int d = filt.lo; d < filt.hi; ++d) {
    Echelon ech(L.F, L.dim);
    const Subspace& next = filt.at(d + 1);
    for (std::uint32_t i = 0; i < next.basis.rows; ++i) ech.insert(next.basis.row_vec(i));
    std::vector<Vec> reps;
    const Subspace& cur = filt.at(d);
    for (std::uint32_t i = 0; i < cur.basis.rows; ++i) {
      Vec v = cur.basis.row_vec(i);
      if (ech.insert(v)) reps.push_back(std::move(v));
    }
    Layer layer{d, {}, Echelon(L.F, L.dim, std::uint32_t(reps.size()))};
    for (std::uint32_t i = 0; i < next.basis.rows; ++i) {
      Vec v = next.basis.row_vec(i);
      v.resize(std::size_t(L.dim) + reps.size(), 0);
      layer.coords.insert(std::move(v));
    }
    for (std::size_t i = 0; i < reps.size(); ++i) {
      Vec v = reps[i];
      v.resize(std::size_t(L.dim) + reps.size(), 0);
      v[L.dim + i] = 1;
      require(layer.coords.insert(std::move(v)), "graded_algebra: representative collapse");
      layer.rep_ids.push_back(std::uint32_t(g.reps.size()));
      g.reps.push_back(reps[i]);
      g.degrees.push_back(d);
    }
    layers.push_back(std::move(layer));
  }

  std::uint32_t m = std::uint32_t(g.reps.size());
  LieBuilder b(L.F, m);
  for (std::uint32_t i = 0; i < m; ++i)
    b.label(i, "g[" + std::to_string(g.degrees[i]) + "]_" + std::to_string(i));
  auto layer_of = [&](int d) -> Layer* {
    for (auto& l : layers)
      if (l.degree == d) return &l;
    return nullptr;
  };
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t c2 = a + 1; c2 < m; ++c2) {
      Vec w = L.bracket(g.reps[a], g.reps[c2]);
      int d = g.degrees[a] + g.degrees[c2];
      Layer* layer = layer_of(d);
      if (layer == nullptr) {
        // G_d = 0 there; the bracket must die in the stabilized space.
        require(filt.at(d + 1).contains(L.F, w),
                "graded_algebra: bracket escapes the filtration at degree " +
                    std::to_string(d));
        continue;
      }
      auto coords = layer->coords.express(w);
      require(coords.has_value(),
              "graded_algebra: bracket escapes the filtration at degree " + std::to_string(d));
      for (std::size_t k = 0; k < layer->rep_ids.size(); ++k)
        if ((*coords)[k] != 0) b.add(a, c2, layer->rep_ids[k], (*coords)[k]);
    }

  std::vector<int> grading = g.degrees;
  b.set_grading(std::move(grading));
  g.algebra = b.build();
  return g;
}

DMat restrict_operator(const Field& F, const DMat& op, const Subspace& S) {
  std::uint32_t k = S.dim();
  DMat R(k, k);
  for (std::uint32_t i = 0; i < k; ++i) {
    Vec w = mat_vec(F, op, S.basis.row_vec(i));
    auto coords = S.coords(F, w);
    require(coords.has_value(), "restrict_operator: operator leaves the subspace");
    for (std::uint32_t j = 0; j < k; ++j) R.at(j, i) = (*coords)[j];
  }
  return R;
}

std::string algebra_to_json(const LieAlgebra& L) {
  nlohmann::json j;
  j["field"]["p"] = L.F.p;
  j["field"]["k"] = L.F.k;
  if (L.F.k > 1) j["field"]["modulus"] = L.F.modulus;
  j["dim"] = L.dim;
  j["labels"] = L.labels;
  auto brackets = nlohmann::json::array();
  for (std::uint32_t i = 0; i < L.dim; ++i)
    for (std::uint32_t jx = i + 1; jx < L.dim; ++jx) {
      const SRow& row = L.c[std::size_t(i) * L.dim + jx];
      if (row.empty()) continue;
      auto terms = nlohmann::json::array();
      for (auto [k, v] : row) terms.push_back({k, L.F.elem_str(v)});
      brackets.push_back({i, jx, terms});
    }
  j["brackets"] = std::move(brackets);
  if (L.pmap.has_value()) {
    auto pm = nlohmann::json::array();
    for (const Vec& v : *L.pmap) {
      auto row = nlohmann::json::array();
      for (felem x : v) row.push_back(L.F.elem_str(x));
      pm.push_back(std::move(row));
    }
    j["pmap"] = std::move(pm);
  }
  if (L.grading.has_value()) j["grading"] = *L.grading;
  return j.dump(1);
}

LieAlgebra algebra_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  std::uint32_t p = j.at("field").at("p").get<std::uint32_t>();
  std::uint32_t k = j.at("field").at("k").get<std::uint32_t>();
  Field F = Field::extension(p, k);
  if (k > 1)
    require(j.at("field").at("modulus").get<Poly>() == F.modulus,
            "algebra JSON: unsupported field modulus");
  std::uint32_t dim = j.at("dim").get<std::uint32_t>();
  LieBuilder b(F, dim);
  auto labels = j.at("labels").get<std::vector<std::string>>();
  require(labels.size() == dim, "algebra JSON: label count mismatch");
  for (std::uint32_t i = 0; i < dim; ++i) b.label(i, labels[i]);
  for (const auto& entry : j.at("brackets")) {
    std::uint32_t i = entry.at(0).get<std::uint32_t>();
    std::uint32_t jx = entry.at(1).get<std::uint32_t>();
    require(i < jx, "algebra JSON: bracket rows must have i < j");
    for (const auto& term : entry.at(2))
      b.add(i, jx, term.at(0).get<std::uint32_t>(),
            F.parse_elem(term.at(1).get<std::string>()));
  }
  if (j.contains("pmap")) {
    std::vector<Vec> pm;
    for (const auto& row : j.at("pmap")) {
      Vec v;
      for (const auto& x : row) v.push_back(F.parse_elem(x.get<std::string>()));
      pm.push_back(std::move(v));
    }
    b.set_pmap(std::move(pm));
  }
  if (j.contains("grading")) b.set_grading(j.at("grading").get<std::vector<int>>());
  return b.build();
}

}  // namespace mla
