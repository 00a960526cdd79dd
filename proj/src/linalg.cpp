#include "mla/linalg.hpp"

#include <algorithm>
#include <sstream>

namespace mla {

DMat dmat_add(const Field& F, const DMat& A, const DMat& B) {
  require(A.rows == B.rows && A.cols == B.cols, "dmat_add: shape mismatch");
  DMat R(A.rows, A.cols);
  for (std::size_t i = 0; i < R.a.size(); ++i) R.a[i] = F.add(A.a[i], B.a[i]);
  return R;
}

DMat dmat_sub(const Field& F, const DMat& A, const DMat& B) {
  require(A.rows == B.rows && A.cols == B.cols, "dmat_sub: shape mismatch");
  DMat R(A.rows, A.cols);
  for (std::size_t i = 0; i < R.a.size(); ++i) R.a[i] = F.sub(A.a[i], B.a[i]);
  return R;
}

DMat dmat_scale(const Field& F, felem c, const DMat& A) {
  DMat R(A.rows, A.cols);
  for (std::size_t i = 0; i < R.a.size(); ++i) R.a[i] = F.mul(c, A.a[i]);
  return R;
}

DMat dmat_mul(const Field& F, const DMat& A, const DMat& B) {
  require(A.cols == B.rows, "dmat_mul: shape mismatch");
  DMat R(A.rows, B.cols);
  for (std::uint32_t i = 0; i < A.rows; ++i) {
    felem* dst = R.row(i);
    for (std::uint32_t k = 0; k < A.cols; ++k) {
      felem c = A.at(i, k);
      if (c == 0) continue;
      const felem* src = B.row(k);
      for (std::uint32_t j = 0; j < B.cols; ++j)
        if (src[j] != 0) dst[j] = F.add(dst[j], F.mul(c, src[j]));
    }
  }
  return R;
}

DMat dmat_pow(const Field& F, DMat A, std::uint64_t e) {
  require(A.rows == A.cols, "dmat_pow: square matrix required");
  DMat R = DMat::identity(A.rows);
  while (e) {
    if (e & 1) R = dmat_mul(F, R, A);
    e >>= 1;
    if (e) A = dmat_mul(F, A, A);
  }
  return R;
}

DMat dmat_transpose(const DMat& A) {
  DMat R(A.cols, A.rows);
  for (std::uint32_t i = 0; i < A.rows; ++i)
    for (std::uint32_t j = 0; j < A.cols; ++j) R.at(j, i) = A.at(i, j);
  return R;
}

Vec mat_vec(const Field& F, const DMat& A, const Vec& v) {
  require(v.size() == A.cols, "mat_vec: shape mismatch");
  Vec r(A.rows, 0);
  for (std::uint32_t i = 0; i < A.rows; ++i) {
    const felem* row = A.row(i);
    felem s = 0;
    for (std::uint32_t j = 0; j < A.cols; ++j)
      if (row[j] != 0 && v[j] != 0) s = F.add(s, F.mul(row[j], v[j]));
    r[i] = s;
  }
  return r;
}

bool dmat_is_zero(const DMat& A) {
  for (felem x : A.a)
    if (x) return false;
  return true;
}

void vec_axpy(const Field& F, Vec& dst, felem c, const Vec& src) {
  if (c == 0) return;
  for (std::size_t i = 0; i < dst.size(); ++i)
    if (src[i] != 0) dst[i] = F.add(dst[i], F.mul(c, src[i]));
}

Vec vec_scale(const Field& F, felem c, const Vec& v) {
  Vec r(v.size(), 0);
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = F.mul(c, v[i]);
  return r;
}

Vec vec_add(const Field& F, const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = F.add(a[i], b[i]);
  return r;
}

Vec vec_sub(const Field& F, const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = F.sub(a[i], b[i]);
  return r;
}

bool vec_is_zero(const Vec& v) {
  for (felem x : v)
    if (x) return false;
  return true;
}

void SMat::set(std::uint32_t i, std::uint32_t j, felem v) {
  require(i < rows && j < cols, "SMat::set: index out of range");
  if (v == 0) return;
  SRow& row = r[i];
  auto it = std::lower_bound(row.begin(), row.end(), j,
                             [](const auto& e, std::uint32_t c) { return e.first < c; });
  require(it == row.end() || it->first != j, "SMat::set: duplicate entry");
  row.insert(it, {j, v});
}

std::size_t SMat::nnz() const {
  std::size_t n = 0;
  for (const auto& row : r) n += row.size();
  return n;
}

SMat smat_from_dense(const DMat& A) {
  SMat S(A.rows, A.cols);
  for (std::uint32_t i = 0; i < A.rows; ++i)
    for (std::uint32_t j = 0; j < A.cols; ++j)
      if (A.at(i, j) != 0) S.r[i].push_back({j, A.at(i, j)});
  return S;
}

DMat smat_to_dense(const SMat& A) {
  DMat D(A.rows, A.cols);
  for (std::uint32_t i = 0; i < A.rows; ++i)
    for (auto [j, v] : A.r[i]) D.at(i, j) = v;
  return D;
}

namespace {

// dst - c * src on sorted sparse rows.
SRow srow_axpy(const Field& F, const SRow& dst, felem c, const SRow& src) {
  SRow out;
  out.reserve(dst.size() + src.size());
  std::size_t i = 0, j = 0;
  while (i < dst.size() || j < src.size()) {
    if (j == src.size() || (i < dst.size() && dst[i].first < src[j].first)) {
      out.push_back(dst[i++]);
    } else if (i == dst.size() || src[j].first < dst[i].first) {
      out.push_back({src[j].first, F.neg(F.mul(c, src[j].second))});
      ++j;
    } else {
      felem v = F.sub(dst[i].second, F.mul(c, src[j].second));
      if (v != 0) out.push_back({dst[i].first, v});
      ++i;
      ++j;
    }
  }
  return out;
}

SRow srow_scale(const Field& F, felem c, const SRow& row) {
  SRow out = row;
  for (auto& [j, v] : out) v = F.mul(c, v);
  return out;
}

}  // namespace

RrefResult rref_sparse(const Field& F, const SMat& A) {
  std::vector<SRow> work = A.r;
  std::vector<std::uint32_t> remaining;
  for (std::uint32_t i = 0; i < A.rows; ++i)
    if (!work[i].empty()) remaining.push_back(i);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> piv;  // (column, row id)
  for (std::uint32_t c = 0; c < A.cols && !remaining.empty(); ++c) {
    // Rows in `remaining` have all columns < c eliminated, so a nonzero in
    // column c is their leading entry.
    std::size_t best = remaining.size();
    for (std::size_t s = 0; s < remaining.size(); ++s) {
      std::uint32_t id = remaining[s];
      if (work[id].front().first != c) continue;
      if (best == remaining.size() ||
          work[id].size() < work[remaining[best]].size())
        best = s;  // Markowitz count, ties fall to the lowest row index
    }
    if (best == remaining.size()) continue;
    std::uint32_t pid = remaining[best];
    remaining.erase(remaining.begin() + best);
    work[pid] = srow_scale(F, F.inv(work[pid].front().second), work[pid]);
    std::vector<std::uint32_t> keep;
    keep.reserve(remaining.size());
    for (std::uint32_t id : remaining) {
      if (work[id].front().first == c)
        work[id] = srow_axpy(F, work[id], work[id].front().second, work[pid]);
      if (!work[id].empty()) keep.push_back(id);
    }
    remaining = std::move(keep);
    piv.push_back({c, pid});
  }

  // Backward pass to full reduced form.
  for (std::size_t i = piv.size(); i-- > 0;) {
    auto [c, pid] = piv[i];
    for (std::size_t j = 0; j < i; ++j) {
      SRow& upper = work[piv[j].second];
      auto it = std::lower_bound(upper.begin(), upper.end(), c,
                                 [](const auto& e, std::uint32_t col) { return e.first < col; });
      if (it != upper.end() && it->first == c)
        upper = srow_axpy(F, upper, it->second, work[pid]);
    }
  }

  RrefResult out;
  out.rank = std::uint32_t(piv.size());
  out.mat = SMat(out.rank, A.cols);
  for (std::size_t i = 0; i < piv.size(); ++i) {
    out.pivots.push_back(piv[i].first);
    out.mat.r[i] = std::move(work[piv[i].second]);
  }
  return out;
}

RrefResult rref_dense(const Field& F, const DMat& A) {
  // Textbook Gauss-Jordan, independent of the sparse path.
  DMat M = A;
  std::vector<std::uint32_t> pivots;
  std::uint32_t row = 0;
  for (std::uint32_t c = 0; c < M.cols && row < M.rows; ++c) {
    std::uint32_t sel = row;
    while (sel < M.rows && M.at(sel, c) == 0) ++sel;
    if (sel == M.rows) continue;
    for (std::uint32_t j = 0; j < M.cols; ++j) std::swap(M.at(row, j), M.at(sel, j));
    felem inv = F.inv(M.at(row, c));
    for (std::uint32_t j = 0; j < M.cols; ++j) M.at(row, j) = F.mul(inv, M.at(row, j));
    for (std::uint32_t i = 0; i < M.rows; ++i) {
      if (i == row || M.at(i, c) == 0) continue;
      felem f = M.at(i, c);
      for (std::uint32_t j = 0; j < M.cols; ++j)
        M.at(i, j) = F.sub(M.at(i, j), F.mul(f, M.at(row, j)));
    }
    pivots.push_back(c);
    ++row;
  }
  RrefResult out;
  out.rank = row;
  out.pivots = pivots;
  DMat top(row, M.cols);
  std::copy(M.a.begin(), M.a.begin() + std::size_t(row) * M.cols, top.a.begin());
  out.mat = smat_from_dense(top);
  return out;
}

DMat kernel_dense(const Field& F, const DMat& A) {
  RrefResult R = rref_dense(F, A);
  DMat M = smat_to_dense(R.mat);
  std::vector<bool> is_pivot(A.cols, false);
  for (auto c : R.pivots) is_pivot[c] = true;
  Echelon ech(F, A.cols);
  for (std::uint32_t f = 0; f < A.cols; ++f) {
    if (is_pivot[f]) continue;
    Vec v(A.cols, 0);
    v[f] = 1;
    for (std::uint32_t i = 0; i < R.rank; ++i)
      v[R.pivots[i]] = F.neg(M.at(i, f));
    ech.insert(std::move(v));
  }
  Subspace S = ech.to_subspace();
  return S.basis;
}

std::optional<SolveResult> solve(const Field& F, const SMat& A, const Vec& rhs) {
  if (rhs.size() != A.rows) throw std::domain_error("solve: rhs length mismatch");
  SMat aug(A.rows, A.cols + 1);
  for (std::uint32_t i = 0; i < A.rows; ++i) {
    aug.r[i] = A.r[i];
    if (rhs[i] != 0) aug.r[i].push_back({A.cols, rhs[i]});
  }
  RrefResult R = rref_sparse(F, aug);
  for (auto c : R.pivots)
    if (c == A.cols) return std::nullopt;

  SolveResult out;
  out.particular.assign(A.cols, 0);
  for (std::uint32_t i = 0; i < R.rank; ++i) {
    const SRow& row = R.mat.r[i];
    if (!row.empty() && row.back().first == A.cols)
      out.particular[R.pivots[i]] = row.back().second;
  }
  out.kernel = kernel_dense(F, smat_to_dense(A));
  return out;
}

Subspace Subspace::zero(const Field&, std::uint32_t ambient) {
  Subspace s;
  s.ambient = ambient;
  s.basis = DMat(0, ambient);
  return s;
}

Subspace Subspace::full(const Field& F, std::uint32_t ambient) {
  return from_dmat(F, DMat::identity(ambient));
}

Subspace Subspace::from_rows(const Field& F, std::uint32_t ambient,
                             const std::vector<Vec>& rows) {
  Echelon ech(F, ambient);
  for (const Vec& v : rows) {
    require(v.size() == ambient, "Subspace::from_rows: row length mismatch");
    ech.insert(v);
  }
  return ech.to_subspace();
}

Subspace Subspace::from_dmat(const Field& F, const DMat& rows) {
  Echelon ech(F, rows.cols);
  for (std::uint32_t i = 0; i < rows.rows; ++i) ech.insert(rows.row_vec(i));
  return ech.to_subspace();
}

Vec Subspace::reduce(const Field& F, Vec v) const {
  require(v.size() == ambient, "Subspace::reduce: length mismatch");
  for (std::uint32_t i = 0; i < basis.rows; ++i) {
    felem c = v[pivots[i]];
    if (c != 0) vec_axpy(F, v, F.neg(c), basis.row_vec(i));
  }
  return v;
}

bool Subspace::contains(const Field& F, const Vec& v) const {
  return vec_is_zero(reduce(F, v));
}

bool Subspace::contains_subspace(const Field& F, const Subspace& o) const {
  require(o.ambient == ambient, "contains_subspace: ambient mismatch");
  for (std::uint32_t i = 0; i < o.basis.rows; ++i)
    if (!contains(F, o.basis.row_vec(i))) return false;
  return true;
}

std::optional<Vec> Subspace::coords(const Field& F, const Vec& v) const {
  // In RREF the candidate coefficients are v's values at the pivot columns.
  require(v.size() == ambient, "Subspace::coords: length mismatch");
  Vec c(basis.rows);
  for (std::uint32_t i = 0; i < basis.rows; ++i) c[i] = v[pivots[i]];
  if (from_coords(F, c) != v) return std::nullopt;
  return c;
}

Vec Subspace::from_coords(const Field& F, const Vec& c) const {
  require(c.size() == basis.rows, "Subspace::from_coords: length mismatch");
  Vec v(ambient, 0);
  for (std::uint32_t i = 0; i < basis.rows; ++i) vec_axpy(F, v, c[i], basis.row_vec(i));
  return v;
}

Subspace subspace_sum(const Field& F, const Subspace& a, const Subspace& b) {
  require(a.ambient == b.ambient, "subspace_sum: ambient mismatch");
  Echelon ech(F, a.ambient);
  for (std::uint32_t i = 0; i < a.basis.rows; ++i) ech.insert(a.basis.row_vec(i));
  for (std::uint32_t i = 0; i < b.basis.rows; ++i) ech.insert(b.basis.row_vec(i));
  return ech.to_subspace();
}

Subspace subspace_intersect(const Field& F, const Subspace& a, const Subspace& b) {
  // Zassenhaus: reduce rows (v|v) for v in a and (w|0) for w in b; the RREF
  // rows supported entirely on the right half span the intersection.
  require(a.ambient == b.ambient, "subspace_intersect: ambient mismatch");
  std::uint32_t n = a.ambient;
  Echelon ech(F, 2 * n);
  for (std::uint32_t i = 0; i < a.basis.rows; ++i) {
    Vec v(2 * n, 0);
    for (std::uint32_t j = 0; j < n; ++j) v[j] = v[n + j] = a.basis.at(i, j);
    ech.insert(std::move(v));
  }
  for (std::uint32_t i = 0; i < b.basis.rows; ++i) {
    Vec v(2 * n, 0);
    for (std::uint32_t j = 0; j < n; ++j) v[j] = b.basis.at(i, j);
    ech.insert(std::move(v));
  }
  Echelon out(F, n);
  for (std::size_t i = 0; i < ech.rows().size(); ++i)
    if (ech.pivots()[i] >= n)
      out.insert(Vec(ech.rows()[i].begin() + n, ech.rows()[i].end()));
  return out.to_subspace();
}

void Echelon::reduce_inplace(Vec& v) const {
  require(v.size() == std::size_t(width_) + aug_, "Echelon: row length mismatch");
  // Rows are fully reduced with strictly increasing pivots: one pass works.
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    felem c = v[pivots_[i]];
    if (c != 0) vec_axpy(*F_, v, F_->neg(c), rows_[i]);
  }
}

bool Echelon::insert(Vec v) {
  reduce_inplace(v);
  std::uint32_t piv = width_;
  for (std::uint32_t j = 0; j < width_; ++j)
    if (v[j] != 0) {
      piv = j;
      break;
    }
  if (piv == width_) return false;  // zero main part (aug tail never pivots)
  felem inv = F_->inv(v[piv]);
  for (auto& x : v) x = F_->mul(inv, x);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    felem c = rows_[i][piv];
    if (c != 0) vec_axpy(*F_, rows_[i], F_->neg(c), v);
  }
  auto pos = std::lower_bound(pivots_.begin(), pivots_.end(), piv);
  std::size_t idx = std::size_t(pos - pivots_.begin());
  pivots_.insert(pos, piv);
  rows_.insert(rows_.begin() + idx, std::move(v));
  return true;
}

bool Echelon::contains(const Vec& v) const {
  Vec w = v;
  w.resize(std::size_t(width_) + aug_, 0);
  reduce_inplace(w);
  for (std::uint32_t j = 0; j < width_; ++j)
    if (w[j] != 0) return false;
  return true;
}

std::optional<Vec> Echelon::express(const Vec& target) const {
  require(target.size() == width_, "Echelon::express: length mismatch");
  Vec v = target;
  v.resize(std::size_t(width_) + aug_, 0);
  reduce_inplace(v);
  for (std::uint32_t j = 0; j < width_; ++j)
    if (v[j] != 0) return std::nullopt;
  Vec x(aug_);
  for (std::uint32_t j = 0; j < aug_; ++j) x[j] = F_->neg(v[width_ + j]);
  return x;
}

Subspace Echelon::to_subspace() const {
  Subspace s;
  s.ambient = width_;
  s.basis = DMat(std::uint32_t(rows_.size()), width_);
  for (std::uint32_t i = 0; i < rows_.size(); ++i)
    std::copy(rows_[i].begin(), rows_[i].begin() + width_, s.basis.row(i));
  s.pivots = pivots_;
  return s;
}

std::map<Vec, Subspace> simultaneous_eigenspaces(const Field& F,
                                                 const std::vector<DMat>& ops,
                                                 const std::vector<Vec>& grid) {
  require(!ops.empty(), "simultaneous_eigenspaces: no operators");
  std::uint32_t n = ops[0].rows;
  for (const DMat& op : ops)
    require(op.rows == n && op.cols == n, "simultaneous_eigenspaces: shape mismatch");
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::size_t j = i + 1; j < ops.size(); ++j)
      if (dmat_mul(F, ops[i], ops[j]) != dmat_mul(F, ops[j], ops[i]))
        throw std::domain_error("simultaneous_eigenspaces: operators do not commute");

  // Eigenspace of each (operator, prime-field eigenvalue) pair, computed once.
  std::vector<std::vector<Subspace>> eig(ops.size());
  for (std::size_t i = 0; i < ops.size(); ++i)
    for (std::uint32_t c = 0; c < F.p; ++c) {
      DMat shifted = ops[i];
      for (std::uint32_t d = 0; d < n; ++d)
        shifted.at(d, d) = F.sub(shifted.at(d, d), c);
      eig[i].push_back(Subspace::from_dmat(F, kernel_dense(F, shifted)));
    }

  std::map<Vec, Subspace> out;
  Echelon independence(F, n);
  std::uint32_t total = 0;
  for (const Vec& tuple : grid) {
    require(tuple.size() == ops.size(), "simultaneous_eigenspaces: tuple arity mismatch");
    for (felem c : tuple)
      require(c < F.p, "simultaneous_eigenspaces: eigenvalue outside prime field");
    Subspace cur = eig[0][tuple[0]];
    for (std::size_t i = 1; i < ops.size() && cur.dim() > 0; ++i)
      cur = subspace_intersect(F, cur, eig[i][tuple[i]]);
    if (cur.dim() == 0) continue;
    for (std::uint32_t r = 0; r < cur.basis.rows; ++r)
      require(independence.insert(cur.basis.row_vec(r)),
              "simultaneous_eigenspaces: joint spaces overlap");
    total += cur.dim();
    out.emplace(tuple, std::move(cur));
  }
  require(total <= n, "simultaneous_eigenspaces: dimensions exceed ambient");
  return out;
}

std::map<Vec, Subspace> simultaneous_eigenspaces(const Field& F,
                                                 const std::vector<DMat>& ops) {
  std::vector<Vec> grid;
  std::size_t r = ops.size();
  std::uint64_t count = 1;
  for (std::size_t i = 0; i < r; ++i) count *= F.p;
  for (std::uint64_t t = 0; t < count; ++t) {
    Vec tuple(r);
    std::uint64_t v = t;
    for (std::size_t i = 0; i < r; ++i) {
      tuple[i] = felem(v % F.p);
      v /= F.p;
    }
    grid.push_back(std::move(tuple));
  }
  return simultaneous_eigenspaces(F, ops, grid);
}

std::string smat_to_text(const Field& F, const SMat& A) {
  std::ostringstream os;
  os << A.rows << ' ' << A.cols << ' ' << A.nnz() << '\n';
  for (std::uint32_t i = 0; i < A.rows; ++i)
    for (auto [j, v] : A.r[i]) os << i << ' ' << j << ' ' << F.elem_str(v) << '\n';
  return os.str();
}

SMat smat_from_text(const Field& F, const std::string& text) {
  std::istringstream is(text);
  std::uint32_t rows, cols;
  std::size_t nnz;
  require(bool(is >> rows >> cols >> nnz), "matrix text: bad header");
  SMat A(rows, cols);
  for (std::size_t e = 0; e < nnz; ++e) {
    std::uint32_t i, j;
    std::string v;
    require(bool(is >> i >> j >> v), "matrix text: truncated entry list");
    felem val = F.parse_elem(v);
    require(val != 0, "matrix text: explicit zero entry");
    A.set(i, j, val);
  }
  std::string tail;
  require(!(is >> tail), "matrix text: trailing data");
  return A;
}

}  // namespace mla
