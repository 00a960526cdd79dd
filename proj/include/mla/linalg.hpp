#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mla/field.hpp"

namespace mla {

using Vec = std::vector<felem>;

// --- Dense matrices (row-major) ---

struct DMat {
  std::uint32_t rows = 0, cols = 0;
  Vec a;  // rows * cols entries

  DMat() = default;
  DMat(std::uint32_t r, std::uint32_t c) : rows(r), cols(c), a(std::size_t(r) * c, 0) {}

  felem& at(std::uint32_t i, std::uint32_t j) { return a[std::size_t(i) * cols + j]; }
  felem at(std::uint32_t i, std::uint32_t j) const { return a[std::size_t(i) * cols + j]; }

  const felem* row(std::uint32_t i) const { return a.data() + std::size_t(i) * cols; }
  felem* row(std::uint32_t i) { return a.data() + std::size_t(i) * cols; }

  Vec row_vec(std::uint32_t i) const {
    return Vec(a.begin() + std::size_t(i) * cols, a.begin() + std::size_t(i + 1) * cols);
  }

  bool operator==(const DMat& o) const = default;

  static DMat identity(std::uint32_t n) {
    DMat m(n, n);
    for (std::uint32_t i = 0; i < n; ++i) m.at(i, i) = 1;
    return m;
  }
};

DMat dmat_add(const Field& F, const DMat& A, const DMat& B);
DMat dmat_sub(const Field& F, const DMat& A, const DMat& B);
DMat dmat_scale(const Field& F, felem c, const DMat& A);
DMat dmat_mul(const Field& F, const DMat& A, const DMat& B);
DMat dmat_pow(const Field& F, DMat A, std::uint64_t e);  // square matrix
DMat dmat_transpose(const DMat& A);
Vec mat_vec(const Field& F, const DMat& A, const Vec& v);
bool dmat_is_zero(const DMat& A);

// Vector helpers (in-place accumulate: dst += c * src).
void vec_axpy(const Field& F, Vec& dst, felem c, const Vec& src);
Vec vec_scale(const Field& F, felem c, const Vec& v);
Vec vec_add(const Field& F, const Vec& a, const Vec& b);
Vec vec_sub(const Field& F, const Vec& a, const Vec& b);
bool vec_is_zero(const Vec& v);

// --- Sparse matrices: per-row sorted (col, value) pairs, no zeros ---

using SRow = std::vector<std::pair<std::uint32_t, felem>>;

struct SMat {
  std::uint32_t rows = 0, cols = 0;
  std::vector<SRow> r;

  SMat() = default;
  SMat(std::uint32_t rr, std::uint32_t cc) : rows(rr), cols(cc), r(rr) {}

  void set(std::uint32_t i, std::uint32_t j, felem v);  // builds rows in order
  std::size_t nnz() const;
  bool operator==(const SMat& o) const = default;
};

SMat smat_from_dense(const DMat& A);
DMat smat_to_dense(const SMat& A);

// Canonical reduced row echelon form.  Pivot policy for the sparse
// elimination: lowest remaining column; among candidate rows the fewest
// off-diagonal entries (Markowitz count), ties broken by lowest original row
// index.  The output (being the canonical RREF with zero rows dropped) is
// independent of the policy; the policy fixes the elimination order.
struct RrefResult {
  SMat mat;                          // rank many nonzero rows, reduced
  std::uint32_t rank = 0;
  std::vector<std::uint32_t> pivots;  // strictly increasing pivot columns
};

RrefResult rref_sparse(const Field& F, const SMat& A);
RrefResult rref_dense(const Field& F, const DMat& A);  // independent oracle path

// Kernel (null space of x -> A x, column vectors) as canonical RREF rows.
DMat kernel_dense(const Field& F, const DMat& A);

// Exact solve of A x = rhs: a particular solution plus the kernel, or nullopt
// when inconsistent.  Dimension mismatch is a domain error.
struct SolveResult {
  Vec particular;
  DMat kernel;  // canonical RREF rows spanning the solution space of A x = 0
};
std::optional<SolveResult> solve(const Field& F, const SMat& A, const Vec& rhs);

// --- Canonical subspaces ---

// Row space in canonical RREF; equality of subspaces is equality of the data.
struct Subspace {
  std::uint32_t ambient = 0;
  DMat basis;                         // rank x ambient, RREF, no zero rows
  std::vector<std::uint32_t> pivots;  // strictly increasing

  std::uint32_t dim() const { return basis.rows; }
  bool operator==(const Subspace& o) const = default;

  static Subspace zero(const Field& F, std::uint32_t ambient);
  static Subspace full(const Field& F, std::uint32_t ambient);
  static Subspace from_rows(const Field& F, std::uint32_t ambient,
                            const std::vector<Vec>& rows);
  static Subspace from_dmat(const Field& F, const DMat& rows);

  bool contains(const Field& F, const Vec& v) const;
  bool contains_subspace(const Field& F, const Subspace& o) const;
  // Residual of v after reduction by the basis (zero iff contained).
  Vec reduce(const Field& F, Vec v) const;
  // Coefficients c with v = sum c_i basis_i; nullopt if v is not in the span.
  std::optional<Vec> coords(const Field& F, const Vec& v) const;
  Vec from_coords(const Field& F, const Vec& c) const;
};

Subspace subspace_sum(const Field& F, const Subspace& a, const Subspace& b);
Subspace subspace_intersect(const Field& F, const Subspace& a, const Subspace& b);

// --- Incremental echelonizer ---
//
// Maintains a full RREF basis of the vectors inserted so far; `aug` extra
// trailing columns ride along without ever hosting a pivot, which turns the
// object into an exact solver: insert rows of B augmented by identity tags,
// then express(target) returns x with x B = target when target is in the
// row span.
class Echelon {
 public:
  Echelon(const Field& F, std::uint32_t width, std::uint32_t aug = 0)
      : F_(&F), width_(width), aug_(aug) {}

  std::uint32_t rank() const { return std::uint32_t(rows_.size()); }
  std::uint32_t width() const { return width_; }

  // Reduces v (length width + aug) against the current rows in place.
  void reduce_inplace(Vec& v) const;

  // Inserts v; returns true when the rank grows (v independent of the span).
  bool insert(Vec v);

  bool contains(const Vec& v) const;

  // Combination coefficients over the augmented tag columns: for an object
  // seeded via insert(row_i ++ e_i), returns x with sum x_i row_i = target.
  std::optional<Vec> express(const Vec& target) const;

  // The main-column part as a canonical Subspace.
  Subspace to_subspace() const;

  const std::vector<Vec>& rows() const { return rows_; }
  const std::vector<std::uint32_t>& pivots() const { return pivots_; }

 private:
  const Field* F_;
  std::uint32_t width_, aug_;
  std::vector<Vec> rows_;             // RREF rows, pivots strictly increasing
  std::vector<std::uint32_t> pivots_;  // pivot column of each row (< width_)
};

// --- Joint eigenspaces over the prime-field grid ---
//
// For commuting square matrices op_1..op_r (checked; non-commuting input is a
// domain error) and each tuple (c_1..c_r) of the grid, the joint eigenspace
// of op_i with eigenvalue c_i (prime-subfield scalars).  Tuples with zero
// joint space are omitted.  Distinct tuples give independent spaces; the
// total dimension never exceeds the ambient one (both asserted).
std::map<Vec, Subspace> simultaneous_eigenspaces(const Field& F,
                                                 const std::vector<DMat>& ops,
                                                 const std::vector<Vec>& grid);
// Full grid F_p^r.
std::map<Vec, Subspace> simultaneous_eigenspaces(const Field& F,
                                                 const std::vector<DMat>& ops);

// --- Coordinate text exchange format ---
//
// Header "rows cols nnz", then one "i j v" line per entry (0-based indices,
// values as field-element strings), entries in row-major order.
std::string smat_to_text(const Field& F, const SMat& A);
SMat smat_from_text(const Field& F, const std::string& text);

}  // namespace mla
