#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mla/linalg.hpp"

namespace mla {

// Finite-dimensional Lie algebra given by structure constants on a fixed
// basis.  Constants are stored for i < j only (antisymmetry by construction);
// the Jacobi identity is checked on all basis triples at construction unless
// the constructing code is itself a verified construction for which Jacobi is
// a theorem.  The optional pmap table is validated against
// ad(x^[p]) = (ad x)^p on the whole basis, the optional grading against
// [L_a, L_b] ⊆ L_{a+b}.
struct LieAlgebra {
  Field F;
  std::uint32_t dim = 0;
  std::vector<std::string> labels;
  std::vector<SRow> c;  // dim*dim slots, entry i*dim+j meaningful for i < j
  std::optional<std::vector<Vec>> pmap;   // basis index -> x_i^{[p]}
  std::optional<std::vector<int>> grading;  // basis index -> degree

  bool operator==(const LieAlgebra& o) const = default;

  // [x_i, x_j] as a sparse row (handles i > j by sign, i == j -> empty).
  SRow bracket_basis(std::uint32_t i, std::uint32_t j) const;

  Vec bracket(const Vec& x, const Vec& y) const;

  DMat ad(const Vec& x) const;         // y -> [x, y]
  DMat ad_basis(std::uint32_t i) const;

  Vec basis_vec(std::uint32_t i) const {
    Vec v(dim, 0);
    v[i] = 1;
    return v;
  }

  Vec p_power_basis(std::uint32_t i) const {
    require(pmap.has_value(), "algebra has no p-map");
    return (*pmap)[i];
  }
};

// Incremental construction; build() runs the construction-time validation.
class LieBuilder {
 public:
  LieBuilder(const Field& F, std::uint32_t dim);

  void label(std::uint32_t i, std::string s) { labels_[i] = std::move(s); }
  // Adds c to the (i,j,k) structure constant, i != j, either order.
  void add(std::uint32_t i, std::uint32_t j, std::uint32_t k, felem v);
  void set_pmap(std::vector<Vec> table) { pmap_ = std::move(table); }
  void set_grading(std::vector<int> degrees) { grading_ = std::move(degrees); }

  // defer_jacobi is reserved for verified constructions (Jacobi a theorem).
  LieAlgebra build(bool defer_jacobi = false);

 private:
  Field F_;
  std::uint32_t dim_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::pair<std::uint32_t, felem>>> acc_;  // unsorted
  std::optional<std::vector<Vec>> pmap_;
  std::optional<std::vector<int>> grading_;
};

// Residual of the Jacobi identity on one basis triple (zero vector iff Jacobi
// holds there); exposed for property tests on random triples.
Vec jacobi_residual(const LieAlgebra& L, std::uint32_t i, std::uint32_t j,
                    std::uint32_t k);

// Attaches a grading after construction, with the same validation the builder
// runs: every structure constant must respect deg[k] = deg[i] + deg[j].
LieAlgebra with_grading(LieAlgebra L, std::vector<int> degrees);

// (ad e_i)^e via e sparse applications per column; equals dmat_pow of the
// adjoint matrix but tracks the fill of the structure constants instead of
// paying the dense cube.
DMat ad_basis_pow(const LieAlgebra& L, std::uint32_t i, std::uint32_t e);

// Linear map between algebras in basis coordinates (matrix is dst_dim x
// src_dim).  verified means bracket compatibility holds on all basis pairs;
// witness holds an offending pair otherwise.
struct Morphism {
  std::uint32_t src_dim = 0, dst_dim = 0;
  DMat matrix;
  bool verified = false;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> witness;

  Vec apply(const Field& F, const Vec& v) const { return mat_vec(F, matrix, v); }
};

// Checks phi([x_i, x_j]) = [phi x_i, phi x_j] on all basis pairs and flags
// the morphism accordingly.
Morphism make_morphism(const LieAlgebra& src, const LieAlgebra& dst, DMat m);
Morphism identity_morphism(const LieAlgebra& L);
Morphism compose(const Field& F, const Morphism& g, const Morphism& f);  // g after f
Morphism invert(const Field& F, const Morphism& m);  // bijective m

enum class ClosureMode { subalgebra, ideal };

// Least subspace containing gens and closed under bracketing with itself
// (subalgebra) or with all of L (ideal).
Subspace closure(const LieAlgebra& L, const std::vector<Vec>& gens, ClosureMode mode);

// Subspace spanned by all [a, b], a in A, b in B.
Subspace span_bracket(const LieAlgebra& L, const Subspace& A, const Subspace& B);

// {x in A : [x, S] = 0} (A defaults to L).
Subspace centralizer(const LieAlgebra& L, const Subspace& S);
Subspace centralizer_in(const LieAlgebra& L, const Subspace& A, const Subspace& S);
Subspace center(const LieAlgebra& L);
// {x in L : [x, S] ⊆ S}.
Subspace normalizer(const LieAlgebra& L, const Subspace& S);

enum class SeriesKind { derived, lower_central };

// Descending series of the subalgebra S until stabilization; the first entry
// is S itself.  Non-subalgebra input is a domain error.
std::vector<Subspace> series(const LieAlgebra& L, const Subspace& S, SeriesKind kind);
bool is_solvable(const LieAlgebra& L, const Subspace& S);
bool is_nilpotent(const LieAlgebra& L, const Subspace& S);
bool is_abelian(const LieAlgebra& L, const Subspace& S);

// Whether the span of S is closed under the bracket / is an ideal.
bool is_subalgebra(const LieAlgebra& L, const Subspace& S);
bool is_ideal(const LieAlgebra& L, const Subspace& S);

// Quotient L/I on the canonical complement basis (standard basis vectors at
// the non-pivot columns of I), with the verified projection.  Non-ideal input
// is a domain error.
struct QuotientResult {
  LieAlgebra algebra;
  Morphism projection;
  std::vector<std::uint32_t> complement;  // L-basis indices representing Q
};
QuotientResult quotient(const LieAlgebra& L, const Subspace& I);

// The span of S as an abstract algebra on S's canonical basis, with the
// verified inclusion.  S must be bracket-closed (domain error otherwise).
struct SubalgebraResult {
  LieAlgebra algebra;
  Morphism inclusion;
};
SubalgebraResult subalgebra(const LieAlgebra& L, const Subspace& S);

// Full derivation algebra: all matrices D with D[x,y] = [Dx,y] + [x,Dy].
// Solved through a generating set (derivations are determined by generator
// images); candidate solutions from a sampled constraint subset are verified
// against the full Leibniz system, so the result is exact.  The abstract
// algebra carries matrix-commutator structure constants.
struct Derivations {
  std::vector<DMat> matrices;
  LieAlgebra algebra;
  std::vector<Vec> generators;  // the generating vectors the solve ran on
};
Derivations derivations(const LieAlgebra& L, std::uint64_t seed = 1);

// Small generating set of L as found by seeded greedy search: basis vectors
// first, then random vectors.
std::vector<Vec> generating_set(const LieAlgebra& L, std::uint64_t seed = 1);

// Minimal nonzero ideals discovered by seeded spinning: ideal closures of
// kernel vectors of random singular adjoint-algebra words, of basis vectors,
// and of pairwise intersections, each minimized by repeated proper-subideal
// search (attempt budget per ideal).  Deterministic given the seed; the log
// records every witness word.
struct MinimalIdeals {
  std::vector<Subspace> ideals;  // sorted by (dim, basis data)
  std::string witness_log;
};
MinimalIdeals minimal_ideals(const LieAlgebra& L, std::uint64_t seed = 1);

// Descending filtration ... ⊇ L_(i) ⊇ L_(i+1) ⊇ ... with spaces stored for
// degrees lo..hi and both ends stabilized: at(d) = at(lo) for d < lo and
// at(d) = at(hi) for d > hi exactly.
struct Filtration {
  int lo = 0, hi = 0;
  std::vector<Subspace> spaces;  // spaces[d - lo]

  const Subspace& at(int d) const {
    if (d < lo) return spaces.front();
    if (d > hi) return spaces.back();
    return spaces[std::size_t(d - lo)];
  }
};

// Standard Weisfeiler filtration built from L_(-1) and L_(0):
//   L_(i)  = {x in L_(i-1) : [x, L_(-1)] ⊆ L_(i-1)}   (i > 0)
//   L_(-i) = [L_(-1), L_(-i+1)] + L_(-i+1)            (i > 1)
// Preconditions (domain errors): L_(0) ⊆ L_(-1), L_(0) a subalgebra,
// [L_(0), L_(-1)] ⊆ L_(-1).  (L_(-1) is deliberately not required to be
// bracket-closed: the negative chain descends exactly when it is not.)
// The output satisfies
// [L_(i), L_(j)] ⊆ L_(i+j) for all stored degrees (checked).
Filtration weisfeiler_filtration(const LieAlgebra& L, const Subspace& l_minus1,
                                 const Subspace& l_zero);

// Variant recursion reading the positive step as bracketing against
// L_(i-1) itself: L_(i) = {x in L_(i-1) : [x, L_(i-1)] ⊆ L_(i-1)}; provided
// for comparison with the standard recursion.
Filtration weisfeiler_filtration_variant(const LieAlgebra& L,
                                         const Subspace& l_minus1,
                                         const Subspace& l_zero);

// Associated graded algebra: basis = canonical representatives of
// L_(d)/L_(d+1) for each stored degree, grading attached, graded structure
// constants from brackets of representatives reduced at degree sum.
struct GradedAlgebra {
  LieAlgebra algebra;          // with grading set
  std::vector<Vec> reps;       // representative vectors in L coordinates
  std::vector<int> degrees;    // degree of each representative
  std::uint32_t dim_at(int d) const;
};
GradedAlgebra graded_algebra(const LieAlgebra& L, const Filtration& filt);

// Matrix of op restricted to S in S's basis coordinates; op(S) ⊆ S required.
DMat restrict_operator(const Field& F, const DMat& op, const Subspace& S);

// JSON exchange: {field, dim, labels, brackets: [[i, j, [[k, c], ...]], ...],
// pmap?, grading?}; indices 0-based, coefficients as field-element strings.
std::string algebra_to_json(const LieAlgebra& L);
LieAlgebra algebra_from_json(const std::string& text);

}  // namespace mla
