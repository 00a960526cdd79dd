#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mla/linalg.hpp"
#include "mla/prng.hpp"

using namespace mla;

namespace {

SMat random_sparse(const Field& F, Prng& rng, std::uint32_t rows,
                   std::uint32_t cols, std::uint32_t fill_percent) {
  DMat D(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j)
      if (rng.below(100) < fill_percent) D.at(i, j) = rng.elem(F);
  return smat_from_dense(D);
}

Subspace random_subspace(const Field& F, Prng& rng, std::uint32_t ambient,
                         std::uint32_t gens) {
  std::vector<Vec> rows;
  for (std::uint32_t g = 0; g < gens; ++g) {
    Vec v(ambient);
    for (auto& x : v) x = rng.elem(F);
    rows.push_back(std::move(v));
  }
  return Subspace::from_rows(F, ambient, rows);
}

}  // namespace

TEST_CASE("rref: pinned examples") {
  Field F = Field::prime_field(5);

  SMat I3 = smat_from_dense(DMat::identity(3));
  RrefResult r = rref_sparse(F, I3);
  CHECK(r.rank == 3);
  CHECK(r.mat == I3);
  CHECK(r.pivots == std::vector<std::uint32_t>{0, 1, 2});

  CHECK(rref_sparse(F, SMat(4, 6)).rank == 0);

  // [[1,2],[2,4]]: rank 1, kernel spanned by (3,1) (canonical RREF of the
  // kernel rescales to (1,2)).
  DMat A(2, 2);
  A.at(0, 0) = 1;
  A.at(0, 1) = 2;
  A.at(1, 0) = 2;
  A.at(1, 1) = 4;
  RrefResult ra = rref_sparse(F, smat_from_dense(A));
  CHECK(ra.rank == 1);
  DMat K = kernel_dense(F, A);
  REQUIRE(K.rows == 1);
  Vec k = K.row_vec(0);
  CHECK(mat_vec(F, A, k) == Vec{0, 0});
  CHECK(Subspace::from_dmat(F, K) ==
        Subspace::from_rows(F, 2, {Vec{3, 1}}));
}

TEST_CASE("rref idempotence and sparse/dense agreement") {
  Field F = Field::prime_field(5);
  Prng rng(17);
  for (int n = 0; n < 100; ++n) {
    std::uint32_t rows = 1 + std::uint32_t(rng.below(200));
    std::uint32_t cols = 1 + std::uint32_t(rng.below(200));
    std::uint32_t fill = 1 + std::uint32_t(rng.below(30));
    SMat A = random_sparse(F, rng, rows, cols, fill);

    RrefResult rs = rref_sparse(F, A);
    RrefResult rd = rref_dense(F, smat_to_dense(A));
    CHECK(rs.rank == rd.rank);
    CHECK(rs.pivots == rd.pivots);
    CHECK(rs.mat == rd.mat);

    RrefResult again = rref_sparse(F, rs.mat);
    CHECK(again.mat == rs.mat);

    DMat K = kernel_dense(F, smat_to_dense(A));
    CHECK(rs.rank + K.rows == cols);  // rank-nullity
    for (std::uint32_t i = 0; i < K.rows; ++i)
      CHECK(vec_is_zero(mat_vec(F, smat_to_dense(A), K.row_vec(i))));
    // Kernel canonical across routes: dense kernel of the sparse-reduced
    // matrix equals the kernel of the original.
    CHECK(kernel_dense(F, smat_to_dense(rs.mat)) == K);
  }
}

TEST_CASE("solve: pinned examples and random systems") {
  Field F = Field::prime_field(5);

  SMat I3 = smat_from_dense(DMat::identity(3));
  auto r = solve(F, I3, Vec{2, 0, 4});
  REQUIRE(r.has_value());
  CHECK(r->particular == Vec{2, 0, 4});
  CHECK(r->kernel.rows == 0);

  SMat Z(1, 2);
  CHECK(!solve(F, Z, Vec{1}).has_value());
  CHECK_THROWS_AS(solve(F, Z, Vec{1, 2, 3}), std::domain_error);

  Prng rng(23);
  for (int n = 0; n < 25; ++n) {
    SMat A = random_sparse(F, rng, 50, 80, 10);
    Vec x(80);
    for (auto& v : x) v = rng.elem(F);
    Vec rhs = mat_vec(F, smat_to_dense(A), x);
    auto s = solve(F, A, rhs);
    REQUIRE(s.has_value());
    CHECK(mat_vec(F, smat_to_dense(A), s->particular) == rhs);
    std::uint32_t rank = rref_dense(F, smat_to_dense(A)).rank;
    CHECK(s->kernel.rows == 80 - rank);
  }
}

TEST_CASE("subspace calculus: canonical forms, sum, intersection") {
  Field F = Field::prime_field(5);
  Prng rng(31);
  for (int n = 0; n < 50; ++n) {
    std::uint32_t dim = 4 + std::uint32_t(rng.below(20));
    Subspace A = random_subspace(F, rng, dim, 1 + std::uint32_t(rng.below(dim)));
    Subspace B = random_subspace(F, rng, dim, 1 + std::uint32_t(rng.below(dim)));

    Subspace S = subspace_sum(F, A, B);
    Subspace I = subspace_intersect(F, A, B);
    CHECK(S.dim() + I.dim() == A.dim() + B.dim());
    CHECK(A.contains_subspace(F, I));
    CHECK(B.contains_subspace(F, I));
    CHECK(S.contains_subspace(F, A));
    CHECK(S.contains_subspace(F, B));

    // Canonicality: rebuilding from shuffled spanning sets reproduces the
    // exact same data.
    std::vector<Vec> spanning;
    for (std::uint32_t i = 0; i < A.basis.rows; ++i) spanning.push_back(A.basis.row_vec(i));
    for (int extra = 0; extra < 5; ++extra) {
      Vec v(dim, 0);
      for (std::uint32_t i = 0; i < A.basis.rows; ++i)
        vec_axpy(F, v, rng.elem(F), A.basis.row_vec(i));
      spanning.push_back(std::move(v));
    }
    std::shuffle(spanning.begin(), spanning.end(),
                 std::mt19937_64(n));
    CHECK(Subspace::from_rows(F, dim, spanning) == A);

    // coords round trip on members; non-members rejected.
    Vec c(A.dim());
    for (auto& x : c) x = rng.elem(F);
    Vec v = A.from_coords(F, c);
    CHECK(A.contains(F, v));
    auto back = A.coords(F, v);
    REQUIRE(back.has_value());
    CHECK(*back == c);
    if (A.dim() < dim) {
      // Some standard basis vector lies outside A: pick a non-pivot column
      // whose reduction is nonzero.
      bool found = false;
      for (std::uint32_t j = 0; j < dim && !found; ++j) {
        Vec e(dim, 0);
        e[j] = 1;
        if (!A.contains(F, e)) {
          CHECK(!A.coords(F, e).has_value());
          found = true;
        }
      }
      CHECK(found);
    }
  }
}

TEST_CASE("echelon solver expresses targets in the row span") {
  Field F = Field::prime_field(5);
  Prng rng(37);
  for (int n = 0; n < 50; ++n) {
    std::uint32_t rows = 1 + std::uint32_t(rng.below(12));
    std::uint32_t cols = 1 + std::uint32_t(rng.below(12));
    std::vector<Vec> B;
    Echelon ech(F, cols, rows);
    for (std::uint32_t i = 0; i < rows; ++i) {
      Vec v(cols);
      for (auto& x : v) x = rng.elem(F);
      B.push_back(v);
      Vec tagged = v;
      tagged.resize(cols + rows, 0);
      tagged[cols + i] = 1;
      ech.insert(std::move(tagged));
    }
    Vec x(rows);
    for (auto& v : x) v = rng.elem(F);
    Vec target(cols, 0);
    for (std::uint32_t i = 0; i < rows; ++i) vec_axpy(F, target, x[i], B[i]);
    auto sol = ech.express(target);
    REQUIRE(sol.has_value());
    Vec recon(cols, 0);
    for (std::uint32_t i = 0; i < rows; ++i) vec_axpy(F, recon, (*sol)[i], B[i]);
    CHECK(recon == target);

    Vec outside(cols, 0);
    for (auto& v : outside) v = rng.elem(F);
    if (!ech.contains(outside)) CHECK(!ech.express(outside).has_value());
  }
}

TEST_CASE("simultaneous eigenspaces: pinned example and checks") {
  Field F = Field::prime_field(5);
  DMat D(3, 3);
  D.at(1, 1) = 1;
  D.at(2, 2) = 1;
  auto spaces = simultaneous_eigenspaces(F, {D});
  REQUIRE(spaces.size() == 2);
  CHECK(spaces.at(Vec{0}).dim() == 1);
  CHECK(spaces.at(Vec{1}).dim() == 2);

  // Eigenvector property.
  for (const auto& [tuple, space] : spaces)
    for (std::uint32_t i = 0; i < space.basis.rows; ++i) {
      Vec v = space.basis.row_vec(i);
      CHECK(mat_vec(F, D, v) == vec_scale(F, tuple[0], v));
    }

  DMat P(2, 2), Q(2, 2);
  P.at(0, 1) = 1;  // strictly upper
  Q.at(1, 0) = 1;  // strictly lower: PQ != QP
  CHECK_THROWS_AS(simultaneous_eigenspaces(F, {P, Q}), std::domain_error);

  // Two commuting diagonals over a custom grid.
  DMat A(2, 2), B(2, 2);
  A.at(0, 0) = 1;
  A.at(1, 1) = 2;
  B.at(0, 0) = 3;
  B.at(1, 1) = 3;
  auto joint = simultaneous_eigenspaces(F, {A, B}, {Vec{1, 3}, Vec{2, 3}, Vec{0, 0}});
  CHECK(joint.size() == 2);
  CHECK(joint.at(Vec{1, 3}).dim() == 1);
  CHECK(joint.at(Vec{2, 3}).dim() == 1);
}

TEST_CASE("matrix text exchange format") {
  Field F = Field::prime_field(5);
  Prng rng(41);
  SMat A = random_sparse(F, rng, 7, 9, 25);
  SMat back = smat_from_text(F, smat_to_text(F, A));
  CHECK(back == A);

  CHECK_THROWS_AS(smat_from_text(F, "oops"), verification_error);
  CHECK_THROWS_AS(smat_from_text(F, "2 2 1\n0 0 0\n"), verification_error);
  CHECK_THROWS_AS(smat_from_text(F, "2 2 2\n0 0 1\n"), verification_error);
  CHECK_THROWS_AS(smat_from_text(F, "1 1 1\n0 0 1\nrest"), verification_error);

  Field F2 = Field::extension(5, 2);
  SMat B(2, 3);
  B.set(0, 1, 7);
  B.set(1, 2, 24);
  CHECK(smat_from_text(F2, smat_to_text(F2, B)) == B);
}
