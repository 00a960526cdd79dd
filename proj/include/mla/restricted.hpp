#pragma once

#include "mla/lie.hpp"

namespace mla {

// x^{[p]} by Jacobson's formula: fold the support terms of x one at a time,
// (a+b)^{[p]} = a^{[p]} + b^{[p]} + sum s_i(a,b), where i*s_i(a,b) is the
// t^{i-1} coefficient of ad(ta+b)^{p-1}(a).  The result is verified against
// the defining identity ad(x^{[p]}) = (ad x)^p (internal-consistency error on
// failure, never a silent return).  Requires L.pmap.
Vec p_power(const LieAlgebra& L, const Vec& x);

bool is_toral(const LieAlgebra& L, const Vec& x);        // x^{[p]} = x
bool is_p_nilpotent(const LieAlgebra& L, const Vec& x);  // some p-power is 0

// The unique table y_i solving ad(y_i) = (ad x_i)^p on the basis of a
// centerless algebra.  Center != 0 is a domain error; a basis vector whose
// adjoint p-th power falls outside ad L raises "not closed under p-th powers"
// naming the witness.
std::vector<Vec> p_map_from_adjoint(const LieAlgebra& L);

// Copy of L with the table attached after the full ad-compatibility check.
LieAlgebra with_pmap(LieAlgebra L, std::vector<Vec> table);

// Smallest subspace of the host matrix algebra containing the images of L's
// basis and closed under matrix p-th powers; bracket closure then holds
// automatically.  The envelope algebra keeps the generators as its leading
// basis vectors, carries the induced p-map, and comes with the verified
// embedding of L.  generator_images must represent L faithfully (checked).
struct PEnvelope {
  LieAlgebra algebra;
  std::vector<DMat> matrices;  // envelope basis as host matrices
  Morphism embedding;          // L into the envelope algebra
};
PEnvelope p_envelope(const LieAlgebra& L, const std::vector<DMat>& generator_images);

// x = semisimple + nilpotent inside the one-generated restricted subalgebra
// <x>_p: iterate p-powers until the span stabilizes; on the stable part the
// p-map is bijective semilinear, so the semisimple part is recovered by
// solving the semilinear system backwards (Frobenius inversion on scalars).
// Both parts commute; the nilpotent part p-powers to zero (checked).
struct JordanChevalley {
  Vec semisimple;
  Vec nilpotent;
};
JordanChevalley jordan_chevalley(const LieAlgebra& L, const Vec& x);

// The set of p-semisimple elements of a nilpotent p-closed subalgebra N (its
// unique maximal torus): semisimple parts of a basis, which are central in N
// and therefore span the torus.  Non-nilpotent or non-p-closed N is a domain
// error.  Returned in ambient coordinates.
Subspace max_torus_of_nilpotent(const LieAlgebra& L, const Subspace& N);

// exp(c ad D) = sum_{j<p} c^j (ad D)^j / j! for p-nilpotent ad D (domain
// error otherwise).  The bracket-compatibility scan and the degree-p cocycle
// sums  sum_{i=1}^{p-1} [ (ad D)^i x, (ad D)^{p-i} y ] / (i!(p-i)!)  are both
// computed on all basis pairs and must agree (they are equivalent for c != 0);
// the morphism is flagged verified exactly when both pass, with the first
// violating pair as witness otherwise.
Morphism exp_ad(const LieAlgebra& L, const Vec& D, felem c);

}  // namespace mla
