#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mla/lie.hpp"
#include "mla/restricted.hpp"

namespace mla {

// Truncated divided power algebra O(m;n): basis x^(a) = prod_i x_i^(a_i) with
// 0 <= a_i < p^{n_i} and product x^(a) x^(b) = prod_i C(a_i+b_i, a_i) x^(a+b).
// The binomials are taken mod p; when a+b leaves the bounds the coefficient
// vanishes mod p anyway (a base-p carry is forced), so truncation is exact.
// Monomials are ranked by total degree, then lexicographically by exponents.
struct DPAmbient {
  Field F;
  std::uint32_t m = 0;                           // number of variables
  std::vector<std::uint32_t> heights;            // n_i
  std::vector<std::uint32_t> bounds;             // p^{n_i}
  std::uint32_t size = 0;                        // number of monomials
  std::vector<std::vector<std::uint32_t>> exps;  // rank -> exponent tuple
  std::vector<std::uint32_t> degree;             // rank -> total degree
  std::vector<std::uint32_t> stride;             // mixed-radix code strides
  std::vector<std::uint32_t> rank_by_code;       // code -> rank

  bool in_bounds(const std::vector<std::uint32_t>& a) const;
  std::uint32_t rank(const std::vector<std::uint32_t>& a) const;  // a in bounds
};

using DPAmbientPtr = std::shared_ptr<const DPAmbient>;

DPAmbientPtr dp_ambient(const Field& F, std::vector<std::uint32_t> heights);

// Sparse element of O(m;n): monomial rank -> nonzero coefficient.
struct DPElement {
  DPAmbientPtr amb;
  std::map<std::uint32_t, felem> terms;

  bool is_zero() const { return terms.empty(); }
  bool operator==(const DPElement& o) const { return terms == o.terms; }
};

DPElement dp_zero(DPAmbientPtr amb);
DPElement dp_one(DPAmbientPtr amb);
DPElement dp_monomial(DPAmbientPtr amb, const std::vector<std::uint32_t>& a,
                      felem c = 1);
DPElement dp_var(DPAmbientPtr amb, std::uint32_t i);  // x_{i+1}
felem dp_coeff(const DPElement& f, const std::vector<std::uint32_t>& a);

DPElement dp_add(const DPElement& f, const DPElement& g);
DPElement dp_sub(const DPElement& f, const DPElement& g);
DPElement dp_scale(felem c, const DPElement& f);

// Product; bilinear, commutative, associative.  Ambient mismatch (different
// p, variable count, or heights) is a domain error.
DPElement dp_mul(const DPElement& f, const DPElement& g);

// k-th divided power of an element with zero constant term (domain error
// otherwise), via (t+g)^(k) = sum_i t^(i) g^(k-i) over the terms and
// (c x^(a))^(k) = c^k [(ka)!/((a!)^k k!)] x^(ka), the bracketed integer
// evaluated mod p through base-p factorial (valuation, unit) pairs.
DPElement dp_divided_power(const DPElement& f, std::uint32_t k);

// i-th partial derivative: x^(a) -> x^(a - e_i).
DPElement dp_partial(const DPElement& f, std::uint32_t i);

// Multiplicative inverse of an element whose constant term is nonzero
// (domain error otherwise): Neumann series on the augmentation-ideal part,
// which is nilpotent; the product with the input is re-checked to be 1.
DPElement dp_inverse(const DPElement& f);

// Text form: terms "c·x1^(a)·x2^(b)" (zero exponents omitted, bare "c" for
// the constant term) joined by " + " in basis order; "0" for zero.
std::string dp_to_text(const DPElement& f);

// Special derivation sum_i comp[i] d_i of O(m;n).
struct WElement {
  std::vector<DPElement> comp;

  bool is_zero() const;
  bool operator==(const WElement& o) const;
};

WElement w_zero(DPAmbientPtr amb);
WElement w_add(const WElement& D, const WElement& E);
WElement w_sub(const WElement& D, const WElement& E);
WElement w_scale(felem c, const WElement& D);
DPElement w_apply(const WElement& D, const DPElement& f);
WElement w_bracket(const WElement& D, const WElement& E);

// Hamiltonian derivation of f over O(2;n): D_H(f) = D1(f) D2 - D2(f) D1.
// Kernel = constants.  Requires m = 2.
WElement d_h(const DPElement& f);

// W(m;n), the special derivation algebra: basis x^(a) d_i ordered by
// (monomial rank, direction), grading deg x^(a) d_i = |a| - 1, structure
// constants from w_bracket, Jacobi checked at construction.
struct WittAlgebra {
  DPAmbientPtr amb;
  LieAlgebra algebra;           // dim m * size
  std::vector<WElement> basis;  // meaning of each basis vector

  Vec coords(const WElement& D) const;  // exact unpacking
  WElement element(const Vec& v) const;
};

WittAlgebra witt(const Field& F, std::vector<std::uint32_t> heights);

// The Hamiltonian chain over O(2;(2,1)): s is the second derived subalgebra
// of the span of all Hamiltonian derivations plus the three outer directions
// (computed via the derived series, then given the interior monomial basis
// D_H(x^(a)), 0 < a < top, verified to span that output); g adds the outer
// derivations v1 = x1^(q-1) D2, v2 = -x2^(p-1) D1, v3 = D_H(x^(top)) where
// q = p^2; s_p and gp are the restricted closures inside gl(s), each adding
// the p-th power of D1.  Dimensions: p^3-2, p^3+1, p^3-1, p^3+2.
struct HamiltonianCast {
  DPAmbientPtr amb;   // O(2;(2,1))
  WittAlgebra w;      // W(2;(2,1)), dim 2 p^3
  LieAlgebra s;       // graded
  LieAlgebra g;       // graded
  PEnvelope s_p;      // restricted, graded
  PEnvelope gp;       // restricted, graded
  std::vector<WElement> s_basis;
  std::vector<WElement> g_basis;   // s_basis + v1, v2, v3
  Filtration s_filt, g_filt;       // degree-descending components from the grading
  Vec d1p_sp, d1p_gp;              // coordinates of the operator D1^p
  Morphism s_to_g, s_to_w, g_to_w, sp_to_gp;

  Vec s_coords(const WElement& D) const;  // domain error when outside the span
  Vec g_coords(const WElement& D) const;
  // Element w + c * D1^p in envelope coordinates (w expressed in s resp. g).
  Vec sp_element(const WElement& in_s, felem c) const;
  Vec gp_element(const WElement& in_g, felem c) const;

  std::shared_ptr<const Echelon> s_ech, g_ech;  // coordinate solvers
};

HamiltonianCast hamiltonian_cast(const Field& F);

// Substitution endomorphism of O(m;n) from images of the variables (all in
// the augmentation ideal): x^(a) -> prod_i gamma_{a_i}(images[i]).  The map
// is checked bijective (domain error otherwise) and multiplicative on all
// monomial pairs ("inadmissible substitution" with a witness pair otherwise).
struct SubstMap {
  DPAmbientPtr amb;
  std::vector<DPElement> images;
  DMat matrix;   // size x size on the monomial basis
  DMat inverse;
};

SubstMap substitution_map(DPAmbientPtr amb, std::vector<DPElement> images);

// Conjugate E -> sigma E sigma^{-1} of a special derivation.  The conjugate
// of a derivation is a derivation; when it fails to be special (not of the
// form sum f_i d_i) the substitution is inadmissible: domain error with a
// witness monomial.
WElement conjugate_derivation(const SubstMap& s, const WElement& E);

// Automorphism induced on an algebra of special derivations: each basis
// meaning is conjugated and re-expressed (domain error when the conjugate
// escapes the span); the returned morphism carries the bracket-check flag.
Morphism induced_automorphism(const SubstMap& s, const LieAlgebra& L,
                              const std::vector<WElement>& basis_meaning);

}  // namespace mla
