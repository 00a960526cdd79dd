#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mla/divided_power.hpp"
#include "mla/report.hpp"

namespace mla {

// Distinguished toral element of the Hamiltonian chain for a residue
// parameter mu: with r = 1 + mu*x1^(p-1) and rt = x1 + mu*x1^(p),
//   t = D_H(rt + r*rt*x2^(p-1)),
//   n = D1^p + mu*D_H(x2^(p)),
//   h = D_H(r^{-1}x2 - x2^(p)),
// together with its centralizer C in the full restricted envelope and the
// abelian core C' spanned by all D_H(u + u'*rt*x2^(p-1)) with u a polynomial
// in x1, plus the outer derivation D_H(x1^(p^2)).  All vectors are in
// envelope coordinates.
struct TmuData {
  felem mu = 0;
  Vec t_mu;
  DPElement r, r_tilde;
  Vec n_mu, h_mu;
  Subspace Cmu, CmuPrime;
};

// Builds the data for mu in {0, 1} and machine-checks the construction:
// torality of t (via the p-map and, as an independent oracle, the closed
// p-power formula for the whole family D_H(rt + f*x2^(p-1)) on sample f,
// whose fixed point is exactly f = rt*r), h^[p] = -mu*h - n, n^[p] = 0, and
// that the core is abelian of codimension 2 in the centralizer.
TmuData make_t_mu(const HamiltonianCast& H, felem mu);

// phi_a(v) = sum_{i<p} a^i D_H(r^{-i}*v*x2^(i)) + a^{p-1} D_H(rt*v'*x2^(p-1))
// for v a polynomial in x1 alone (domain error otherwise), in envelope
// coordinates.  For a != 0 this is an eigenvector of ad t with eigenvalue a,
// and v -> phi_a(v) parameterizes the full eigenspace.
Vec phi(const HamiltonianCast& H, felem mu, felem a, const DPElement& v);

// Structure report for the centralizer of t: dimension p^2 + 2, abelian core
// of codimension 2, the n/h decomposition, eigenspace dimensions p^2 for
// every nonzero eigenvalue with phi spanning each, the nilpotency split
// between the two residues, and the h-action identities on core generators
// and eigenvectors (exhaustive over the 25-dim parameter space).
VerificationReport verify_c_mu_structure(const HamiltonianCast& H, felem mu);

// Substitution generated by the time-c flow of the Hamiltonian derivation of
// the given generator: x_i -> sum_j c^j D^j(x_i) / j!.  The series must
// vanish before j reaches the characteristic (domain error otherwise); the
// returned substitution carries the usual bijectivity and multiplicativity
// checks.
SubstMap hamiltonian_flow(DPAmbientPtr amb, const DPElement& generator, felem c);

// Conjugates a toral element of s lying outside the nonnegative filtration
// part onto the normal form t of make_t_mu, through a chain of verified
// automorphisms: a variable scaling when the leading coefficient is not 1,
// then Hamiltonian flow substitutions in strictly increasing filtration
// degree (asserted), then a residue rescaling solved from X^{p-1}*mu = 1.
// Inputs that are not toral or lie in the nonnegative part are domain
// errors; a normalization stall (an uncleasable term, a missing rescaling
// root, or a residual after the sweep) raises a domain error labelled
// "incomplete" quoting the residue -- the procedure never returns a chain
// that does not reach the exact normal form.
struct ToralNormalization {
  felem mu = 0;
  std::vector<Morphism> chain;  // verified factors on s, applied first to last
  Morphism composite;
  Vec result;                   // the normal form in s coordinates
};
ToralNormalization normalize_toral(const HamiltonianCast& H, const Vec& t);

// Torality of the two displayed outer elements D1^p + D1 + D_H(x1x2) and
// D1^p + D1 - D_H((x1^(p^2-p)+x1^(p^2-1))x2), with the bare D1^p + D1 as a
// negative control checked against the host-matrix p-power oracle.
VerificationReport verify_outer_toral(const HamiltonianCast& H);

// Deterministic example of a 2-dim torus in the envelope not contained in s:
// the outer toral element D1^p + D1 + D_H(x1x2) plus a commuting toral
// partner inside s, found through the centralizer's Cartan descent and the
// p-fixed-point solve on its maximal torus.  Envelope coordinates.
std::pair<Vec, Vec> outer_torus_example(const HamiltonianCast& H);

// Given a torus spanned by two commuting toral elements (domain errors
// otherwise): the torus meets s in a line but is not contained in it, the
// root decomposition of the middle algebra has 24 roots of dimension 5 with
// a 6-dimensional fixed space, the interior root set plus zero is the full
// F_p-plane, and the section consequence matching the toral rank of the
// interior centralizer's p-closure (a degenerate root has a solvable
// section; with no degeneracy every section is nonsolvable).
VerificationReport verify_torus_shape_and_roots(const HamiltonianCast& H,
                                                const Vec& t1, const Vec& t2);

// Stabilizer flow suite for the residue-1 toral element t: for every
// 3 <= m <= p^2 and several random c, exp(c ad D_H(x1^(m)+x1^(m-1)*rt*
// x2^(p-1))) is a verified automorphism of the envelope fixing t; for each
// nonzero eigenvalue k of ad t, the h-eigenvector search on the eigenspace
// yields one with nonzero p-semisimple p-power; and on the extension cast
// Hext (where the quartic root of -1 exists) the search on the interior
// centralizer of t produces an h-eigenvector with nonzero eigenvalue and
// non-nilpotent adjoint, whose coefficients obey the expected recursion.
VerificationReport verify_stabilizer_instances(const HamiltonianCast& H,
                                               const HamiltonianCast& Hext,
                                               std::uint64_t seed);

}  // namespace mla
