#pragma once

#include <array>
#include <optional>
#include <vector>

#include "mixmom/sphere.hpp"

namespace mixmom {

// Weighted point mass on the projected unit disk. The optional tag pins quadrant
// membership for atoms sitting exactly on a quadrant boundary.
struct Atom {
  double weight = 0.0;
  std::array<double, 2> omega{0.0, 0.0};
  std::optional<Quadrant> tag;
};

using AtomicDistribution = std::vector<Atom>;

// Moment vector in basis order. Full1/Quarter1 use 3 components, Mixed1 uses 5:
// (u00, u_x+, u_x-, u_y+, u_y-). Unused tail entries stay zero.
struct MomentVec {
  BasisKind kind;
  std::array<double, 5> v{};

  int size() const { return kind.size(); }
  double& operator[](int i) { return v[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<std::size_t>(i)]; }
};

// First-order mixed moments divided by u00.
struct NormalizedMixed1 {
  double xp = 0.0, xm = 0.0, yp = 0.0, ym = 0.0;
};

struct GammaPair {
  double g1 = 0.5;  // weight of the y-positive half in the quadrant split
  double g2 = 0.5;  // weight of the x-positive half
};

MomentVec moments_of_atomic(const AtomicDistribution& atoms, const BasisKind& kind);

// Moments psi * <b> of the direction-independent angular density psi.
MomentVec isotropic_moments(const BasisKind& kind, double psi);

// Basis values at an atom's projected direction; first-order bases depend on the
// direction only through the disk coordinates and the quadrant membership.
std::array<double, 5> basis_eval_atom(const BasisKind& kind, const Atom& a);

// Realizability tests. slack loosens every inequality by the given absolute amount.
bool is_realizable_full1(const MomentVec& u, double slack = 0.0);
bool is_realizable_quarter1(const MomentVec& u, double slack = 0.0);
bool is_realizable_mixed1(const MomentVec& u, double slack = 0.0);
bool is_realizable(const MomentVec& u, double slack = 0.0);

NormalizedMixed1 normalized_mixed(const MomentVec& u);  // pre: Mixed1, u00 > 0

// Anisotropy norm sqrt((xp-xm)^2 + (yp-ym)^2); realizable iff <= 1 with the sign
// pattern xp, yp >= 0 >= xm, ym.
double mm_norm(const NormalizedMixed1& phi);

// Convex split weights; 0/0 resolves to 1/2 (the balanced split).
GammaPair gamma_interpolation(const NormalizedMixed1& phi);

// Per-quadrant first-moment projections (+-(xp-xm), +-(yp-ym)), indexed by
// Quadrant. All four have Euclidean norm mm_norm(phi).
std::array<std::array<double, 2>, 4> quadrant_projection(const NormalizedMixed1& phi);

// Constructive realizing distributions.
AtomicDistribution realize_quarter1(const MomentVec& u);  // single atom
AtomicDistribution realize_mixed1(const MomentVec& u);    // four tagged atoms

// Pull a vector back into the realizable set: clamp u00 to >= floor, clamp
// wrong-signed half moments to 0, rescale first-order components so their norm is
// <= (1-eps) * u00. Identity on vectors already that far inside; idempotent.
MomentVec limit_to_realizable(const MomentVec& u, double eps, double floor = 1e-10);

// In-place variant; returns true when anything changed beyond roundoff.
bool limit_in_place(MomentVec& u, double eps, double floor = 1e-10);

}  // namespace mixmom
