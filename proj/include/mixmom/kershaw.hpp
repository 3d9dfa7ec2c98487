#pragma once

#include <array>

#include "mixmom/moments.hpp"
#include "mixmom/qm1_table.hpp"
#include "mixmom/sphere.hpp"

namespace mixmom {

// Interpolation factor between the boundary values of the quarter second
// moment's principal eigenvalue, linear in the first-moment norm so that the
// quadrant-isotropic point is matched and the flux Jacobians stay hyperbolic.
double qk1_gamma(double norm_phi);
double qk1_gamma_iso();  // value at the quadrant-isotropic norm 1/sqrt(2)

struct KershawCoefficients {
  double alpha1 = 0.0;  // transverse eigenvalue of the second moment
  double alpha2 = 0.0;  // rank-one strength along phi
  double gamma = 0.0;
  double lambda = 0.0;  // eigenvalue along phi, = alpha1 + alpha2
};

using Tensor2 = std::array<std::array<double, 2>, 2>;

// pre: phi in the closed quadrant q with |phi| <= 1.
KershawCoefficients qk1_coefficients(const std::array<double, 2>& phi, Quadrant q);

// Analytic quarter-moment second-moment tensor alpha1*I + alpha2*phi phi^T/|phi|^2.
// phi -> 0 realizes only point masses at the poles, so the limit is the zero
// tensor (also forced by the eigenvalue bounds |phi|^2 <= lambda <= |phi|).
Tensor2 qk1_second_moment(const std::array<double, 2>& phi, Quadrant q);

// Realizing point masses: two symmetric pairs along phi and its perpendicular.
// Degenerate inputs collapse: axis moments to an axis/origin pair, |phi| = 1 to
// a single boundary atom, phi = 0 to a single origin atom.
struct KershawAtoms {
  // index [iota-1][0 -> +, 1 -> -]; unused pairs hold zeros
  std::array<std::array<double, 2>, 2> c{};  // weights
  std::array<std::array<double, 2>, 2> d{};  // displacements along the pair axis
  std::array<double, 2> v1{}, v2{};          // unit directions: perp(phi), phi
  double lbar1 = 0.0, lbar2 = 0.0;           // eigenvalues of T - phi phi^T
  AtomicDistribution atoms;                  // tagged realizing distribution, total weight 1
};

KershawAtoms qk1_atoms(const std::array<double, 2>& phi, Quadrant q);

// Second moments of the mixed-moment Kershaw/tabulated closure, per quadrant
// piece of the convex-split ansatz (quadrant weights already applied, scaled by
// u00). Half-space moments are sums of two entries.
struct MK1Moments {
  std::array<double, 4> u20{};  // indexed by Quadrant
  std::array<double, 4> u11{};
  std::array<double, 4> u02{};
};

enum class QuarterEngine { KershawAtoms, QM1Table };

// pre: is_realizable_mixed1(u); table required for the QM1Table engine.
// atoms_out (Kershaw engine only) receives the full realizing atomic set.
MK1Moments mk1_closure(const MomentVec& u, QuarterEngine engine, const QM1Table* table = nullptr,
                       AtomicDistribution* atoms_out = nullptr);

enum class Axis { X, Y };
enum class SignFilter { All, PositiveOnly, NegativeOnly };

// Flux moments sum_k w_k omega_axis b(omega_k) over atoms whose omega_axis
// passes the sign filter (zero components pass only All).
std::array<double, 5> flux_from_atoms(const AtomicDistribution& atoms, const BasisKind& kind,
                                      Axis axis, SignFilter filter);

}  // namespace mixmom
