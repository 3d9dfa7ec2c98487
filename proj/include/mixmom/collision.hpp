#pragma once

#include <array>
#include <functional>

#include <Eigen/Dense>

#include "mixmom/moments.hpp"
#include "mixmom/qm1_table.hpp"

namespace mixmom {

// Moment of the angular diffusion operator against a full-moment monomial:
//   <Omega_x^ix Omega_y^iy L psi> =
//     -k(k+1) u_{ix,iy} + ix(ix-1) u_{ix-2,iy} + iy(iy-1) u_{ix,iy-2},
// k = ix+iy. `moment` supplies u_{a,b}; terms with negative indices vanish.
double lb_full_moment(int ix, int iy, const std::function<double(int, int)>& moment);

// Diffusion-operator matrix for the mixed first-order basis under the
// polynomial ansatz: <b L psi_P> = S u. First row is zero (mass conservation).
const Eigen::Matrix<double, 5, 5>& lb_mixed_matrix();

std::array<double, 5> lb_mixed_polynomial(const MomentVec& u);

struct LbTabulatedResult {
  std::array<double, 5> rhs{};
  double trace_x = 0.0;  // capped azimuth-edge trace sum entering the x components
  double trace_y = 0.0;
  bool capped = false;
};

// Diffusion moments for the convex combination of tabulated quarter-moment
// ansatz pieces: bulk terms -2 u_k plus the azimuth-edge traces at k*pi/2 read
// from the table. Each delta pairs with the average of the two adjacent
// quadrant traces. Trace sums are capped at cap_scale * u00 (they diverge on
// the realizability boundary); the cap keeps +/- pairs exactly antisymmetric.
LbTabulatedResult lb_mixed_tabulated(const MomentVec& u, const QM1Table& table,
                                     const GammaPair& gammas, double cap_scale = 1e6);

// Edge trace of an exponential restriction against the delta weight:
//   int psi(mu, edge) / sqrt(1 - mu^2) dmu = int_{-pi/2}^{pi/2} exp(a0 + a_e cos theta) dtheta.
double edge_trace_integral(double a0, double a_edge);

// Same diffusion moments for the continuous mixed exponential ansatz with
// converged multipliers alpha. The components that jump across an azimuth edge
// carry a factor vanishing there, so each edge restriction is the single
// exponential exp(alpha0 + alpha_k cos theta) and the traces come straight from
// the cell's own multipliers. Capping contract matches lb_mixed_tabulated.
LbTabulatedResult lb_mixed_entropy_traces(const MomentVec& u, const std::array<double, 5>& alpha,
                                          double cap_scale = 1e6);

// One smooth quadrant piece of a piecewise angular distribution, with its
// one-sided azimuth derivative available on the closed quadrant.
struct SpherePiece {
  std::function<double(double mu, double phi)> psi;
  std::function<double(double mu, double phi)> dpsi_dphi;
};

struct QuarterLbDefect {
  std::array<double, 4> per_quadrant{};  // zeroth diffusion moments, by Quadrant
  double total = 0.0;
};

// Zeroth quarter moments of the diffusion operator via the delta' pairing with
// the pieces' own one-sided derivative traces:
//   <1_q L psi> = int [d_phi psi(mu, right edge) - d_phi psi(mu, left edge)] /
//                 (1 - mu^2) dmu,
// integrated in the polar angle (mu = cos t) so smooth-on-the-sphere pieces
// give bounded integrands. A globally smooth psi sums to zero; mismatched
// derivative traces leave the (physically spurious) mass defect.
QuarterLbDefect quarter_lb_defect(const std::array<SpherePiece, 4>& pieces, int n_mu);

}  // namespace mixmom
