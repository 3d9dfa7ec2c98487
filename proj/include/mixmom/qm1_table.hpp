#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixmom/entropy.hpp"

namespace mixmom {

// One grid node of the quarter-moment entropy-closure tabulation. All entries
// are for unit density (u0 = 1) on the PP quadrant; other quadrants follow by
// reflection. trace_x / trace_y are the azimuth-edge integrals
//   \int exp(a0 + a_edge cos(theta)) dtheta,  theta in (-pi/2, pi/2),
// i.e. \int psi(mu, edge) / sqrt(1 - mu^2) dmu at the quadrant's x- and y-axis
// edges, as consumed by the tabulated collision operator.
struct QM1Node {
  bool valid = false;               // realizable grid point with a converged dual solve
  std::array<double, 2> phi_eff{};  // effective (blend-adjusted) first moment
  double u20 = 0.0, u11 = 0.0, u02 = 0.0;
  double trace_x = 0.0, trace_y = 0.0;
  std::array<double, 3> alpha{};    // quarter multipliers at unit density
  double blend_r = 0.0;
};

struct QM1Lookup {
  std::array<double, 2> phi_eff{};
  double u20 = 0.0, u11 = 0.0, u02 = 0.0;
  double trace_x = 0.0, trace_y = 0.0;
  std::array<double, 3> alpha{};
  double blend_r = 0.0;
  bool near_boundary = false;  // query norm beyond 0.995
};

// Uniform tabulation of the quarter-moment entropy closure over normalized
// first moments (i/res, j/res), i,j = 1..res-1, PP quadrant. Nodes outside the
// realizable disk (or with failed solves) are marked invalid and filled from
// the nearest valid node, which realizes clamp-to-last-interior-ring lookups.
class QM1Table {
 public:
  QM1Table() = default;

  static QM1Table tabulate(int resolution, const QuadratureRule& quad,
                           const DualOptions& opts = {});

  int resolution() const { return res_; }
  int quad_n_mu() const { return n_mu_; }
  int quad_n_phi() const { return n_phi_; }
  double tolerance() const { return tol_; }
  // Largest trace_x + trace_y over originally-valid nodes; bounds the tabulated
  // collision operator and hence the stable time step.
  double max_trace_sum() const { return max_trace_sum_; }
  std::size_t invalid_count() const;

  // i, j in 1..resolution()-1 index the grid point (i/res, j/res).
  const QM1Node& node(int i, int j) const;

  void save(std::ostream& os) const;
  static QM1Table load(std::istream& is);
  void save_file(const std::string& path) const;
  static QM1Table load_file(const std::string& path);

 private:
  int res_ = 0;
  int n_mu_ = 0, n_phi_ = 0;
  double tol_ = 0.0;
  double max_trace_sum_ = 0.0;
  std::vector<QM1Node> nodes_;  // (res-1)^2 row-major, j outer

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(res_ - 1) +
           static_cast<std::size_t>(i - 1);
  }
};

// Bilinearly interpolated node data for a normalized first moment in quadrant
// q (phi has q's signs; mirrored into the PP table). Components are returned in
// q's frame: u11 and alpha carry the quadrant signs, traces are invariant.
// Throws std::domain_error for phi outside the closed quadrant or |phi| > 1.
QM1Lookup qm1_lookup(const QM1Table& table, const std::array<double, 2>& phi, Quadrant q);

// Minimal angle (degrees) between phi and an eigenvector of the tabulated
// second-moment tensor at phi.
double qm1_eigen_deviation(const QM1Table& table, const std::array<double, 2>& phi);

}  // namespace mixmom
