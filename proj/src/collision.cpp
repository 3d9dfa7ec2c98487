#include "mixmom/collision.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mixmom/sphere.hpp"

namespace mixmom {

double lb_full_moment(int ix, int iy, const std::function<double(int, int)>& moment) {
  if (ix < 0 || iy < 0) throw std::invalid_argument("lb_full_moment: negative exponents");
  const int k = ix + iy;
  double out = -static_cast<double>(k) * (k + 1) * moment(ix, iy);
  if (ix >= 2) out += static_cast<double>(ix) * (ix - 1) * moment(ix - 2, iy);
  if (iy >= 2) out += static_cast<double>(iy) * (iy - 1) * moment(ix, iy - 2);
  return out;
}

const Eigen::Matrix<double, 5, 5>& lb_mixed_matrix() {
  static const Eigen::Matrix<double, 5, 5> s = [] {
    const double s0 = -3.0 / (kPi - 4.0) - 1.0;
    const double s1 = 3.0 * kPi * (kPi - 3.0) / ((2.0 * kPi - 4.0) * (kPi - 4.0));
    const double s2 = -3.0 * kPi / ((2.0 * kPi - 4.0) * (kPi - 4.0)) - 1.5;
    const double s3 = 3.0 * kPi / ((2.0 * kPi - 4.0) * (kPi - 4.0)) - 0.5;
    Eigen::Matrix<double, 5, 5> m;
    m << 0.0, 0.0, 0.0, 0.0, 0.0,
         s0,  s3,  s2,  s1, -s1,
        -s0,  s2,  s3, -s1,  s1,
         s0,  s1, -s1,  s3,  s2,
        -s0, -s1,  s1,  s2,  s3;
    return m;
  }();
  return s;
}

std::array<double, 5> lb_mixed_polynomial(const MomentVec& u) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("lb_mixed_polynomial: Mixed1 moments required");
  const auto& s = lb_mixed_matrix();
  std::array<double, 5> out{};
  for (int i = 1; i < 5; ++i) {
    double acc = 0.0;
    for (int j = 0; j < 5; ++j) acc += s(i, j) * u[j];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

LbTabulatedResult lb_mixed_tabulated(const MomentVec& u, const QM1Table& table,
                                     const GammaPair& gammas, double cap_scale) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("lb_mixed_tabulated: Mixed1 moments required");
  const double u00 = u[0];
  if (u00 <= 0.0) throw std::domain_error("lb_mixed_tabulated: u00 must be positive");
  if (!is_realizable_mixed1(u, 1e-12 * std::max(1.0, u00)))
    throw std::domain_error("lb_mixed_tabulated: moments not realizable");

  const NormalizedMixed1 phi = normalized_mixed(u);
  const auto proj = quadrant_projection(phi);
  const double g1 = gammas.g1, g2 = gammas.g2;
  const std::array<double, 4> wq = {g2 * g1, (1.0 - g2) * g1, (1.0 - g2) * (1.0 - g1),
                                    g2 * (1.0 - g1)};

  // Unit-density edge traces per quadrant piece, weighted by the convex split.
  std::array<double, 4> tx{}, ty{};
  for (Quadrant q : kQuadrants) {
    const auto qi = static_cast<std::size_t>(q);
    if (wq[qi] <= 0.0) continue;
    const QM1Lookup lk = qm1_lookup(table, proj[qi], q);
    tx[qi] = wq[qi] * lk.trace_x;
    ty[qi] = wq[qi] * lk.trace_y;
  }

  // Each axis delta pairs with the average of the two one-sided quadrant traces:
  // azimuth 0 borders PP/PM, pi borders MP/MM, pi/2 borders PP/MP, 3pi/2 PM/MM.
  const auto pp = static_cast<std::size_t>(Quadrant::PP);
  const auto mp = static_cast<std::size_t>(Quadrant::MP);
  const auto mm = static_cast<std::size_t>(Quadrant::MM);
  const auto pm = static_cast<std::size_t>(Quadrant::PM);
  const double t_0 = 0.5 * (tx[pp] + tx[pm]);
  const double t_pi = 0.5 * (tx[mp] + tx[mm]);
  const double t_half = 0.5 * (ty[pp] + ty[mp]);
  const double t_3half = 0.5 * (ty[pm] + ty[mm]);

  LbTabulatedResult out;
  const double cap = cap_scale * u00;
  out.trace_x = u00 * (t_half + t_3half);
  out.trace_y = u00 * (t_0 + t_pi);
  if (out.trace_x > cap || out.trace_y > cap) out.capped = true;
  out.trace_x = std::min(out.trace_x, cap);
  out.trace_y = std::min(out.trace_y, cap);

  out.rhs[0] = 0.0;
  out.rhs[1] = -2.0 * u[1] + out.trace_x;
  out.rhs[2] = -2.0 * u[2] - out.trace_x;
  out.rhs[3] = -2.0 * u[3] + out.trace_y;
  out.rhs[4] = -2.0 * u[4] - out.trace_y;
  return out;
}

double edge_trace_integral(double a0, double a_edge) {
  // The integrand is entire, so Gauss-Legendre converges spectrally.
  constexpr int kN = 64;
  static thread_local std::vector<double> xs, ws;
  if (xs.empty()) gauss_legendre(kN, xs, ws);
  double sum = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double theta = 0.5 * kPi * xs[static_cast<std::size_t>(i)];
    sum += ws[static_cast<std::size_t>(i)] * std::exp(a0 + a_edge * std::cos(theta));
  }
  return 0.5 * kPi * sum;
}

LbTabulatedResult lb_mixed_entropy_traces(const MomentVec& u, const std::array<double, 5>& alpha,
                                          double cap_scale) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("lb_mixed_entropy_traces: Mixed1 moments required");
  const double u00 = u[0];
  if (u00 <= 0.0) throw std::domain_error("lb_mixed_entropy_traces: u00 must be positive");

  // Edge restrictions: azimuth 0 sees the x+ component, pi the x- one, pi/2 the
  // y+ one, 3pi/2 the y- one (signs follow omega along each edge).
  const double t_0 = edge_trace_integral(alpha[0], alpha[1]);
  const double t_pi = edge_trace_integral(alpha[0], -alpha[2]);
  const double t_half = edge_trace_integral(alpha[0], alpha[3]);
  const double t_3half = edge_trace_integral(alpha[0], -alpha[4]);

  LbTabulatedResult out;
  const double cap = cap_scale * u00;
  out.trace_x = t_half + t_3half;
  out.trace_y = t_0 + t_pi;
  if (out.trace_x > cap || out.trace_y > cap) out.capped = true;
  out.trace_x = std::min(out.trace_x, cap);
  out.trace_y = std::min(out.trace_y, cap);

  out.rhs[0] = 0.0;
  out.rhs[1] = -2.0 * u[1] + out.trace_x;
  out.rhs[2] = -2.0 * u[2] - out.trace_x;
  out.rhs[3] = -2.0 * u[3] + out.trace_y;
  out.rhs[4] = -2.0 * u[4] - out.trace_y;
  return out;
}

QuarterLbDefect quarter_lb_defect(const std::array<SpherePiece, 4>& pieces, int n_mu) {
  if (n_mu < 2) throw std::invalid_argument("quarter_lb_defect: n_mu too small");
  std::vector<double> xs, ws;
  gauss_legendre(n_mu, xs, ws);

  QuarterLbDefect out;
  for (Quadrant q : kQuadrants) {
    const auto qi = static_cast<std::size_t>(q);
    const SpherePiece& piece = pieces[qi];
    const double left = quadrant_phi_lo(q);
    const double right = quadrant_phi_hi(q);
    double acc = 0.0;
    for (int i = 0; i < n_mu; ++i) {
      // mu = cos(t): the 1/(1-mu^2) weight becomes 1/sin(t), bounded against the
      // O(sin t) azimuth derivative of a sphere-smooth piece.
      const double t = 0.5 * kPi * (xs[static_cast<std::size_t>(i)] + 1.0);
      const double mu = std::cos(t);
      const double jump = piece.dpsi_dphi(mu, right) - piece.dpsi_dphi(mu, left);
      acc += 0.5 * kPi * ws[static_cast<std::size_t>(i)] * jump / std::sin(t);
    }
    out.per_quadrant[qi] = acc;
    out.total += acc;
  }
  return out;
}

}  // namespace mixmom
