#include "mixmom/moments.hpp"

#include <cmath>
#include <stdexcept>

namespace mixmom {

namespace {

Quadrant resolve_quadrant(const Atom& a) {
  if (a.tag) return *a.tag;
  return quadrant_of_azimuth(std::atan2(a.omega[1], a.omega[0]));
}

// Basis values from projected coordinates; the first-order bases depend on the
// direction only through (Omega_x, Omega_y) and the quadrant membership.
std::array<double, 5> basis_projected(const BasisKind& kind, double ox, double oy, Quadrant q) {
  switch (kind.family) {
    case BasisKind::Family::Full1:
      return {1.0, ox, oy, 0.0, 0.0};
    case BasisKind::Family::Quarter1: {
      const double in = (q == kind.quadrant) ? 1.0 : 0.0;
      return {in, in * ox, in * oy, 0.0, 0.0};
    }
    case BasisKind::Family::Mixed1: {
      const double xp = half_contains(HalfSpace::Xp, q) ? 1.0 : 0.0;
      const double yp = half_contains(HalfSpace::Yp, q) ? 1.0 : 0.0;
      return {1.0, ox * xp, ox * (1.0 - xp), oy * yp, oy * (1.0 - yp)};
    }
  }
  return {};
}

}  // namespace

std::array<double, 5> basis_eval_atom(const BasisKind& kind, const Atom& a) {
  return basis_projected(kind, a.omega[0], a.omega[1], resolve_quadrant(a));
}

MomentVec moments_of_atomic(const AtomicDistribution& atoms, const BasisKind& kind) {
  MomentVec u;
  u.kind = kind;
  for (const Atom& a : atoms) {
    if (a.weight < 0.0) throw std::invalid_argument("moments_of_atomic: negative weight");
    const double r2 = a.omega[0] * a.omega[0] + a.omega[1] * a.omega[1];
    if (r2 > 1.0 + 1e-12) throw std::invalid_argument("moments_of_atomic: atom outside unit disk");
    const auto b = basis_projected(kind, a.omega[0], a.omega[1], resolve_quadrant(a));
    for (int i = 0; i < kind.size(); ++i) u[i] += a.weight * b[static_cast<std::size_t>(i)];
  }
  return u;
}

MomentVec isotropic_moments(const BasisKind& kind, double psi) {
  MomentVec u;
  u.kind = kind;
  switch (kind.family) {
    case BasisKind::Family::Full1:
      u[0] = 4.0 * kPi * psi;
      break;
    case BasisKind::Family::Quarter1:
      u[0] = kPi * psi;
      u[1] = psi * quarter_monomial_integral(1, 0, kind.quadrant);
      u[2] = psi * quarter_monomial_integral(0, 1, kind.quadrant);
      break;
    case BasisKind::Family::Mixed1:
      u[0] = 4.0 * kPi * psi;
      u[1] = kPi * psi;
      u[2] = -kPi * psi;
      u[3] = kPi * psi;
      u[4] = -kPi * psi;
      break;
  }
  return u;
}

bool is_realizable_full1(const MomentVec& u, double slack) {
  if (u[0] < -slack) return false;
  return std::hypot(u[1], u[2]) <= u[0] + slack;
}

bool is_realizable_quarter1(const MomentVec& u, double slack) {
  if (u[0] < -slack) return false;
  const int sx = quadrant_sign_x(u.kind.quadrant);
  const int sy = quadrant_sign_y(u.kind.quadrant);
  if (sx * u[1] < -slack || sy * u[2] < -slack) return false;
  return std::hypot(u[1], u[2]) <= u[0] + slack;
}

bool is_realizable_mixed1(const MomentVec& u, double slack) {
  if (u[0] < -slack) return false;
  if (u[1] < -slack || u[3] < -slack) return false;
  if (u[2] > slack || u[4] > slack) return false;
  return std::hypot(u[1] - u[2], u[3] - u[4]) <= u[0] + slack;
}

bool is_realizable(const MomentVec& u, double slack) {
  switch (u.kind.family) {
    case BasisKind::Family::Full1: return is_realizable_full1(u, slack);
    case BasisKind::Family::Quarter1: return is_realizable_quarter1(u, slack);
    case BasisKind::Family::Mixed1: return is_realizable_mixed1(u, slack);
  }
  return false;
}

NormalizedMixed1 normalized_mixed(const MomentVec& u) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("normalized_mixed: kind must be Mixed1");
  if (u[0] <= 0.0) throw std::domain_error("normalized_mixed: u00 must be positive");
  return {u[1] / u[0], u[2] / u[0], u[3] / u[0], u[4] / u[0]};
}

double mm_norm(const NormalizedMixed1& phi) { return std::hypot(phi.xp - phi.xm, phi.yp - phi.ym); }

GammaPair gamma_interpolation(const NormalizedMixed1& phi) {
  GammaPair g;
  const double dy = phi.yp - phi.ym;
  const double dx = phi.xp - phi.xm;
  g.g1 = dy > 0.0 ? phi.yp / dy : 0.5;
  g.g2 = dx > 0.0 ? phi.xp / dx : 0.5;
  g.g1 = std::min(1.0, std::max(0.0, g.g1));
  g.g2 = std::min(1.0, std::max(0.0, g.g2));
  return g;
}

std::array<std::array<double, 2>, 4> quadrant_projection(const NormalizedMixed1& phi) {
  const double dx = phi.xp - phi.xm;
  const double dy = phi.yp - phi.ym;
  std::array<std::array<double, 2>, 4> p{};
  for (Quadrant q : kQuadrants) {
    p[static_cast<int>(q)] = {quadrant_sign_x(q) * dx, quadrant_sign_y(q) * dy};
  }
  return p;
}

AtomicDistribution realize_quarter1(const MomentVec& u) {
  if (u.kind.family != BasisKind::Family::Quarter1)
    throw std::invalid_argument("realize_quarter1: kind must be Quarter1");
  if (!is_realizable_quarter1(u, 1e-12 * std::max(1.0, u[0])))
    throw std::domain_error("realize_quarter1: moments not realizable");
  Atom a;
  a.weight = std::max(0.0, u[0]);
  a.tag = u.kind.quadrant;
  if (a.weight > 0.0) a.omega = {u[1] / u[0], u[2] / u[0]};
  // Roundoff can push the mean direction marginally outside the disk.
  const double r = std::hypot(a.omega[0], a.omega[1]);
  if (r > 1.0) {
    a.omega[0] /= r;
    a.omega[1] /= r;
  }
  return {a};
}

AtomicDistribution realize_mixed1(const MomentVec& u) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("realize_mixed1: kind must be Mixed1");
  if (!is_realizable_mixed1(u, 1e-12 * std::max(1.0, u[0])))
    throw std::domain_error("realize_mixed1: moments not realizable");
  if (u[0] <= 0.0) return {};
  const NormalizedMixed1 phi = normalized_mixed(u);
  const GammaPair g = gamma_interpolation(phi);
  auto proj = quadrant_projection(phi);
  const std::array<double, 4> w = {
      g.g2 * g.g1,                  // PP
      (1.0 - g.g2) * g.g1,          // MP
      (1.0 - g.g2) * (1.0 - g.g1),  // MM
      g.g2 * (1.0 - g.g1),          // PM
  };
  AtomicDistribution atoms;
  atoms.reserve(4);
  for (Quadrant q : kQuadrants) {
    const int qi = static_cast<int>(q);
    auto& omega = proj[qi];
    const double r = std::hypot(omega[0], omega[1]);
    if (r > 1.0) {
      omega[0] /= r;
      omega[1] /= r;
    }
    atoms.push_back({u[0] * w[qi], omega, q});
  }
  return atoms;
}

bool limit_in_place(MomentVec& u, double eps, double floor) {
  if (eps < 0.0 || eps >= 1.0) throw std::invalid_argument("limit_in_place: eps must be in [0,1)");
  const MomentVec before = u;
  if (u[0] < floor) u[0] = floor;

  double d1 = 0.0, d2 = 0.0;  // the two components entering the first-order norm
  switch (u.kind.family) {
    case BasisKind::Family::Full1:
      d1 = u[1];
      d2 = u[2];
      break;
    case BasisKind::Family::Quarter1: {
      if (quadrant_sign_x(u.kind.quadrant) * u[1] < 0.0) u[1] = 0.0;
      if (quadrant_sign_y(u.kind.quadrant) * u[2] < 0.0) u[2] = 0.0;
      d1 = u[1];
      d2 = u[2];
      break;
    }
    case BasisKind::Family::Mixed1: {
      if (u[1] < 0.0) u[1] = 0.0;
      if (u[2] > 0.0) u[2] = 0.0;
      if (u[3] < 0.0) u[3] = 0.0;
      if (u[4] > 0.0) u[4] = 0.0;
      d1 = u[1] - u[2];
      d2 = u[3] - u[4];
      break;
    }
  }
  const double n = std::hypot(d1, d2);
  const double bound = (1.0 - eps) * u[0];
  if (n > bound) {
    // The extra step down keeps the slack-0 test satisfied after roundoff.
    const double theta = (bound / n) * (1.0 - 1e-15);
    const int last = u.kind.size();
    for (int i = 1; i < last; ++i) u[i] *= theta;
  }
  bool changed = false;
  for (int i = 0; i < u.kind.size(); ++i) changed = changed || (u[i] != before[i]);
  return changed;
}

MomentVec limit_to_realizable(const MomentVec& u, double eps, double floor) {
  MomentVec out = u;
  limit_in_place(out, eps, floor);
  return out;
}

}  // namespace mixmom
