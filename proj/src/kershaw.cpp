#include "mixmom/kershaw.hpp"

#include <cmath>
#include <stdexcept>

namespace mixmom {

namespace {

constexpr double kOriginTol = 1e-10;    // below this norm only pole masses realize phi
constexpr double kBoundaryTol = 1e-12;  // 1 - |phi| below this collapses to one Dirac

void check_in_quadrant(const std::array<double, 2>& phi, Quadrant q, const char* who) {
  const double sx = quadrant_sign_x(q);
  const double sy = quadrant_sign_y(q);
  if (phi[0] * sx < -1e-12 || phi[1] * sy < -1e-12)
    throw std::domain_error(std::string(who) + ": phi outside quadrant");
  if (std::hypot(phi[0], phi[1]) > 1.0 + 1e-9)
    throw std::domain_error(std::string(who) + ": |phi| exceeds 1");
}

// Clamp an atom position onto the closed unit disk (roundoff can push the
// constructed points a few ulps outside).
std::array<double, 2> on_disk(double x, double y) {
  const double r = std::hypot(x, y);
  if (r > 1.0) return {x / r, y / r};
  return {x, y};
}

}  // namespace

double qk1_gamma_iso() {
  const double s2 = std::sqrt(2.0);
  return -(2.0 * kPi - 3.0 * kPi * s2 + 4.0) / (3.0 * kPi * (s2 - 1.0));
}

double qk1_gamma(double norm_phi) {
  return 1.0 - std::sqrt(2.0) * (1.0 - qk1_gamma_iso()) * norm_phi;
}

KershawCoefficients qk1_coefficients(const std::array<double, 2>& phi, Quadrant q) {
  check_in_quadrant(phi, q, "qk1_coefficients");
  const double ax = std::abs(phi[0]);
  const double ay = std::abs(phi[1]);
  const double n = std::min(std::hypot(ax, ay), 1.0);
  KershawCoefficients k;
  k.gamma = qk1_gamma(n);
  k.lambda = k.gamma * n * n + (1.0 - k.gamma) * n;
  k.alpha1 = ax * ay * (8.0 / 3.0 - 16.0 / (3.0 * kPi)) * std::max(0.0, 1.0 - n * n);
  k.alpha2 = k.lambda - k.alpha1;
  return k;
}

Tensor2 qk1_second_moment(const std::array<double, 2>& phi, Quadrant q) {
  const KershawCoefficients k = qk1_coefficients(phi, q);
  const double n2 = phi[0] * phi[0] + phi[1] * phi[1];
  Tensor2 t{{{0.0, 0.0}, {0.0, 0.0}}};
  if (n2 < kOriginTol * kOriginTol) return t;  // pole masses only: zero tensor
  t[0][0] = k.alpha1 + k.alpha2 * phi[0] * phi[0] / n2;
  t[0][1] = k.alpha2 * phi[0] * phi[1] / n2;
  t[1][0] = t[0][1];
  t[1][1] = k.alpha1 + k.alpha2 * phi[1] * phi[1] / n2;
  return t;
}

KershawAtoms qk1_atoms(const std::array<double, 2>& phi, Quadrant q) {
  check_in_quadrant(phi, q, "qk1_atoms");
  const double sx = quadrant_sign_x(q);
  const double sy = quadrant_sign_y(q);
  const double ax = std::abs(phi[0]);
  const double ay = std::abs(phi[1]);
  const double n = std::min(std::hypot(ax, ay), 1.0);

  KershawAtoms out;
  auto push = [&](double w, double px, double py) {
    // positions are built in the PP frame and mirrored into q
    out.atoms.push_back({w, on_disk(sx * px, sy * py), q});
  };

  if (n < kOriginTol) {
    out.c[1][0] = 1.0;
    push(1.0, 0.0, 0.0);
    return out;
  }

  out.v2 = {sx * ax / n, sy * ay / n};
  out.v1 = {sx * -ay / n, sy * ax / n};

  if (n > 1.0 - kBoundaryTol) {
    out.c[1][0] = 1.0;
    push(1.0, ax / n, ay / n);
    return out;
  }

  const KershawCoefficients k = qk1_coefficients(phi, q);
  out.lbar1 = k.alpha1;
  out.lbar2 = k.lambda - n * n;

  if (ax == 0.0 || ay == 0.0) {
    // Axis moment: the transverse pair is massless; one pair along the axis with
    // the inner atom collapsing onto the poles reproduces the diagonal tensor.
    const double dp = out.lbar2 / n;
    out.d[1] = {dp, n};
    out.c[1] = {n / (n + dp), dp / (n + dp)};
    push(out.c[1][0], (ax / n) * (n + dp), (ay / n) * (n + dp));
    push(out.c[1][1], 0.0, 0.0);
    return out;
  }

  const double root = std::sqrt(1.0 - n * n);
  out.d[0][1] = std::min(ay / ax * n, root);
  out.d[1][1] = n;
  for (int i = 0; i < 2; ++i) {
    const double lbar = i == 0 ? out.lbar1 : out.lbar2;
    out.d[i][0] = 2.0 * lbar / out.d[i][1];
    const double dsum = out.d[i][0] + out.d[i][1];
    out.c[i][0] = lbar / (out.d[i][0] * dsum);
    out.c[i][1] = lbar / (out.d[i][1] * dsum);
  }
  const double e1[2] = {-ay / n, ax / n};
  const double e2[2] = {ax / n, ay / n};
  push(out.c[0][0], ax + out.d[0][0] * e1[0], ay + out.d[0][0] * e1[1]);
  push(out.c[0][1], ax - out.d[0][1] * e1[0], ay - out.d[0][1] * e1[1]);
  push(out.c[1][0], ax + out.d[1][0] * e2[0], ay + out.d[1][0] * e2[1]);
  push(out.c[1][1], ax - out.d[1][1] * e2[0], ay - out.d[1][1] * e2[1]);
  return out;
}

MK1Moments mk1_closure(const MomentVec& u, QuarterEngine engine, const QM1Table* table,
                       AtomicDistribution* atoms_out) {
  if (u.kind.family != BasisKind::Family::Mixed1)
    throw std::invalid_argument("mk1_closure: Mixed1 moments required");
  if (!is_realizable_mixed1(u, 1e-12 * std::max(1.0, u[0])))
    throw std::domain_error("mk1_closure: moments not realizable");
  if (engine == QuarterEngine::QM1Table && !table)
    throw std::invalid_argument("mk1_closure: table engine without a table");
  if (atoms_out) atoms_out->clear();

  const NormalizedMixed1 phi = normalized_mixed(u);
  const GammaPair g = gamma_interpolation(phi);
  const auto proj = quadrant_projection(phi);
  const std::array<double, 4> wq = {g.g2 * g.g1, (1.0 - g.g2) * g.g1,
                                    (1.0 - g.g2) * (1.0 - g.g1), g.g2 * (1.0 - g.g1)};

  MK1Moments m;
  for (Quadrant q : kQuadrants) {
    const int qi = static_cast<int>(q);
    const double scale = u[0] * wq[static_cast<std::size_t>(qi)];
    if (scale <= 0.0) continue;
    if (engine == QuarterEngine::KershawAtoms) {
      KershawAtoms ka = qk1_atoms(proj[static_cast<std::size_t>(qi)], q);
      for (Atom& a : ka.atoms) {
        a.weight *= scale;
        m.u20[static_cast<std::size_t>(qi)] += a.weight * a.omega[0] * a.omega[0];
        m.u11[static_cast<std::size_t>(qi)] += a.weight * a.omega[0] * a.omega[1];
        m.u02[static_cast<std::size_t>(qi)] += a.weight * a.omega[1] * a.omega[1];
        if (atoms_out) atoms_out->push_back(a);
      }
    } else {
      const QM1Lookup lk = qm1_lookup(*table, proj[static_cast<std::size_t>(qi)], q);
      m.u20[static_cast<std::size_t>(qi)] = scale * lk.u20;
      m.u11[static_cast<std::size_t>(qi)] = scale * lk.u11;
      m.u02[static_cast<std::size_t>(qi)] = scale * lk.u02;
    }
  }
  return m;
}

std::array<double, 5> flux_from_atoms(const AtomicDistribution& atoms, const BasisKind& kind,
                                      Axis axis, SignFilter filter) {
  std::array<double, 5> f{};
  for (const Atom& a : atoms) {
    const double oa = axis == Axis::X ? a.omega[0] : a.omega[1];
    if (filter == SignFilter::PositiveOnly && oa <= 0.0) continue;
    if (filter == SignFilter::NegativeOnly && oa >= 0.0) continue;
    const auto b = basis_eval_atom(kind, a);
    for (int k = 0; k < kind.size(); ++k)
      f[static_cast<std::size_t>(k)] += a.weight * oa * b[static_cast<std::size_t>(k)];
  }
  return f;
}

}  // namespace mixmom
