#include "mixmom/sphere.hpp"

#include <cmath>
#include <stdexcept>

namespace mixmom {

double quadrant_phi_lo(Quadrant q) { return 0.5 * kPi * static_cast<int>(q); }
double quadrant_phi_hi(Quadrant q) { return 0.5 * kPi * (static_cast<int>(q) + 1); }

namespace {

double wrap_azimuth(double phi) {
  double p = std::fmod(phi, 2.0 * kPi);
  if (p < 0.0) p += 2.0 * kPi;
  // fmod can return 2pi after the negative branch when phi = -eps.
  if (p >= 2.0 * kPi) p -= 2.0 * kPi;
  return p;
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace

Quadrant quadrant_of_azimuth(double phi) {
  const double p = wrap_azimuth(phi);
  const int idx = std::min(3, static_cast<int>(p / (0.5 * kPi)));
  return static_cast<Quadrant>(idx);
}

double Direction::omega_x() const {
  return std::sqrt(std::max(0.0, 1.0 - mu * mu)) * std::cos(phi);
}
double Direction::omega_y() const {
  return std::sqrt(std::max(0.0, 1.0 - mu * mu)) * std::sin(phi);
}

std::array<double, 2> omega_project(const Direction& d) { return {d.omega_x(), d.omega_y()}; }

std::vector<Quadrant> Region::quadrants() const {
  switch (kind) {
    case Kind::FullSphere: return {Quadrant::PP, Quadrant::MP, Quadrant::MM, Quadrant::PM};
    case Kind::Quadrant: return {quadrant};
    case Kind::HalfSpace: {
      std::vector<Quadrant> qs;
      for (Quadrant q : kQuadrants)
        if (half_contains(half, q)) qs.push_back(q);
      return qs;
    }
  }
  return {};
}

double Region::area() const { return kPi * static_cast<double>(quadrants().size()); }

std::array<double, 5> basis_eval(const BasisKind& kind, const Direction& d,
                                 std::optional<Quadrant> tag) {
  const double ox = d.omega_x();
  const double oy = d.omega_y();
  const Quadrant q = tag ? *tag : quadrant_of_azimuth(d.phi);
  std::array<double, 5> b{};
  switch (kind.family) {
    case BasisKind::Family::Full1:
      b = {1.0, ox, oy, 0.0, 0.0};
      break;
    case BasisKind::Family::Quarter1: {
      const double in = (q == kind.quadrant) ? 1.0 : 0.0;
      b = {in, in * ox, in * oy, 0.0, 0.0};
      break;
    }
    case BasisKind::Family::Mixed1: {
      const double xp = half_contains(HalfSpace::Xp, q) ? 1.0 : 0.0;
      const double yp = half_contains(HalfSpace::Yp, q) ? 1.0 : 0.0;
      b = {1.0, ox * xp, ox * (1.0 - xp), oy * yp, oy * (1.0 - yp)};
      break;
    }
  }
  return b;
}

void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      // p0 = P_n(z); derivative from the recurrence.
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
}

QuadratureRule quadrature(const Region& region, int n_mu, int n_phi) {
  if (n_mu < 1 || n_phi < 1) throw std::invalid_argument("quadrature: node counts must be >= 1");
  std::vector<double> xs, ws;
  gauss_legendre(n_mu, xs, ws);

  // Polar-angle nodes t in (0, pi): mu = cos t, measure dmu = sin t dt.
  std::vector<double> t(n_mu), wt(n_mu);
  for (int i = 0; i < n_mu; ++i) {
    t[i] = 0.5 * kPi * (xs[i] + 1.0);
    wt[i] = 0.5 * kPi * ws[i] * std::sin(t[i]);
  }

  std::vector<double> xp, wp;
  gauss_legendre(n_phi, xp, wp);

  QuadratureRule rule;
  rule.region = region;
  rule.n_mu = n_mu;
  rule.n_phi = n_phi;
  const auto qs = region.quadrants();
  rule.nodes.reserve(static_cast<std::size_t>(n_mu) * n_phi * qs.size());
  for (Quadrant q : qs) {
    const double lo = quadrant_phi_lo(q), hi = quadrant_phi_hi(q);
    for (int i = 0; i < n_mu; ++i) {
      for (int j = 0; j < n_phi; ++j) {
        const double phi = 0.5 * ((hi - lo) * xp[j] + hi + lo);
        const double w = wt[i] * 0.5 * (hi - lo) * wp[j];
        rule.nodes.push_back({{std::cos(t[i]), phi}, w, q});
      }
    }
  }
  return rule;
}

double QuadratureRule::weight_sum() const {
  double s = 0.0;
  for (const auto& n : nodes) s += n.weight;
  return s;
}

double quarter_monomial_integral(int ix, int iy, Quadrant q) {
  if (ix < 0 || iy < 0) throw std::invalid_argument("quarter_monomial_integral: negative power");
  double sign = 1.0;
  if (quadrant_sign_x(q) < 0 && (ix % 2)) sign = -sign;
  if (quadrant_sign_y(q) < 0 && (iy % 2)) sign = -sign;
  const double k = ix + iy;
  const double val = 0.5 * std::exp(log_beta(0.5, 1.0 + 0.5 * k) +
                                    log_beta(0.5 * (ix + 1), 0.5 * (iy + 1)));
  return sign * val;
}

double half_monomial_integral(int k, HalfSpace h) {
  if (k < 0) throw std::invalid_argument("half_monomial_integral: negative power");
  const bool neg = (h == HalfSpace::Xm || h == HalfSpace::Ym);
  const double sign = (neg && (k % 2)) ? -1.0 : 1.0;
  return sign * 2.0 * kPi / (k + 1.0);
}

double full_monomial_integral(int ix, int iy) {
  double s = 0.0;
  for (Quadrant q : kQuadrants) s += quarter_monomial_integral(ix, iy, q);
  return s;
}

namespace {

struct MixedComponent {
  int ix, iy;
  std::array<bool, 4> quads;  // indexed by Quadrant
};

std::array<bool, 4> quad_mask(const std::vector<Quadrant>& qs) {
  std::array<bool, 4> m{};
  for (Quadrant q : qs) m[static_cast<int>(q)] = true;
  return m;
}

}  // namespace

Eigen::MatrixXd gram_matrix(const BasisKind& kind) {
  const int n = kind.size();
  Eigen::MatrixXd g(n, n);
  if (kind.family == BasisKind::Family::Mixed1) {
    const std::array<MixedComponent, 5> comps = {{
        {0, 0, quad_mask(Region::full().quadrants())},
        {1, 0, quad_mask(Region::halfspace(HalfSpace::Xp).quadrants())},
        {1, 0, quad_mask(Region::halfspace(HalfSpace::Xm).quadrants())},
        {0, 1, quad_mask(Region::halfspace(HalfSpace::Yp).quadrants())},
        {0, 1, quad_mask(Region::halfspace(HalfSpace::Ym).quadrants())},
    }};
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double s = 0.0;
        for (Quadrant q : kQuadrants) {
          const int qi = static_cast<int>(q);
          if (comps[i].quads[qi] && comps[j].quads[qi])
            s += quarter_monomial_integral(comps[i].ix + comps[j].ix, comps[i].iy + comps[j].iy, q);
        }
        g(i, j) = g(j, i) = s;
      }
    }
    return g;
  }

  const std::array<std::array<int, 2>, 3> pw = {{{0, 0}, {1, 0}, {0, 1}}};
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int ix = pw[i][0] + pw[j][0];
      const int iy = pw[i][1] + pw[j][1];
      const double s = (kind.family == BasisKind::Family::Full1)
                           ? full_monomial_integral(ix, iy)
                           : quarter_monomial_integral(ix, iy, kind.quadrant);
      g(i, j) = g(j, i) = s;
    }
  }
  return g;
}

}  // namespace mixmom
