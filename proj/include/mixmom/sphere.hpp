#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace mixmom {

inline constexpr double kPi = 3.14159265358979323846;

// Quadrants of the projected direction (Omega_x, Omega_y), named by sign pattern.
// Azimuth ranges are half-open: PP = [0,pi/2), MP = [pi/2,pi), MM = [pi,3pi/2),
// PM = [3pi/2,2pi), so every direction belongs to exactly one quadrant.
enum class Quadrant : std::uint8_t { PP = 0, MP = 1, MM = 2, PM = 3 };

// Half-spaces of the sphere: Xp = {Omega_x >= 0} = PP u PM, Xm = MP u MM,
// Yp = {Omega_y >= 0} = PP u MP, Ym = MM u PM.
enum class HalfSpace : std::uint8_t { Xp = 0, Xm = 1, Yp = 2, Ym = 3 };

inline constexpr std::array<Quadrant, 4> kQuadrants = {Quadrant::PP, Quadrant::MP,
                                                       Quadrant::MM, Quadrant::PM};

// Signs of (Omega_x, Omega_y) on a quadrant.
constexpr int quadrant_sign_x(Quadrant q) {
  return (q == Quadrant::PP || q == Quadrant::PM) ? +1 : -1;
}
constexpr int quadrant_sign_y(Quadrant q) {
  return (q == Quadrant::PP || q == Quadrant::MP) ? +1 : -1;
}
constexpr bool half_contains(HalfSpace h, Quadrant q) {
  switch (h) {
    case HalfSpace::Xp: return quadrant_sign_x(q) > 0;
    case HalfSpace::Xm: return quadrant_sign_x(q) < 0;
    case HalfSpace::Yp: return quadrant_sign_y(q) > 0;
    case HalfSpace::Ym: return quadrant_sign_y(q) < 0;
  }
  return false;
}

// Quadrant azimuth interval [lo, hi) with lo = index * pi/2.
double quadrant_phi_lo(Quadrant q);
double quadrant_phi_hi(Quadrant q);

// Half-open membership rule; azimuth is wrapped into [0, 2pi).
Quadrant quadrant_of_azimuth(double phi);

// A point on the unit sphere: mu is the cosine of the polar angle, phi the azimuth.
// Omega_x = sqrt(1-mu^2) cos(phi), Omega_y = sqrt(1-mu^2) sin(phi).
struct Direction {
  double mu;
  double phi;

  double omega_x() const;
  double omega_y() const;
};

// Projection onto the (Omega_x, Omega_y) unit disk.
std::array<double, 2> omega_project(const Direction& d);

// Integration region on the sphere.
struct Region {
  enum class Kind : std::uint8_t { FullSphere, Quadrant, HalfSpace };
  Kind kind = Kind::FullSphere;
  Quadrant quadrant = Quadrant::PP;
  HalfSpace half = HalfSpace::Xp;

  static Region full() { return {}; }
  static Region quarter(Quadrant q) { return {Kind::Quadrant, q, HalfSpace::Xp}; }
  static Region halfspace(HalfSpace h) { return {Kind::HalfSpace, Quadrant::PP, h}; }

  // Quadrants covered by the region, in PP, MP, MM, PM order.
  std::vector<Quadrant> quadrants() const;
  double area() const;  // pi per quadrant
};

// Moment basis selector.
//   Full1:      (1, Omega_x, Omega_y)
//   Quarter1@q: (1, Omega_x, Omega_y) restricted to quadrant q
//   Mixed1:     (1, Omega_x 1_{Xp}, Omega_x 1_{Xm}, Omega_y 1_{Yp}, Omega_y 1_{Ym})
struct BasisKind {
  enum class Family : std::uint8_t { Full1, Quarter1, Mixed1 };
  Family family = Family::Full1;
  Quadrant quadrant = Quadrant::PP;  // used by Quarter1 only

  static BasisKind full1() { return {Family::Full1, Quadrant::PP}; }
  static BasisKind quarter1(Quadrant q) { return {Family::Quarter1, q}; }
  static BasisKind mixed1() { return {Family::Mixed1, Quadrant::PP}; }

  int size() const { return family == Family::Mixed1 ? 5 : 3; }
  bool operator==(const BasisKind& o) const {
    return family == o.family && (family != Family::Quarter1 || quadrant == o.quadrant);
  }
};

// Basis values at a direction. Indicator membership follows the half-open azimuth
// rule unless an explicit quadrant tag overrides it (used for boundary atoms).
std::array<double, 5> basis_eval(const BasisKind& kind, const Direction& d,
                                 std::optional<Quadrant> tag = std::nullopt);

struct QuadNode {
  Direction dir;
  double weight;
  Quadrant quadrant;  // quadrant whose azimuth interval generated the node
};

// Tensor-product rule: n_mu polar nodes (Gauss-Legendre in the polar angle so the
// sin-polar Jacobian and every monomial are integrated to near machine precision)
// times n_phi azimuth nodes per covered quadrant, concatenated in quadrant order.
struct QuadratureRule {
  Region region;
  int n_mu = 0;
  int n_phi = 0;
  std::vector<QuadNode> nodes;

  double weight_sum() const;
};

QuadratureRule quadrature(const Region& region, int n_mu, int n_phi);

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w);

// Closed-form integral of Omega_x^ix Omega_y^iy over one quadrant, via the Beta
// function with quadrant sign factors (-1)^ix for MP, (-1)^(ix+iy) for MM,
// (-1)^iy for PM.
double quarter_monomial_integral(int ix, int iy, Quadrant q);

// Integral of the half-space's own axis moment: Omega_x^k over Xp/Xm, Omega_y^k
// over Yp/Ym. Equals 2pi/(k+1) up to sign.
double half_monomial_integral(int k, HalfSpace h);

// Full-sphere monomial integral (quadrant sum).
double full_monomial_integral(int ix, int iy);

// Gram matrix <b b^T> of the basis over the full sphere (Quarter1: over its
// quadrant), assembled from the closed-form integrals. Symmetric positive definite.
Eigen::MatrixXd gram_matrix(const BasisKind& kind);

}  // namespace mixmom
