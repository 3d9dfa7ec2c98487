#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mixmom/moments.hpp"
#include "mixmom/qm1_table.hpp"
#include "mixmom/solver.hpp"
#include "mixmom/sphere.hpp"

using namespace mixmom;

namespace {

const QM1Table& shared_table() {
  static const QM1Table table =
      QM1Table::tabulate(24, quadrature(Region::quarter(Quadrant::PP), 24, 24));
  return table;
}

std::array<SideBoundary, 4> periodic_sides() {
  std::array<SideBoundary, 4> s;
  for (auto& b : s) b.kind = SideBoundary::Kind::Periodic;
  return s;
}

std::array<SideBoundary, 4> iso_sides(double psi) {
  std::array<SideBoundary, 4> s;
  for (auto& b : s) {
    b.kind = SideBoundary::Kind::Isotropic;
    b.iso_psi = psi;
  }
  return s;
}

// Smooth positive bump for conservation runs.
double bump(double x, double y) {
  const double r2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5);
  return 0.5 + 2.0 * std::exp(-r2 / 0.02);
}

std::function<MomentVec(double, double, int)> iso_initial(ClosureModel m,
                                                          const std::function<double(double, double)>& psi) {
  return [m, psi](double x, double y, int part) {
    BasisKind kind;
    switch (m) {
      case ClosureModel::P1Linear:
      case ClosureModel::M1Entropy:
        kind = BasisKind::full1();
        break;
      case ClosureModel::MM1Entropy:
      case ClosureModel::MK1:
        kind = BasisKind::mixed1();
        break;
      case ClosureModel::QK1AdvectionOnly:
        kind = BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(part)]);
        break;
    }
    return isotropic_moments(kind, psi(x, y));
  };
}

}  // namespace

TEST_CASE("linear-closure flux matrices reproduce quadrature moments") {
  // Oracle: the linear ansatz psi = (u00 + 3 u10 Ox + 3 u01 Oy)/(4 pi)
  // reproduces its own moments; its flux moments <O_a b psi> are quadrature
  // integrals of polynomials, so the rule is exact.
  const QuadratureRule rule = quadrature(Region::full(), 16, 16);
  const Eigen::Matrix3d ax = p1_flux_matrix(Axis::X);
  const Eigen::Matrix3d ay = p1_flux_matrix(Axis::Y);
  const Eigen::Vector3d u(1.7, 0.31, -0.24);
  Eigen::Vector3d fx = Eigen::Vector3d::Zero(), fy = Eigen::Vector3d::Zero();
  for (const QuadNode& nd : rule.nodes) {
    const double ox = nd.dir.omega_x();
    const double oy = nd.dir.omega_y();
    const double psi = (u(0) + 3.0 * u(1) * ox + 3.0 * u(2) * oy) / (4.0 * kPi);
    const Eigen::Vector3d b(1.0, ox, oy);
    fx += nd.weight * ox * psi * b;
    fy += nd.weight * oy * psi * b;
  }
  CHECK((ax * u - fx).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((ay * u - fy).cwiseAbs().maxCoeff() <= 1e-13);
  // Pinned structure: advection of the mean plus the 1/3 pressure closure.
  CHECK(ax(0, 1) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(ax(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(std::abs(ax(0, 0)) + std::abs(ax(0, 2)) + std::abs(ax(2, 2)) <= 1e-14);
}

TEST_CASE("uniform states are exact steady states of pure advection") {
  const Domain dom;
  auto run_uniform = [&](SolverConfig cfg, const MomentVec& uval, int parts_expected) {
    Simulation sim(cfg, dom, 12, 12, periodic_sides(),
                   [&](double, double, int part) {
                     if (cfg.closure == ClosureModel::QK1AdvectionOnly) {
                       MomentVec q;
                       q.kind = BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(part)]);
                       q[0] = uval[0];
                       q[1] = quadrant_sign_x(kQuadrants[static_cast<std::size_t>(part)]) * 0.2;
                       q[2] = quadrant_sign_y(kQuadrants[static_cast<std::size_t>(part)]) * 0.25;
                       return q;
                     }
                     return uval;
                   });
    REQUIRE(sim.parts() == parts_expected);
    std::vector<MomentVec> before;
    for (int j = 0; j < sim.ny(); ++j)
      for (int i = 0; i < sim.nx(); ++i)
        for (int p = 0; p < sim.parts(); ++p) before.push_back(sim.cell(i, j, p));
    for (int s = 0; s < 3; ++s) {
      const StepStats st = sim.step(sim.cfl_dt());
      CHECK(std::abs(st.conservation_residual) <= 1e-12 * st.mass_after);
    }
    std::size_t n = 0;
    double worst = 0.0;
    for (int j = 0; j < sim.ny(); ++j)
      for (int i = 0; i < sim.nx(); ++i)
        for (int p = 0; p < sim.parts(); ++p) {
          const MomentVec& now = sim.cell(i, j, p);
          for (int c = 0; c < now.size(); ++c)
            worst = std::max(worst, std::abs(now[c] - before[n][c]));
          ++n;
        }
    CHECK(worst <= 1e-13);
  };

  MomentVec mixed;
  mixed.kind = BasisKind::mixed1();
  mixed[0] = 1.3;
  mixed[1] = 0.26;
  mixed[2] = -0.13;
  mixed[3] = 0.195;
  mixed[4] = -0.286;

  SolverConfig mk1;
  mk1.closure = ClosureModel::MK1;
  mk1.flux = FluxScheme::Kinetic;
  mk1.table = &shared_table();
  run_uniform(mk1, mixed, 1);

  MomentVec full;
  full.kind = BasisKind::full1();
  full[0] = 1.1;
  full[1] = 0.2;
  full[2] = -0.15;
  SolverConfig p1;
  p1.closure = ClosureModel::P1Linear;
  p1.flux = FluxScheme::LaxFriedrichs;
  run_uniform(p1, full, 1);

  SolverConfig qk1;
  qk1.closure = ClosureModel::QK1AdvectionOnly;
  run_uniform(qk1, mixed, 4);
}

TEST_CASE("periodic scattering runs conserve mass to rounding") {
  const Domain dom;
  auto run_conservation = [&](SolverConfig cfg, int steps) {
    cfg.coeff.sigma_s = 1.0;
    Simulation sim(cfg, dom, 16, 16, periodic_sides(), iso_initial(cfg.closure, bump));
    for (int s = 0; s < steps; ++s) {
      const StepStats st = sim.step(sim.cfl_dt());
      CHECK(std::abs(st.conservation_residual) <= 1e-12 * st.mass_after);
      CHECK(std::abs(st.mass_after - st.mass_before) <= 1e-12 * st.mass_after);
    }
  };

  SolverConfig p1;
  p1.closure = ClosureModel::P1Linear;
  run_conservation(p1, 8);

  SolverConfig m1;
  m1.closure = ClosureModel::M1Entropy;
  run_conservation(m1, 4);

  SolverConfig mm1;
  mm1.closure = ClosureModel::MM1Entropy;
  mm1.lb = LbVariant::Polynomial;
  run_conservation(mm1, 4);

  SolverConfig mk1;
  mk1.closure = ClosureModel::MK1;
  mk1.table = &shared_table();
  run_conservation(mk1, 8);

  // Quarter advection carries no scattering; conservation is purely advective.
  SolverConfig qk1;
  qk1.closure = ClosureModel::QK1AdvectionOnly;
  Simulation sim(qk1, dom, 16, 16, periodic_sides(), iso_initial(qk1.closure, bump));
  for (int s = 0; s < 8; ++s) {
    const StepStats st = sim.step(sim.cfl_dt());
    CHECK(std::abs(st.conservation_residual) <= 1e-12 * st.mass_after);
  }
}

TEST_CASE("uniform absorption follows the two-stage decay factor") {
  SolverConfig cfg;
  cfg.closure = ClosureModel::P1Linear;
  cfg.coeff.sigma_a = 2.5;
  const Domain dom;
  Simulation sim(cfg, dom, 8, 8, periodic_sides(),
                 iso_initial(cfg.closure, [](double, double) { return 0.25; }));
  const double u0 = sim.cell(3, 3)[0];
  const double dt = 0.004;
  const int steps = 250;
  for (int s = 0; s < steps; ++s) (void)sim.step(dt);
  // Heun's method applied to u' = -sigma_a u multiplies by the quadratic
  // Taylor factor each step.
  const double sd = cfg.coeff.sigma_a * dt;
  const double factor = std::pow(1.0 - sd + 0.5 * sd * sd, steps);
  const double got = sim.cell(3, 3)[0];
  CHECK(std::abs(got - u0 * factor) <= 1e-12 * u0);
  CHECK(std::abs(got - u0 * std::exp(-2.5)) <= 2e-4 * u0);
  CHECK(std::abs(sim.time() - 1.0) <= 1e-12);
}

TEST_CASE("emission balances absorption at the isotropic equilibrium") {
  // d u00/dt = q <1> - sigma_a u00 vanishes at u00 = 4 pi q / sigma_a.
  SolverConfig cfg;
  cfg.closure = ClosureModel::MK1;
  cfg.table = &shared_table();
  cfg.coeff.sigma_a = 2.0;
  cfg.coeff.q = 0.5;
  const double psi_eq = cfg.coeff.q / cfg.coeff.sigma_a;  // angular density
  const Domain dom;
  Simulation sim(cfg, dom, 8, 8, periodic_sides(),
                 iso_initial(cfg.closure, [&](double, double) { return psi_eq; }));
  const MomentVec ref = sim.cell(4, 4);
  for (int s = 0; s < 6; ++s) (void)sim.step(sim.cfl_dt());
  for (int c = 0; c < 5; ++c) CHECK(std::abs(sim.cell(4, 4)[c] - ref[c]) <= 1e-12 * ref[0]);
}

TEST_CASE("isotropic states are scattering equilibria for every closure") {
  const Domain dom;
  auto drift_after = [&](SolverConfig cfg, int steps) {
    cfg.coeff.sigma_s = 0.8;
    Simulation sim(cfg, dom, 8, 8, periodic_sides(),
                   iso_initial(cfg.closure, [](double, double) { return 0.4; }));
    const MomentVec ref = sim.cell(2, 5);
    for (int s = 0; s < steps; ++s) (void)sim.step(sim.cfl_dt());
    double worst = 0.0;
    for (int c = 0; c < ref.size(); ++c)
      worst = std::max(worst, std::abs(sim.cell(2, 5)[c] - ref[c]));
    return worst / ref[0];
  };

  SolverConfig p1;
  p1.closure = ClosureModel::P1Linear;
  CHECK(drift_after(p1, 5) <= 1e-12);

  SolverConfig mm_poly;
  mm_poly.closure = ClosureModel::MM1Entropy;
  mm_poly.lb = LbVariant::Polynomial;
  CHECK(drift_after(mm_poly, 5) <= 1e-10);

  SolverConfig mm_tr;
  mm_tr.closure = ClosureModel::MM1Entropy;
  mm_tr.lb = LbVariant::Tabulated;  // traces from each cell's own multipliers
  CHECK(drift_after(mm_tr, 5) <= 1e-6);

  SolverConfig mk1;
  mk1.closure = ClosureModel::MK1;
  mk1.table = &shared_table();
  CHECK(drift_after(mk1, 5) <= 1e-6);
}

TEST_CASE("linear closure with reconstruction converges at second order") {
  // Manufactured periodic solution: one Fourier mode of the linear system
  //   u_t + Ax u_x + Ay u_y = C u,  C = diag(-sa, -sa-ss, -sa-ss),
  // evolved exactly through the eigendecomposition of the symbol.
  const double ss = 0.7, sa = 0.3;
  const double kx = 2.0 * kPi, ky = 2.0 * kPi;
  const double t_final = 0.4;
  const Eigen::Vector3d mean(2.0, 0.15, -0.1);
  const Eigen::Vector3cd uhat0(std::complex<double>(0.3, 0.0),
                               std::complex<double>(0.10, 0.05),
                               std::complex<double>(-0.07, 0.02));

  Eigen::Matrix3cd symbol = Eigen::Matrix3cd::Zero();
  symbol -= std::complex<double>(0.0, 1.0) *
            (kx * p1_flux_matrix(Axis::X) + ky * p1_flux_matrix(Axis::Y));
  symbol(0, 0) += std::complex<double>(-sa, 0.0);
  symbol(1, 1) += std::complex<double>(-sa - ss, 0.0);
  symbol(2, 2) += std::complex<double>(-sa - ss, 0.0);
  const Eigen::ComplexEigenSolver<Eigen::Matrix3cd> ces(symbol);
  REQUIRE(ces.info() == Eigen::Success);
  const Eigen::Vector3cd coef = ces.eigenvectors().inverse() * uhat0;
  Eigen::Vector3cd uhat_t = Eigen::Vector3cd::Zero();
  for (int k = 0; k < 3; ++k)
    uhat_t += coef(k) * std::exp(ces.eigenvalues()(k) * t_final) * ces.eigenvectors().col(k);
  const Eigen::Vector3d mean_t(mean(0) * std::exp(-sa * t_final),
                               mean(1) * std::exp(-(sa + ss) * t_final),
                               mean(2) * std::exp(-(sa + ss) * t_final));

  auto l2_error = [&](int n, FluxScheme flux) {
    SolverConfig cfg;
    cfg.closure = ClosureModel::P1Linear;
    cfg.flux = flux;
    cfg.linear_reconstruction = true;
    cfg.coeff.sigma_s = ss;
    cfg.coeff.sigma_a = sa;
    const Domain dom;
    Simulation sim(cfg, dom, n, n, periodic_sides(), [&](double x, double y, int) {
      const std::complex<double> phase =
          std::exp(std::complex<double>(0.0, kx * x + ky * y));
      MomentVec u;
      u.kind = BasisKind::full1();
      for (int c = 0; c < 3; ++c) u[c] = mean(c) + (uhat0(c) * phase).real();
      return u;
    });
    sim.advance_to(t_final);
    double err2 = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::complex<double> phase = std::exp(
            std::complex<double>(0.0, kx * sim.cell_x(i) + ky * sim.cell_y(j)));
        for (int c = 0; c < 3; ++c) {
          const double ref = mean_t(c) + (uhat_t(c) * phase).real();
          const double d = sim.cell(i, j)[c] - ref;
          err2 += d * d * sim.dx() * sim.dy();
        }
      }
    return std::sqrt(err2);
  };

  const double e32 = l2_error(32, FluxScheme::Kinetic);
  const double e64 = l2_error(64, FluxScheme::Kinetic);
  const double e128 = l2_error(128, FluxScheme::Kinetic);
  const double p1 = std::log2(e32 / e64);
  const double p2 = std::log2(e64 / e128);
  CHECK(p1 >= 1.8);
  CHECK(p2 >= 1.8);

  const double f32 = l2_error(32, FluxScheme::LaxFriedrichs);
  const double f64 = l2_error(64, FluxScheme::LaxFriedrichs);
  CHECK(std::log2(f32 / f64) >= 1.7);
}

TEST_CASE("inflow fronts propagate causally into vacuum") {
  SolverConfig cfg;
  cfg.closure = ClosureModel::MK1;
  cfg.table = &shared_table();
  auto sides = iso_sides(0.0);
  sides[static_cast<std::size_t>(Side::Left)].iso_psi = 2.0;
  const Domain dom;
  Simulation sim(cfg, dom, 25, 25, sides, iso_initial(cfg.closure, [&](double, double) {
    return cfg.floor / (4.0 * kPi);
  }));
  double inflow = 0.0;
  while (sim.time() < 0.2 - 1e-12) {
    const StepStats st = sim.step(std::min(sim.cfl_dt(), 0.2 - sim.time()));
    inflow += st.boundary_inflow;
    CHECK(std::abs(st.conservation_residual) <=
          1e-11 * std::max({1.0, st.mass_after, std::abs(st.boundary_inflow)}));
  }
  CHECK(inflow > 0.1);  // mass really entered through the lit wall

  const Diagnostics d = sim.diagnostics();
  CHECK(d.realizability_violations == 0);
  CHECK(d.min_u00 >= 0.0);

  // The front started at x = 0 with speed at most 1. Each Heun stage can move
  // information one cell, so the numerical tail extends beyond x = t, but it
  // must decay monotonically to the floor and leave the far wall dark.
  for (int j = 0; j < sim.ny(); ++j) {
    const double lit = sim.cell(0, j)[0];
    CHECK(lit > 5.0);
    for (int i = 0; i + 1 < sim.nx(); ++i)
      if (sim.cell(i, j)[0] > 10.0 * cfg.floor) CHECK(sim.cell(i + 1, j)[0] < sim.cell(i, j)[0]);
    for (int i = 0; i < sim.nx(); ++i)
      if (sim.cell_x(i) > 0.55) CHECK(sim.cell(i, j)[0] <= 1e-3 * lit);
    CHECK(sim.cell(sim.nx() - 1, j)[0] <= 2.0 * cfg.floor);
    CHECK(sim.cell(sim.nx() - 1, j)[0] >= 0.9 * cfg.floor);
  }

  // The configuration is mirror-symmetric about the horizontal midline.
  for (int j = 0; j < sim.ny() / 2; ++j)
    for (int i = 0; i < sim.nx(); ++i) {
      const MomentVec& a = sim.cell(i, j);
      const MomentVec& b = sim.cell(i, sim.ny() - 1 - j);
      CHECK(std::abs(a[0] - b[0]) <= 1e-13 * std::max(1.0, a[0]));
      CHECK(std::abs(a[1] - b[1]) <= 1e-13 * std::max(1.0, a[0]));
      CHECK(std::abs(a[2] - b[2]) <= 1e-13 * std::max(1.0, a[0]));
      CHECK(std::abs(a[3] + b[4]) <= 1e-13 * std::max(1.0, a[0]));
      CHECK(std::abs(a[4] + b[3]) <= 1e-13 * std::max(1.0, a[0]));
    }
}

TEST_CASE("runs are deterministic and thread-count invariant") {
  auto run_once = [&]() {
    SolverConfig cfg;
    cfg.closure = ClosureModel::MK1;
    cfg.table = &shared_table();
    cfg.coeff.sigma_s = 0.5;
    const Domain dom;
    Simulation sim(cfg, dom, 16, 16, iso_sides(0.3), iso_initial(cfg.closure, bump));
    for (int s = 0; s < 4; ++s) (void)sim.step(sim.cfl_dt());
    std::vector<double> out;
    for (int j = 0; j < sim.ny(); ++j)
      for (int i = 0; i < sim.nx(); ++i)
        for (int c = 0; c < 5; ++c) out.push_back(sim.cell(i, j)[c]);
    return out;
  };

  const std::vector<double> base = run_once();
  const std::vector<double> repeat = run_once();
  CHECK(base == repeat);

  ::setenv("MIXMOM_THREADS", "3", 1);
  const std::vector<double> threaded = run_once();
  ::unsetenv("MIXMOM_THREADS");
  CHECK(base == threaded);
}

TEST_CASE("step statistics close the mass budget with sources and boundaries") {
  SolverConfig cfg;
  cfg.closure = ClosureModel::MK1;
  cfg.table = &shared_table();
  cfg.coeff.sigma_s = 0.4;
  cfg.coeff.sigma_a = 0.7;
  cfg.coeff.q = 0.2;
  const Domain dom;
  Simulation sim(cfg, dom, 12, 12, iso_sides(0.6), iso_initial(cfg.closure, bump));
  for (int s = 0; s < 8; ++s) {
    const StepStats st = sim.step(sim.cfl_dt());
    const double scale = std::max({1.0, st.mass_after, std::abs(st.boundary_inflow),
                                   std::abs(st.source_mass)});
    CHECK(std::abs(st.conservation_residual) <= 1e-11 * scale);
    CHECK(std::abs(st.mass_after - st.mass_before - st.boundary_inflow - st.source_mass -
                   st.limiter_mass - st.conservation_residual) <= 1e-13 * scale);
  }
  const RunStats& rs = sim.run_stats();
  CHECK(rs.steps == 8);
  CHECK(rs.dual_solves == 0);  // the Kershaw engine is closed-form
}

TEST_CASE("time-step bound combines advection and reaction") {
  const Domain dom;
  SolverConfig p1;
  p1.closure = ClosureModel::P1Linear;
  p1.coeff.sigma_s = 2.0;
  p1.coeff.sigma_a = 0.5;
  Simulation a(p1, dom, 16, 16, periodic_sides(),
               iso_initial(p1.closure, [](double, double) { return 1.0; }));
  // react = sigma_a + 0.5 sigma_s * 2 = 2.5; the advective bound wins here.
  CHECK(a.cfl_dt() == doctest::Approx(0.45 / 16.0).epsilon(1e-14));

  p1.coeff.sigma_a = 1000.0;
  Simulation b(p1, dom, 16, 16, periodic_sides(),
               iso_initial(p1.closure, [](double, double) { return 1.0; }));
  CHECK(b.cfl_dt() == doctest::Approx(4.0 * 0.45 / 1002.0).epsilon(1e-12));

  SolverConfig mk1;
  mk1.closure = ClosureModel::MK1;
  mk1.table = &shared_table();
  mk1.coeff.sigma_s = 1.0;
  Simulation c(mk1, dom, 4, 4, periodic_sides(),
               iso_initial(mk1.closure, [](double, double) { return 1.0; }));
  // Coarse grid: the reaction bound with the table's trace scale binds.
  const double scale = 2.0 + std::min(mk1.lb_cap_scale, shared_table().max_trace_sum());
  const double expect = std::min(0.45 / 4.0, 4.0 * 0.45 / (0.5 * scale));
  CHECK(expect < 0.45 / 4.0);
  CHECK(c.cfl_dt() == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("aggregate sums quarter parts into full-sphere moments") {
  SolverConfig qk1;
  qk1.closure = ClosureModel::QK1AdvectionOnly;
  const Domain dom;
  Simulation sim(qk1, dom, 4, 4, periodic_sides(), [](double, double, int part) {
    MomentVec q;
    q.kind = BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(part)]);
    q[0] = 0.25 + 0.05 * part;
    q[1] = quadrant_sign_x(kQuadrants[static_cast<std::size_t>(part)]) * 0.1;
    q[2] = quadrant_sign_y(kQuadrants[static_cast<std::size_t>(part)]) * 0.08;
    return q;
  });
  REQUIRE(sim.parts() == 4);
  for (int p = 0; p < 4; ++p)
    CHECK(sim.part_kind(p) == BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(p)]));
  const MomentVec agg = sim.aggregate(1, 2);
  double mass = 0.0, mx = 0.0, my = 0.0;
  for (int p = 0; p < 4; ++p) {
    const MomentVec& q = sim.cell(1, 2, p);
    mass += q[0];
    mx += q[1];
    my += q[2];
  }
  CHECK(agg.kind == BasisKind::full1());
  CHECK(agg[0] == doctest::Approx(mass).epsilon(1e-14));
  CHECK(agg[1] == doctest::Approx(mx).epsilon(1e-14));
  CHECK(agg[2] == doctest::Approx(my).epsilon(1e-14));
}

TEST_CASE("configuration errors are rejected") {
  const Domain dom;
  const auto iso = iso_initial(ClosureModel::P1Linear, [](double, double) { return 1.0; });

  SolverConfig cfg;
  cfg.closure = ClosureModel::P1Linear;
  cfg.cfl = 0.6;
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, periodic_sides(), iso), std::invalid_argument);

  cfg = {};
  cfg.closure = ClosureModel::P1Linear;
  cfg.coeff.sigma_s = -1.0;
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, periodic_sides(), iso), std::invalid_argument);

  cfg = {};
  cfg.closure = ClosureModel::QK1AdvectionOnly;
  cfg.coeff.sigma_s = 1.0;
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, periodic_sides(),
                             iso_initial(cfg.closure, [](double, double) { return 1.0; })),
                  std::invalid_argument);

  cfg = {};
  cfg.closure = ClosureModel::MK1;
  cfg.linear_reconstruction = true;
  cfg.table = &shared_table();
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, periodic_sides(),
                             iso_initial(cfg.closure, [](double, double) { return 1.0; })),
                  std::invalid_argument);

  cfg = {};
  cfg.closure = ClosureModel::MK1;
  cfg.coeff.sigma_s = 1.0;
  cfg.table = nullptr;
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, periodic_sides(),
                             iso_initial(cfg.closure, [](double, double) { return 1.0; })),
                  std::invalid_argument);

  cfg = {};
  cfg.closure = ClosureModel::P1Linear;
  auto mismatched = periodic_sides();
  mismatched[static_cast<std::size_t>(Side::Right)].kind = SideBoundary::Kind::Isotropic;
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, mismatched, iso), std::invalid_argument);

  auto beamed = periodic_sides();
  beamed[0].beams.push_back({0.2, 0.4, 0.0, 0.05, 1.0});
  CHECK_THROWS_AS(Simulation(cfg, dom, 8, 8, beamed, iso), std::invalid_argument);

  Simulation ok(cfg, dom, 8, 8, periodic_sides(), iso);
  CHECK_THROWS_AS((void)ok.step(0.0), std::invalid_argument);
}
