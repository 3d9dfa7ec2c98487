#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "mixmom/collision.hpp"
#include "mixmom/entropy.hpp"
#include "mixmom/kershaw.hpp"
#include "mixmom/moments.hpp"
#include "mixmom/qm1_table.hpp"

namespace mixmom {

enum class ClosureModel { P1Linear, M1Entropy, MM1Entropy, MK1, QK1AdvectionOnly };
enum class LbVariant { Polynomial, Tabulated };
enum class FluxScheme { Kinetic, LaxFriedrichs };

struct ProblemCoefficients {
  double sigma_s = 0.0;  // forward-peaked scattering strength
  double sigma_a = 0.0;  // absorption
  double q = 0.0;        // isotropic emission density
};

struct Domain {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
};

// Boundary data for one side. Beams are Gaussians in (mu, azimuth) overlaid on
// segments of the side; elsewhere the isotropic background value applies.
struct SideBoundary {
  enum class Kind { Isotropic, Periodic };
  struct Beam {
    double lo = 0.0, hi = 0.0;  // segment along the side's boundary coordinate
    double azimuth = 0.0;       // beam direction
    double width2 = 0.05;       // angular Gaussian sigma^2
    double amplitude = 0.0;     // peak angular density
  };
  Kind kind = Kind::Isotropic;
  double iso_psi = 0.0;  // angular density of the background inflow
  std::vector<Beam> beams;
};

enum class Side { Left = 0, Right = 1, Bottom = 2, Top = 3 };

struct SolverConfig {
  ClosureModel closure = ClosureModel::MK1;
  LbVariant lb = LbVariant::Tabulated;
  FluxScheme flux = FluxScheme::Kinetic;
  bool linear_reconstruction = false;  // central slopes; P1Linear only
  ProblemCoefficients coeff;
  double cfl = 0.45;          // in 2D the x/y bounds sum, so keep cfl <= 0.5
  double floor = 1e-10;       // density floor
  double limiter_eps = 1e-9;  // interior margin enforced by the limiter
  int quad_n_mu = 32, quad_n_phi = 32;  // per-quadrant closure quadrature
  int bc_quad_n = 80;                   // per-quadrant boundary-moment quadrature
  DualOptions dual;
  double lb_cap_scale = 1e6;      // trace cap, relative to u00
  double lb_trace_scale = 100.0;  // a-priori trace magnitude for time-step bounds
  const QM1Table* table = nullptr;  // required by MK1 with the tabulated LB
};

struct StepStats {
  double dt = 0.0;
  double mass_before = 0.0, mass_after = 0.0;
  double boundary_inflow = 0.0;  // net mass through the boundary this step
  double source_mass = 0.0;      // emission minus absorption mass this step
  double limiter_mass = 0.0;     // mass added by the density floor
  double conservation_residual = 0.0;
  long limiter_hits = 0;
  long cap_events = 0;
};

struct RunStats {
  long steps = 0;
  long limiter_hits = 0;
  long cap_events = 0;
  long dual_solves = 0;
  long dual_iterations = 0;
  double max_conservation_residual = 0.0;
  double min_u00_seen = std::numeric_limits<double>::infinity();
};

struct Diagnostics {
  double time = 0.0;
  double mass = 0.0;
  double min_u00 = 0.0, max_u00 = 0.0;
  double symmetry_error = 0.0;  // 16-rotation bilinear resample of the density
  long realizability_violations = 0;
  RunStats run;
};

struct CutSample {
  double s = 0.0;  // signed arc length from the domain center
  double x = 0.0, y = 0.0;
  MomentVec u;  // bilinearly resampled moments (QK1 parts aggregated)
};

// Per-cell upwind building blocks: half-range fluxes split by direction sign.
struct ClosureData {
  std::array<double, 5> fxp{}, fxm{}, fyp{}, fym{};
};

// P1 closure flux matrix (3x3): F_axis = A u for the Full1 moments.
Eigen::Matrix3d p1_flux_matrix(Axis axis);

// Structured finite-volume solver: SSP-RK2 (Heun) with a realizability limiter
// after every forward-Euler stage, kinetic upwind or Lax-Friedrichs fluxes,
// Dirichlet ghost cells (or periodic pairs), absorption, emission, and the
// angular-diffusion scattering operator matching the closure.
// QK1AdvectionOnly evolves four independent quarter-moment systems per cell
// ("parts"); all other closures have one part.
class Simulation {
 public:
  Simulation(const SolverConfig& cfg, const Domain& dom, int nx, int ny,
             const std::array<SideBoundary, 4>& sides,
             const std::function<MomentVec(double x, double y, int part)>& initial);
  ~Simulation();

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int parts() const { return parts_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double time() const { return time_; }
  const Domain& domain() const { return dom_; }
  const SolverConfig& config() const { return cfg_; }
  BasisKind part_kind(int part) const;

  double cell_x(int i) const { return dom_.xmin + (i + 0.5) * dx_; }
  double cell_y(int j) const { return dom_.ymin + (j + 0.5) * dy_; }
  const MomentVec& cell(int i, int j, int part = 0) const;
  MomentVec& cell(int i, int j, int part = 0);
  // Full-sphere (u00, u10, u01, 0, 0) summary of a cell; sums QK1 parts.
  MomentVec aggregate(int i, int j) const;

  double cfl_dt() const;
  StepStats step(double dt);
  void advance_to(double t_final);

  Diagnostics diagnostics() const;
  std::vector<CutSample> cut_horizontal() const;
  std::vector<CutSample> cut_diagonal() const;
  const RunStats& run_stats() const { return stats_; }

 private:
  struct StageOut {
    double boundary_inflow = 0.0;
    double source_mass = 0.0;
    long cap_events = 0;
  };

  std::size_t idx(int i, int j, int part) const {
    return (static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
            static_cast<std::size_t>(i)) *
               static_cast<std::size_t>(parts_) +
           static_cast<std::size_t>(part);
  }

  void validate() const;
  void init_quadrature();
  void init_ghosts();
  MomentVec boundary_moments(Side side, double coord, int part) const;
  void eval_closure(const MomentVec& u, std::array<double, 5>* warm, char* warm_ok,
                    ClosureData& out, int part, int ci, int cj, long* iters,
                    long* solves) const;
  StageOut compute_rhs(const std::vector<MomentVec>& state,
                       std::vector<std::array<double, 5>>& rhs);
  double total_mass(const std::vector<MomentVec>& state) const;
  double sample_density(double x, double y) const;  // bilinear, aggregated
  MomentVec sample_moments(double x, double y) const;
  // Deterministic row bands: results are identical for any MIXMOM_THREADS value.
  void for_rows(int count, const std::function<void(int j)>& body) const;

  SolverConfig cfg_;
  Domain dom_;
  int nx_ = 0, ny_ = 0, parts_ = 1;
  double dx_ = 0.0, dy_ = 0.0;
  double time_ = 0.0;
  std::array<SideBoundary, 4> sides_;
  int threads_ = 1;

  std::vector<MomentVec> cells_;
  std::vector<MomentVec> stage_;
  std::vector<std::array<double, 5>> rhs_;
  std::vector<std::array<double, 5>> warm_;
  std::vector<char> warm_ok_;
  std::vector<ClosureData> cd_;
  std::vector<std::array<double, 5>> fx_face_;  // (nx+1) x ny x parts
  std::vector<std::array<double, 5>> fy_face_;  // nx x (ny+1) x parts

  QuadratureRule rule_;     // closure quadrature (full sphere)
  QuadratureRule bc_rule_;  // boundary-moment quadrature (built when beams exist)
  std::unique_ptr<EntropyEvaluator> ev_;
  Eigen::Matrix3d p1_half_[4];                 // x+, x-, y+, y- half-flux operators
  std::array<std::array<double, 5>, 4> bmean_{};  // <b> per part; emission coupling

  std::array<std::vector<MomentVec>, 4> ghost_u_;
  std::array<std::vector<ClosureData>, 4> ghost_cd_;

  RunStats stats_;
};

}  // namespace mixmom
