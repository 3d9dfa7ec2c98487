#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "mixmom/moments.hpp"
#include "mixmom/sphere.hpp"

namespace mixmom {

struct DualOptions {
  double tol = 1e-9;          // gradient norm tolerance, relative to u00
  int max_iter = 200;
  double armijo_c = 1e-4;
  int max_backtracks = 40;
  double blend_threshold = 0.98;  // anisotropy ratio beyond which moments are blended
  double blend_rmax = 0.02;       // cap on the blend parameter
  // Normalized distance to a sign face of the moment cone (quarter- and
  // mixed-basis components that must be >= 0 or <= 0) below which moments are
  // blended toward isotropic. Moments closer to a face than the angular gap
  // between the quadrature's edge nodes and the quadrant boundary have no
  // finite multiplier, so the dual solve would diverge; lifting the margin to
  // ~4e-3 keeps targets representable for azimuthal orders >= 24 per quadrant.
  double face_threshold = 4e-3;
};

struct DualResult {
  std::array<double, 5> alpha{};
  int iterations = 0;
  double residual = 0.0;
  double blend_r = 0.0;      // isotropic blend actually applied before solving
  bool blend_capped = false; // r hit blend_rmax without restoring the margin
};

struct DualEval {
  double value = 0.0;
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 5, 1> grad;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5> hess;
};

struct DualFailure : std::runtime_error {
  DualFailure(const std::string& msg, double res, int iters)
      : std::runtime_error(msg), residual(res), iterations(iters) {}
  double residual;
  int iterations;
};

struct EntropyFlux {
  std::array<double, 5> fx{};
  std::array<double, 5> fy{};
};

// Quadrature-backed evaluator for the exponential-ansatz dual problem
//   min_alpha <exp(b^T alpha)> - u^T alpha
// over the rule's region. Caches basis values per node; one instance serves many
// solves. Node order groups quadrants contiguously, so sign-filtered fluxes need
// no per-node branching.
class EntropyEvaluator {
 public:
  EntropyEvaluator(const BasisKind& kind, const QuadratureRule& rule);

  const BasisKind& kind() const { return kind_; }
  int components() const { return n_; }
  std::size_t node_count() const { return count_; }

  // Ansatz values psi_i = exp(b_i^T alpha); throws on exponent overflow.
  void ansatz(const double* alpha, std::vector<double>& psi) const;

  // Objective value, gradient and Hessian at alpha for target moments u.
  DualEval eval(const double* alpha, const double* u) const;

  // Newton with Armijo backtracking. warm (optional) seeds the multipliers.
  // psi_out (optional) receives the converged ansatz values scaled to u's density.
  // Throws std::domain_error for non-realizable input, DualFailure on
  // non-convergence.
  DualResult solve(const MomentVec& u, const DualOptions& opts, const double* warm = nullptr,
                   std::vector<double>* psi_out = nullptr) const;

  // Moments <b psi> of cached ansatz values.
  std::array<double, 5> moments_of(const std::vector<double>& psi) const;

  // Full flux vectors <Omega_axis b psi>.
  EntropyFlux flux_of(const std::vector<double>& psi) const;

  // Upwind building blocks: half-range fluxes split by the sign of Omega_x and
  // Omega_y. Each output has `components()` valid entries.
  void half_fluxes(const std::vector<double>& psi, std::array<double, 5>& fx_pos,
                   std::array<double, 5>& fx_neg, std::array<double, 5>& fy_pos,
                   std::array<double, 5>& fy_neg) const;

 private:
  BasisKind kind_;
  int n_;
  std::size_t count_ = 0;
  std::vector<double> w_;        // node weights
  std::vector<double> b_;        // basis values, count x n row-major
  std::vector<double> wbx_;      // w * Omega_x * b
  std::vector<double> wby_;      // w * Omega_y * b
  std::array<std::array<std::size_t, 2>, 4> quad_range_{};  // node ranges per quadrant
  mutable std::vector<double> expo_;  // scratch exponents

  friend struct EntropySolverDetail;
};

// Moment blend toward the basis's isotropic point when the anisotropy ratio
// exceeds opts.blend_threshold; returns the blended vector and the r applied.
MomentVec blend_toward_isotropic(const MomentVec& u, const DualOptions& opts, double* r_out,
                                 bool* capped_out);

// Anisotropy ratio used by the blend: first-order norm / u00 (Full1, Quarter1) or
// the mixed-moment norm (Mixed1).
double anisotropy_ratio(const MomentVec& u);

DualEval dual_objective(const std::array<double, 5>& alpha, const MomentVec& u,
                        const QuadratureRule& rule);

DualResult solve_dual(const MomentVec& u, const QuadratureRule& rule, const DualOptions& opts = {},
                      const double* warm = nullptr);

EntropyFlux closure_flux_entropy(const std::array<double, 5>& alpha, const BasisKind& kind,
                                 const QuadratureRule& rule);

// Multipliers of the linear (polynomial) ansatz psi = b^T alpha matching u:
// Gram solve <b b^T> alpha = u.
std::array<double, 5> linear_closure(const MomentVec& u);

}  // namespace mixmom
