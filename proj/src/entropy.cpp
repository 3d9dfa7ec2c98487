#include "mixmom/entropy.hpp"

#include <cmath>
#include <limits>

namespace mixmom {

namespace {

constexpr double kExpOverflow = 690.0;  // exp argument ceiling before inf

double iso_log_start(const BasisKind& kind) {
  // Multiplier of the flat ansatz with unit density on the basis's region.
  return kind.family == BasisKind::Family::Quarter1 ? std::log(1.0 / kPi)
                                                    : std::log(1.0 / (4.0 * kPi));
}

}  // namespace

EntropyEvaluator::EntropyEvaluator(const BasisKind& kind, const QuadratureRule& rule)
    : kind_(kind), n_(kind.size()) {
  count_ = rule.nodes.size();
  w_.resize(count_);
  b_.resize(count_ * n_);
  wbx_.resize(count_ * n_);
  wby_.resize(count_ * n_);
  expo_.resize(count_);
  for (auto& r : quad_range_) r = {0, 0};

  std::size_t i = 0;
  Quadrant current = rule.nodes.empty() ? Quadrant::PP : rule.nodes.front().quadrant;
  std::size_t range_start = 0;
  for (const QuadNode& node : rule.nodes) {
    if (node.quadrant != current) {
      quad_range_[static_cast<int>(current)] = {range_start, i};
      current = node.quadrant;
      range_start = i;
    }
    const auto bv = basis_eval(kind_, node.dir, node.quadrant);
    const double ox = node.dir.omega_x();
    const double oy = node.dir.omega_y();
    w_[i] = node.weight;
    for (int k = 0; k < n_; ++k) {
      b_[i * n_ + k] = bv[static_cast<std::size_t>(k)];
      wbx_[i * n_ + k] = node.weight * ox * bv[static_cast<std::size_t>(k)];
      wby_[i * n_ + k] = node.weight * oy * bv[static_cast<std::size_t>(k)];
    }
    ++i;
  }
  if (!rule.nodes.empty()) quad_range_[static_cast<int>(current)] = {range_start, i};
}

namespace {

// Exponent fill kept free-standing so the exp loop vectorizes.
bool fill_exponents(const std::vector<double>& b, int n, std::size_t count, const double* alpha,
                    std::vector<double>& expo) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    double e = 0.0;
    for (int k = 0; k < n; ++k) e += b[i * static_cast<std::size_t>(n) + k] * alpha[k];
    expo[i] = e;
    mx = std::max(mx, e);
  }
  return mx <= kExpOverflow;
}

void exp_inplace(std::vector<double>& v, std::size_t count) {
  double* p = v.data();
  for (std::size_t i = 0; i < count; ++i) p[i] = std::exp(p[i]);
}

}  // namespace

void EntropyEvaluator::ansatz(const double* alpha, std::vector<double>& psi) const {
  if (!fill_exponents(b_, n_, count_, alpha, expo_))
    throw std::domain_error("entropy ansatz: exponent overflow (moments too close to boundary)");
  psi = expo_;
  exp_inplace(psi, count_);
}

DualEval EntropyEvaluator::eval(const double* alpha, const double* u) const {
  std::vector<double> psi;
  ansatz(alpha, psi);
  DualEval out;
  out.grad.resize(n_);
  out.hess.resize(n_, n_);
  out.grad.setZero();
  out.hess.setZero();
  double val = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    const double wp = w_[i] * psi[i];
    val += wp;
    const double* bi = &b_[i * n_];
    for (int j = 0; j < n_; ++j) {
      out.grad(j) += wp * bi[j];
      for (int k = j; k < n_; ++k) out.hess(j, k) += wp * bi[j] * bi[k];
    }
  }
  for (int j = 0; j < n_; ++j) {
    val -= u[j] * alpha[j];
    out.grad(j) -= u[j];
    for (int k = 0; k < j; ++k) out.hess(j, k) = out.hess(k, j);
  }
  out.value = val;
  return out;
}

double anisotropy_ratio(const MomentVec& u) {
  if (u[0] <= 0.0) throw std::domain_error("anisotropy_ratio: u00 must be positive");
  if (u.kind.family == BasisKind::Family::Mixed1) return mm_norm(normalized_mixed(u));
  return std::hypot(u[1], u[2]) / u[0];
}

MomentVec blend_toward_isotropic(const MomentVec& u, const DualOptions& opts, double* r_out,
                                 bool* capped_out) {
  const double ratio = anisotropy_ratio(u);
  double r = 0.0;
  bool capped = false;
  MomentVec out = u;

  const double mixed_iso[5] = {0.0, 0.25, -0.25, 0.25, -0.25};
  double other_iso[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  const double* iso = other_iso;
  if (u.kind.family == BasisKind::Family::Mixed1) {
    iso = mixed_iso;
  } else if (u.kind.family == BasisKind::Family::Quarter1) {
    other_iso[1] = 0.5 * quadrant_sign_x(u.kind.quadrant);
    other_iso[2] = 0.5 * quadrant_sign_y(u.kind.quadrant);
  }

  if (ratio > opts.blend_threshold) {
    // 2D blend coordinates v -> (1-r) v + r v_iso, choosing the smallest r that
    // restores |.| = threshold, capped at blend_rmax.
    double vx, vy, wx, wy;
    if (u.kind.family == BasisKind::Family::Mixed1) {
      const NormalizedMixed1 phi = normalized_mixed(u);
      vx = phi.xp - phi.xm;
      vy = phi.yp - phi.ym;
      wx = wy = 0.5;
    } else if (u.kind.family == BasisKind::Family::Quarter1) {
      vx = u[1] / u[0];
      vy = u[2] / u[0];
      wx = 0.5 * quadrant_sign_x(u.kind.quadrant);
      wy = 0.5 * quadrant_sign_y(u.kind.quadrant);
    } else {
      vx = u[1] / u[0];
      vy = u[2] / u[0];
      wx = wy = 0.0;
    }
    const double dx = wx - vx, dy = wy - vy;
    const double a = dx * dx + dy * dy;
    const double b = 2.0 * (vx * dx + vy * dy);
    const double c = vx * vx + vy * vy - opts.blend_threshold * opts.blend_threshold;
    r = opts.blend_rmax;
    capped = true;
    if (a > 0.0) {
      const double disc = b * b - 4.0 * a * c;
      if (disc >= 0.0) {
        const double root = (-b - std::sqrt(disc)) / (2.0 * a);
        if (root >= 0.0 && root <= opts.blend_rmax) {
          r = root;
          capped = false;
        }
      }
    }
  }

  // The exponential ansatz also degenerates toward the sign faces of the
  // quarter and mixed moment cones (a component pinned at zero needs an
  // infinite multiplier). Blend just enough that every signed component
  // reaches face_threshold; the quadratic-boundary blend above and this one
  // reinforce each other, so taking the larger r satisfies both.
  if (opts.face_threshold > 0.0 && u.kind.family != BasisKind::Family::Full1) {
    for (int k = 1; k < u.kind.size(); ++k) {
      const double sign = iso[k] > 0.0 ? 1.0 : -1.0;
      const double margin = sign * u[k] / u[0];
      if (margin >= opts.face_threshold) continue;
      const double gap = sign * iso[k] - margin;  // > 0 whenever margin < |iso|
      double need = opts.blend_rmax;
      if (gap > 0.0) need = (opts.face_threshold - margin) / gap;
      if (need >= opts.blend_rmax) {
        need = opts.blend_rmax;
        capped = true;
      }
      r = std::max(r, need);
    }
  }

  if (r > 0.0)
    for (int k = 1; k < u.kind.size(); ++k) out[k] = (1.0 - r) * u[k] + r * u[0] * iso[k];
  if (r_out) *r_out = r;
  if (capped_out) *capped_out = capped;
  return out;
}

DualResult EntropyEvaluator::solve(const MomentVec& u, const DualOptions& opts, const double* warm,
                                   std::vector<double>* psi_out) const {
  if (!(u.kind == kind_)) throw std::invalid_argument("solve: basis kind mismatch");
  const double u00 = u[0];
  if (u00 <= 0.0) throw std::domain_error("solve: u00 must be positive");
  if (!is_realizable(u, 1e-13 * std::max(1.0, u00)))
    throw std::domain_error("solve: moments not realizable");

  DualResult result;
  MomentVec target = blend_toward_isotropic(u, opts, &result.blend_r, &result.blend_capped);
  double un[5] = {1.0, 0.0, 0.0, 0.0, 0.0};
  for (int k = 1; k < n_; ++k) un[k] = target[k] / u00;

  double alpha[5] = {iso_log_start(kind_), 0.0, 0.0, 0.0, 0.0};
  if (warm) {
    for (int k = 0; k < n_; ++k) alpha[k] = warm[k];
    alpha[0] -= std::log(u00);
    if (!fill_exponents(b_, n_, count_, alpha, expo_)) {
      alpha[0] = iso_log_start(kind_);
      for (int k = 1; k < n_; ++k) alpha[k] = 0.0;
    }
  }

  std::vector<double> psi(count_);
  std::vector<double> trial(count_);
  Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 5, 1> g(n_), d(n_);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 5, 5> h(n_, n_);

  bool have_psi = false;
  double fval = 0.0;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (!have_psi) {
      if (!fill_exponents(b_, n_, count_, alpha, expo_))
        throw DualFailure("solve: exponent overflow at accepted iterate", 0.0, it);
      psi = expo_;
      exp_inplace(psi, count_);
    }
    g.setZero();
    h.setZero();
    fval = 0.0;
    for (std::size_t i = 0; i < count_; ++i) {
      const double wp = w_[i] * psi[i];
      fval += wp;
      const double* bi = &b_[i * n_];
      for (int j = 0; j < n_; ++j) {
        g(j) += wp * bi[j];
        for (int k = j; k < n_; ++k) h(j, k) += wp * bi[j] * bi[k];
      }
    }
    double fscale = fval;  // f is Sum(w psi) minus the linear term; its
    for (int j = 0; j < n_; ++j) {
      fval -= un[j] * alpha[j];
      fscale += std::abs(un[j] * alpha[j]);  // roundoff scales with the sum
      g(j) -= un[j];                         // of magnitudes, not the net.
      for (int k = 0; k < j; ++k) h(j, k) = h(k, j);
    }

    const double res = g.norm();
    result.iterations = it;
    result.residual = res;
    if (res <= opts.tol) {
      for (int k = 0; k < n_; ++k) result.alpha[static_cast<std::size_t>(k)] = alpha[k];
      result.alpha[0] += std::log(u00);
      if (psi_out) {
        psi_out->resize(count_);
        for (std::size_t i = 0; i < count_; ++i) (*psi_out)[i] = u00 * psi[i];
      }
      return result;
    }

    Eigen::LDLT<decltype(h)> ldlt(h);
    d = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !d.allFinite()) {
      h.diagonal().array() += 1e-12 * h.trace() / n_ + 1e-300;
      ldlt.compute(h);
      d = ldlt.solve(-g);
      if (ldlt.info() != Eigen::Success || !d.allFinite())
        throw DualFailure("solve: Hessian solve failed", res, it);
    }
    const double gd = g.dot(d);
    // Once the predicted decrease -gd sinks below the roundoff in fval
    // itself, Armijo's sufficient-decrease comparison is pure noise and
    // halving the step only destroys quadratic convergence; accept
    // noise-level non-increase instead. The step-length guard matters: near
    // the realizability boundary the Hessian is close to singular, and its
    // near-null directions produce enormous steps whose tiny or negative
    // predicted decrease says nothing about f. Those must still pass the
    // strict test.
    const double fuzz = 16.0 * std::numeric_limits<double>::epsilon() * fscale;
    const bool noise_dominated = -gd <= 4.0 * fuzz && d.norm() <= 1.0;

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      double alpha_t[5];
      for (int k = 0; k < n_; ++k) alpha_t[k] = alpha[k] + s * d(k);
      if (fill_exponents(b_, n_, count_, alpha_t, expo_)) {
        trial = expo_;
        exp_inplace(trial, count_);
        double ft = 0.0;
        for (std::size_t i = 0; i < count_; ++i) ft += w_[i] * trial[i];
        for (int k = 0; k < n_; ++k) ft -= un[k] * alpha_t[k];
        if (std::isfinite(ft) && (noise_dominated ? ft <= fval + fuzz
                                                  : ft <= fval + opts.armijo_c * s * gd)) {
          for (int k = 0; k < n_; ++k) alpha[k] = alpha_t[k];
          psi.swap(trial);
          have_psi = true;
          accepted = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) throw DualFailure("solve: line search failed", res, it);
  }
  throw DualFailure("solve: no convergence within max_iter", result.residual, opts.max_iter);
}

std::array<double, 5> EntropyEvaluator::moments_of(const std::vector<double>& psi) const {
  std::array<double, 5> m{};
  for (std::size_t i = 0; i < count_; ++i) {
    const double wp = w_[i] * psi[i];
    const double* bi = &b_[i * n_];
    for (int k = 0; k < n_; ++k) m[static_cast<std::size_t>(k)] += wp * bi[k];
  }
  return m;
}

EntropyFlux EntropyEvaluator::flux_of(const std::vector<double>& psi) const {
  EntropyFlux f;
  for (std::size_t i = 0; i < count_; ++i) {
    const double p = psi[i];
    const double* bx = &wbx_[i * n_];
    const double* by = &wby_[i * n_];
    for (int k = 0; k < n_; ++k) {
      f.fx[static_cast<std::size_t>(k)] += p * bx[k];
      f.fy[static_cast<std::size_t>(k)] += p * by[k];
    }
  }
  return f;
}

void EntropyEvaluator::half_fluxes(const std::vector<double>& psi, std::array<double, 5>& fx_pos,
                                   std::array<double, 5>& fx_neg, std::array<double, 5>& fy_pos,
                                   std::array<double, 5>& fy_neg) const {
  fx_pos.fill(0.0);
  fx_neg.fill(0.0);
  fy_pos.fill(0.0);
  fy_neg.fill(0.0);
  for (Quadrant q : kQuadrants) {
    const auto [lo, hi] = quad_range_[static_cast<int>(q)];
    auto& fx = quadrant_sign_x(q) > 0 ? fx_pos : fx_neg;
    auto& fy = quadrant_sign_y(q) > 0 ? fy_pos : fy_neg;
    for (std::size_t i = lo; i < hi; ++i) {
      const double p = psi[i];
      const double* bx = &wbx_[i * n_];
      const double* by = &wby_[i * n_];
      for (int k = 0; k < n_; ++k) {
        fx[static_cast<std::size_t>(k)] += p * bx[k];
        fy[static_cast<std::size_t>(k)] += p * by[k];
      }
    }
  }
}

DualEval dual_objective(const std::array<double, 5>& alpha, const MomentVec& u,
                        const QuadratureRule& rule) {
  EntropyEvaluator ev(u.kind, rule);
  return ev.eval(alpha.data(), u.v.data());
}

DualResult solve_dual(const MomentVec& u, const QuadratureRule& rule, const DualOptions& opts,
                      const double* warm) {
  EntropyEvaluator ev(u.kind, rule);
  return ev.solve(u, opts, warm);
}

EntropyFlux closure_flux_entropy(const std::array<double, 5>& alpha, const BasisKind& kind,
                                 const QuadratureRule& rule) {
  EntropyEvaluator ev(kind, rule);
  std::vector<double> psi;
  ev.ansatz(alpha.data(), psi);
  return ev.flux_of(psi);
}

std::array<double, 5> linear_closure(const MomentVec& u) {
  const int n = u.kind.size();
  const Eigen::MatrixXd g = gram_matrix(u.kind);
  Eigen::VectorXd rhs(n);
  for (int k = 0; k < n; ++k) rhs(k) = u[k];
  const Eigen::VectorXd a = g.ldlt().solve(rhs);
  std::array<double, 5> alpha{};
  for (int k = 0; k < n; ++k) alpha[static_cast<std::size_t>(k)] = a(k);
  return alpha;
}

}  // namespace mixmom
