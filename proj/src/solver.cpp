#include "mixmom/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace mixmom {

namespace {

int env_thread_count() {
  const char* s = std::getenv("MIXMOM_THREADS");
  if (s == nullptr) return 1;
  const int n = std::atoi(s);
  return std::clamp(n, 1, 64);
}

int parts_for(ClosureModel m) { return m == ClosureModel::QK1AdvectionOnly ? 4 : 1; }

BasisKind basis_for(ClosureModel m, int part) {
  switch (m) {
    case ClosureModel::P1Linear:
    case ClosureModel::M1Entropy:
      return BasisKind::full1();
    case ClosureModel::MM1Entropy:
    case ClosureModel::MK1:
      return BasisKind::mixed1();
    case ClosureModel::QK1AdvectionOnly:
      return BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(part)]);
  }
  throw std::logic_error("unknown closure model");
}

std::array<double, 5> basis_mean(const BasisKind& kind) {
  return isotropic_moments(kind, 1.0).v;
}

// Spectral-radius scale of the scattering operator, used for the reaction part
// of the time-step bound. The bulk relaxation coefficient is 2; trace terms add
// their realized magnitude (relative to u00), never the hard divergence cap.
double scattering_scale(const SolverConfig& cfg) {
  const bool mixed = cfg.closure == ClosureModel::MM1Entropy || cfg.closure == ClosureModel::MK1;
  if (!mixed) return 2.0;
  if (cfg.lb == LbVariant::Polynomial)
    return lb_mixed_matrix().cwiseAbs().rowwise().sum().maxCoeff();
  const double trace =
      cfg.table != nullptr ? cfg.table->max_trace_sum() : cfg.lb_trace_scale;
  return 2.0 + std::min(cfg.lb_cap_scale, trace);
}

double wrap_angle(double a) {
  // remainder keeps the minimal signed distance, in (-pi, pi]
  return std::remainder(a, 2.0 * kPi);
}

}  // namespace

Eigen::Matrix3d p1_flux_matrix(Axis axis) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  if (axis == Axis::X) {
    a(0, 1) = 1.0;
    a(1, 0) = 1.0 / 3.0;
  } else {
    a(0, 2) = 1.0;
    a(2, 0) = 1.0 / 3.0;
  }
  return a;
}

Simulation::Simulation(const SolverConfig& cfg, const Domain& dom, int nx, int ny,
                       const std::array<SideBoundary, 4>& sides,
                       const std::function<MomentVec(double, double, int)>& initial)
    : cfg_(cfg), dom_(dom), nx_(nx), ny_(ny), parts_(parts_for(cfg.closure)), sides_(sides) {
  validate();
  dx_ = (dom_.xmax - dom_.xmin) / nx_;
  dy_ = (dom_.ymax - dom_.ymin) / ny_;
  threads_ = env_thread_count();

  for (int p = 0; p < parts_; ++p)
    bmean_[static_cast<std::size_t>(p)] = basis_mean(basis_for(cfg_.closure, p));

  const std::size_t total = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_) *
                            static_cast<std::size_t>(parts_);
  cells_.assign(total, MomentVec{});
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        MomentVec u = initial(cell_x(i), cell_y(j), p);
        if (!(u.kind == basis_for(cfg_.closure, p)))
          throw std::invalid_argument("initial condition basis does not match the closure");
        limit_in_place(u, cfg_.limiter_eps, cfg_.floor);
        cells_[idx(i, j, p)] = u;
      }

  stage_.assign(total, MomentVec{});
  rhs_.assign(total, {});
  warm_.assign(total, {});
  warm_ok_.assign(total, 0);
  cd_.assign(total, ClosureData{});
  fx_face_.assign(static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_) *
                      static_cast<std::size_t>(parts_),
                  {});
  fy_face_.assign(static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_ + 1) *
                      static_cast<std::size_t>(parts_),
                  {});

  init_quadrature();
  init_ghosts();
}

Simulation::~Simulation() = default;

BasisKind Simulation::part_kind(int part) const { return basis_for(cfg_.closure, part); }

const MomentVec& Simulation::cell(int i, int j, int part) const { return cells_[idx(i, j, part)]; }
MomentVec& Simulation::cell(int i, int j, int part) { return cells_[idx(i, j, part)]; }

MomentVec Simulation::aggregate(int i, int j) const {
  MomentVec out;
  out.kind = BasisKind::full1();
  switch (cfg_.closure) {
    case ClosureModel::P1Linear:
    case ClosureModel::M1Entropy:
      return cells_[idx(i, j, 0)];
    case ClosureModel::MM1Entropy:
    case ClosureModel::MK1: {
      const MomentVec& u = cells_[idx(i, j, 0)];
      out[0] = u[0];
      out[1] = u[1] + u[2];
      out[2] = u[3] + u[4];
      return out;
    }
    case ClosureModel::QK1AdvectionOnly: {
      for (int p = 0; p < parts_; ++p) {
        const MomentVec& u = cells_[idx(i, j, p)];
        out[0] += u[0];
        out[1] += u[1];
        out[2] += u[2];
      }
      return out;
    }
  }
  return out;
}

void Simulation::validate() const {
  if (nx_ < 1 || ny_ < 1) throw std::invalid_argument("grid must have at least one cell per axis");
  if (!(dom_.xmax > dom_.xmin) || !(dom_.ymax > dom_.ymin))
    throw std::invalid_argument("domain extents must be positive");
  if (!(cfg_.cfl > 0.0) || cfg_.cfl > 0.5)
    throw std::invalid_argument("cfl must lie in (0, 0.5]: the x and y bounds add in 2D");
  if (cfg_.floor <= 0.0) throw std::invalid_argument("density floor must be positive");
  if (cfg_.coeff.sigma_s < 0.0 || cfg_.coeff.sigma_a < 0.0 || cfg_.coeff.q < 0.0)
    throw std::invalid_argument("coefficients must be non-negative");
  if (cfg_.closure == ClosureModel::QK1AdvectionOnly && cfg_.coeff.sigma_s > 0.0)
    throw std::invalid_argument(
        "the quarter-moment advection model has no scattering operator; sigma_s must be 0");
  if (cfg_.linear_reconstruction && cfg_.closure != ClosureModel::P1Linear)
    throw std::invalid_argument("linear reconstruction is supported for the P1 closure only");
  if (cfg_.closure == ClosureModel::MK1 && cfg_.lb == LbVariant::Tabulated &&
      cfg_.coeff.sigma_s > 0.0 && cfg_.table == nullptr)
    throw std::invalid_argument("MK1 with the tabulated scattering operator needs a table");
  if (cfg_.quad_n_mu < 4 || cfg_.quad_n_phi < 4)
    throw std::invalid_argument("closure quadrature must have at least 4 nodes per axis");

  const bool px = sides_[0].kind == SideBoundary::Kind::Periodic;
  const bool py = sides_[2].kind == SideBoundary::Kind::Periodic;
  if (px != (sides_[1].kind == SideBoundary::Kind::Periodic) ||
      py != (sides_[3].kind == SideBoundary::Kind::Periodic))
    throw std::invalid_argument("periodic sides must come in opposite pairs");
  for (const SideBoundary& s : sides_)
    if (s.kind == SideBoundary::Kind::Periodic && !s.beams.empty())
      throw std::invalid_argument("periodic sides cannot carry beams");
}

void Simulation::init_quadrature() {
  const bool needs_rule = cfg_.closure == ClosureModel::P1Linear ||
                          cfg_.closure == ClosureModel::M1Entropy ||
                          cfg_.closure == ClosureModel::MM1Entropy;
  if (needs_rule) rule_ = quadrature(Region::full(), cfg_.quad_n_mu, cfg_.quad_n_phi);

  if (cfg_.closure == ClosureModel::M1Entropy)
    ev_ = std::make_unique<EntropyEvaluator>(BasisKind::full1(), rule_);
  if (cfg_.closure == ClosureModel::MM1Entropy)
    ev_ = std::make_unique<EntropyEvaluator>(BasisKind::mixed1(), rule_);

  if (cfg_.closure == ClosureModel::P1Linear) {
    // Half-range flux operators <omega_a b b^T>_{omega_a >< 0} G^{-1}: the
    // kinetic split of the linear ansatz.
    Eigen::Matrix3d m[4];
    for (auto& mm : m) mm.setZero();
    for (const QuadNode& n : rule_.nodes) {
      const double ox = n.dir.omega_x();
      const double oy = n.dir.omega_y();
      const double b[3] = {1.0, ox, oy};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
          const double wbb = n.weight * b[r] * b[c];
          if (ox > 0.0) m[0](r, c) += ox * wbb;
          if (ox < 0.0) m[1](r, c) += ox * wbb;
          if (oy > 0.0) m[2](r, c) += oy * wbb;
          if (oy < 0.0) m[3](r, c) += oy * wbb;
        }
    }
    const Eigen::Matrix3d gram = gram_matrix(BasisKind::full1());
    const Eigen::Matrix3d ginv = gram.ldlt().solve(Eigen::Matrix3d::Identity());
    for (int s = 0; s < 4; ++s) p1_half_[s] = m[s] * ginv;
  }

  bool any_beam = false;
  for (const SideBoundary& s : sides_) any_beam = any_beam || !s.beams.empty();
  if (any_beam) bc_rule_ = quadrature(Region::full(), cfg_.bc_quad_n, cfg_.bc_quad_n);
}

MomentVec Simulation::boundary_moments(Side side, double coord, int part) const {
  const BasisKind kind = basis_for(cfg_.closure, part);
  const SideBoundary& sb = sides_[static_cast<std::size_t>(side)];

  const SideBoundary::Beam* beam = nullptr;
  for (const SideBoundary::Beam& b : sb.beams)
    if (coord >= b.lo && coord <= b.hi) {
      beam = &b;
      break;
    }

  MomentVec u;
  u.kind = kind;
  if (beam == nullptr) {
    const std::array<double, 5> bm = basis_mean(kind);
    for (int c = 0; c < kind.size(); ++c) u[c] = sb.iso_psi * bm[static_cast<std::size_t>(c)];
    return u;
  }

  const double inv_two_w2 = 1.0 / (2.0 * beam->width2);
  for (const QuadNode& n : bc_rule_.nodes) {
    const double dphi = wrap_angle(n.dir.phi - beam->azimuth);
    const double psi =
        beam->amplitude * std::exp(-(n.dir.mu * n.dir.mu + dphi * dphi) * inv_two_w2);
    const std::array<double, 5> b = basis_eval(kind, n.dir);
    for (int c = 0; c < kind.size(); ++c) u[c] += n.weight * psi * b[static_cast<std::size_t>(c)];
  }
  return u;
}

void Simulation::init_ghosts() {
  for (int s = 0; s < 4; ++s) {
    const Side side = static_cast<Side>(s);
    if (sides_[static_cast<std::size_t>(s)].kind == SideBoundary::Kind::Periodic) continue;
    const int count = s < 2 ? ny_ : nx_;
    ghost_u_[static_cast<std::size_t>(s)].assign(
        static_cast<std::size_t>(count) * static_cast<std::size_t>(parts_), MomentVec{});
    ghost_cd_[static_cast<std::size_t>(s)].assign(
        static_cast<std::size_t>(count) * static_cast<std::size_t>(parts_), ClosureData{});
    for (int k = 0; k < count; ++k) {
      const double coord = s < 2 ? cell_y(k) : cell_x(k);
      for (int p = 0; p < parts_; ++p) {
        MomentVec u = boundary_moments(side, coord, p);
        limit_in_place(u, cfg_.limiter_eps, cfg_.floor);
        const std::size_t gi =
            static_cast<std::size_t>(k) * static_cast<std::size_t>(parts_) +
            static_cast<std::size_t>(p);
        ghost_u_[static_cast<std::size_t>(s)][gi] = u;
        eval_closure(u, nullptr, nullptr, ghost_cd_[static_cast<std::size_t>(s)][gi], p, -1, -1,
                     nullptr, nullptr);
      }
    }
  }
}

void Simulation::eval_closure(const MomentVec& u, std::array<double, 5>* warm, char* warm_ok,
                              ClosureData& out, int part, int ci, int cj, long* iters,
                              long* solves) const {
  auto cell_tag = [&]() {
    return " at cell (" + std::to_string(ci) + ", " + std::to_string(cj) + ")";
  };
  switch (cfg_.closure) {
    case ClosureModel::P1Linear: {
      const Eigen::Vector3d v(u[0], u[1], u[2]);
      for (int s = 0; s < 4; ++s) {
        const Eigen::Vector3d f = p1_half_[s] * v;
        std::array<double, 5>* dst[4] = {&out.fxp, &out.fxm, &out.fyp, &out.fym};
        for (int c = 0; c < 3; ++c) (*dst[s])[static_cast<std::size_t>(c)] = f(c);
      }
      return;
    }
    case ClosureModel::M1Entropy:
    case ClosureModel::MM1Entropy: {
      static thread_local std::vector<double> psi;
      const double* seed = (warm != nullptr && warm_ok != nullptr && *warm_ok) ? warm->data()
                                                                               : nullptr;
      DualResult r;
      try {
        try {
          r = ev_->solve(u, cfg_.dual, seed, &psi);
        } catch (const DualFailure&) {
          if (seed == nullptr) throw;
          r = ev_->solve(u, cfg_.dual, nullptr, &psi);  // cold restart
        }
      } catch (const DualFailure& e) {
        throw std::runtime_error("dual closure solve failed" + cell_tag() + ": " + e.what());
      } catch (const std::domain_error& e) {
        throw std::runtime_error("closure input not realizable" + cell_tag() + ": " + e.what());
      }
      if (warm != nullptr && warm_ok != nullptr) {
        *warm = r.alpha;
        *warm_ok = 1;
      }
      if (iters != nullptr) *iters += r.iterations;
      if (solves != nullptr) *solves += 1;
      ev_->half_fluxes(psi, out.fxp, out.fxm, out.fyp, out.fym);
      return;
    }
    case ClosureModel::MK1: {
      static thread_local AtomicDistribution atoms;
      try {
        mk1_closure(u, QuarterEngine::KershawAtoms, nullptr, &atoms);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("mixed Kershaw closure failed") + cell_tag() + ": " +
                                 e.what());
      }
      out.fxp = flux_from_atoms(atoms, u.kind, Axis::X, SignFilter::PositiveOnly);
      out.fxm = flux_from_atoms(atoms, u.kind, Axis::X, SignFilter::NegativeOnly);
      out.fyp = flux_from_atoms(atoms, u.kind, Axis::Y, SignFilter::PositiveOnly);
      out.fym = flux_from_atoms(atoms, u.kind, Axis::Y, SignFilter::NegativeOnly);
      return;
    }
    case ClosureModel::QK1AdvectionOnly: {
      const Quadrant q = kQuadrants[static_cast<std::size_t>(part)];
      const double u00 = u[0];
      std::array<double, 2> phi = {0.0, 0.0};
      if (u00 > 0.0) phi = {u[1] / u00, u[2] / u00};
      KershawAtoms ka;
      try {
        ka = qk1_atoms(phi, q);
      } catch (const std::exception& e) {
        throw std::runtime_error(std::string("quarter Kershaw closure failed") + cell_tag() +
                                 ": " + e.what());
      }
      for (Atom& a : ka.atoms) a.weight *= u00;
      out.fxp = flux_from_atoms(ka.atoms, u.kind, Axis::X, SignFilter::PositiveOnly);
      out.fxm = flux_from_atoms(ka.atoms, u.kind, Axis::X, SignFilter::NegativeOnly);
      out.fyp = flux_from_atoms(ka.atoms, u.kind, Axis::Y, SignFilter::PositiveOnly);
      out.fym = flux_from_atoms(ka.atoms, u.kind, Axis::Y, SignFilter::NegativeOnly);
      return;
    }
  }
}

Simulation::StageOut Simulation::compute_rhs(const std::vector<MomentVec>& state,
                                             std::vector<std::array<double, 5>>& rhs) {
  const int ncomp = basis_for(cfg_.closure, 0).size();
  const bool periodic_x = sides_[0].kind == SideBoundary::Kind::Periodic;
  const bool periodic_y = sides_[2].kind == SideBoundary::Kind::Periodic;
  const double siga = cfg_.coeff.sigma_a;
  const double sigs = cfg_.coeff.sigma_s;
  const double qemit = cfg_.coeff.q;
  const double cell_area = dx_ * dy_;

  // Pass A: per-cell closure data (the expensive pass; threadable, all writes
  // cell-local).
  std::vector<long> row_iters(static_cast<std::size_t>(ny_), 0);
  std::vector<long> row_solves(static_cast<std::size_t>(ny_), 0);
  for_rows(ny_, [&](int j) {
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        const std::size_t c = idx(i, j, p);
        eval_closure(state[c], &warm_[c], &warm_ok_[c], cd_[c], p, i, j,
                     &row_iters[static_cast<std::size_t>(j)],
                     &row_solves[static_cast<std::size_t>(j)]);
      }
  });
  for (int j = 0; j < ny_; ++j) {
    stats_.dual_iterations += row_iters[static_cast<std::size_t>(j)];
    stats_.dual_solves += row_solves[static_cast<std::size_t>(j)];
  }

  // Reconstruction (P1 only): central slopes, kinetic or LF flux on face states.
  const bool recon = cfg_.linear_reconstruction;

  auto wrap = [](int k, int n) { return ((k % n) + n) % n; };
  auto state_at_x = [&](int i, int j, int p) -> const MomentVec& {
    if (i >= 0 && i < nx_) return state[idx(i, j, p)];
    if (periodic_x) return state[idx(wrap(i, nx_), j, p)];
    // Dirichlet ghosts extend flat beyond the single stored layer.
    return ghost_u_[i < 0 ? 0 : 1][static_cast<std::size_t>(j * parts_ + p)];
  };
  auto state_at_y = [&](int i, int j, int p) -> const MomentVec& {
    if (j >= 0 && j < ny_) return state[idx(i, j, p)];
    if (periodic_y) return state[idx(i, wrap(j, ny_), p)];
    return ghost_u_[j < 0 ? 2 : 3][static_cast<std::size_t>(i * parts_ + p)];
  };
  auto cd_at_x = [&](int i, int j, int p) -> const ClosureData& {
    if (i >= 0 && i < nx_) return cd_[idx(i, j, p)];
    if (periodic_x) return cd_[idx(wrap(i, nx_), j, p)];
    return ghost_cd_[i < 0 ? 0 : 1][static_cast<std::size_t>(j * parts_ + p)];
  };
  auto cd_at_y = [&](int i, int j, int p) -> const ClosureData& {
    if (j >= 0 && j < ny_) return cd_[idx(i, j, p)];
    if (periodic_y) return cd_[idx(i, wrap(j, ny_), p)];
    return ghost_cd_[j < 0 ? 2 : 3][static_cast<std::size_t>(i * parts_ + p)];
  };

  // Pass B: interface fluxes. Kinetic: upwind assembly of half-range fluxes.
  // Lax-Friedrichs: central flux plus unit-speed dissipation.
  for_rows(ny_, [&](int j) {
    for (int i = 0; i <= nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        std::array<double, 5>& f =
            fx_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        f = {};
        if (recon) {
          MomentVec ul = state_at_x(i - 1, j, p);
          MomentVec ur = state_at_x(i, j, p);
          for (int c = 0; c < ncomp; ++c) {
            const double sl =
                0.5 * (state_at_x(i, j, p)[c] - state_at_x(i - 2, j, p)[c]);
            const double sr =
                0.5 * (state_at_x(i + 1, j, p)[c] - state_at_x(i - 1, j, p)[c]);
            ul[c] += 0.5 * sl;
            ur[c] -= 0.5 * sr;
          }
          const Eigen::Vector3d vl(ul[0], ul[1], ul[2]), vr(ur[0], ur[1], ur[2]);
          if (cfg_.flux == FluxScheme::Kinetic) {
            const Eigen::Vector3d fv = p1_half_[0] * vl + p1_half_[1] * vr;
            for (int c = 0; c < 3; ++c) f[static_cast<std::size_t>(c)] = fv(c);
          } else {
            const Eigen::Matrix3d ax = p1_flux_matrix(Axis::X);
            const Eigen::Vector3d fv = 0.5 * (ax * vl + ax * vr) - 0.5 * (vr - vl);
            for (int c = 0; c < 3; ++c) f[static_cast<std::size_t>(c)] = fv(c);
          }
          continue;
        }
        const ClosureData& l = cd_at_x(i - 1, j, p);
        const ClosureData& r = cd_at_x(i, j, p);
        if (cfg_.flux == FluxScheme::Kinetic) {
          for (int c = 0; c < ncomp; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            f[cc] = l.fxp[cc] + r.fxm[cc];
          }
        } else {
          const MomentVec& ul = state_at_x(i - 1, j, p);
          const MomentVec& ur = state_at_x(i, j, p);
          for (int c = 0; c < ncomp; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            f[cc] = 0.5 * (l.fxp[cc] + l.fxm[cc] + r.fxp[cc] + r.fxm[cc]) -
                    0.5 * (ur[c] - ul[c]);
          }
        }
      }
  });

  for_rows(ny_ + 1, [&](int k) {
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        std::array<double, 5>& f =
            fy_face_[(static_cast<std::size_t>(k) * static_cast<std::size_t>(nx_) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        f = {};
        if (recon) {
          MomentVec ul = state_at_y(i, k - 1, p);
          MomentVec ur = state_at_y(i, k, p);
          for (int c = 0; c < ncomp; ++c) {
            const double sl =
                0.5 * (state_at_y(i, k, p)[c] - state_at_y(i, k - 2, p)[c]);
            const double sr =
                0.5 * (state_at_y(i, k + 1, p)[c] - state_at_y(i, k - 1, p)[c]);
            ul[c] += 0.5 * sl;
            ur[c] -= 0.5 * sr;
          }
          const Eigen::Vector3d vl(ul[0], ul[1], ul[2]), vr(ur[0], ur[1], ur[2]);
          if (cfg_.flux == FluxScheme::Kinetic) {
            const Eigen::Vector3d fv = p1_half_[2] * vl + p1_half_[3] * vr;
            for (int c = 0; c < 3; ++c) f[static_cast<std::size_t>(c)] = fv(c);
          } else {
            const Eigen::Matrix3d ay = p1_flux_matrix(Axis::Y);
            const Eigen::Vector3d fv = 0.5 * (ay * vl + ay * vr) - 0.5 * (vr - vl);
            for (int c = 0; c < 3; ++c) f[static_cast<std::size_t>(c)] = fv(c);
          }
          continue;
        }
        const ClosureData& l = cd_at_y(i, k - 1, p);
        const ClosureData& r = cd_at_y(i, k, p);
        if (cfg_.flux == FluxScheme::Kinetic) {
          for (int c = 0; c < ncomp; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            f[cc] = l.fyp[cc] + r.fym[cc];
          }
        } else {
          const MomentVec& ul = state_at_y(i, k - 1, p);
          const MomentVec& ur = state_at_y(i, k, p);
          for (int c = 0; c < ncomp; ++c) {
            const auto cc = static_cast<std::size_t>(c);
            f[cc] = 0.5 * (l.fyp[cc] + l.fym[cc] + r.fyp[cc] + r.fym[cc]) -
                    0.5 * (ur[c] - ul[c]);
          }
        }
      }
  });

  // Pass C: divergence plus local terms.
  std::vector<double> row_source(static_cast<std::size_t>(ny_), 0.0);
  std::vector<long> row_caps(static_cast<std::size_t>(ny_), 0);
  for_rows(ny_, [&](int j) {
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        const std::size_t c = idx(i, j, p);
        const MomentVec& u = state[c];
        std::array<double, 5>& r = rhs[c];
        const std::array<double, 5>& fxl =
            fx_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        const std::array<double, 5>& fxr =
            fx_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
                      static_cast<std::size_t>(i + 1)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        const std::array<double, 5>& fyb =
            fy_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        const std::array<double, 5>& fyt =
            fy_face_[(static_cast<std::size_t>(j + 1) * static_cast<std::size_t>(nx_) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        for (int cc = 0; cc < ncomp; ++cc) {
          const auto k = static_cast<std::size_t>(cc);
          r[k] = -(fxr[k] - fxl[k]) / dx_ - (fyt[k] - fyb[k]) / dy_;
        }
        for (int cc = ncomp; cc < 5; ++cc) r[static_cast<std::size_t>(cc)] = 0.0;

        if (siga > 0.0)
          for (int cc = 0; cc < ncomp; ++cc) r[static_cast<std::size_t>(cc)] -= siga * u[cc];
        if (qemit > 0.0) {
          const std::array<double, 5>& bm = bmean_[static_cast<std::size_t>(p)];
          for (int cc = 0; cc < ncomp; ++cc)
            r[static_cast<std::size_t>(cc)] += qemit * bm[static_cast<std::size_t>(cc)];
        }
        if (siga > 0.0 || qemit > 0.0)
          row_source[static_cast<std::size_t>(j)] +=
              (qemit * bmean_[static_cast<std::size_t>(p)][0] - siga * u[0]) * cell_area;

        if (sigs > 0.0) {
          std::array<double, 5> lb{};
          switch (cfg_.closure) {
            case ClosureModel::P1Linear:
            case ClosureModel::M1Entropy:
              lb = {0.0, -2.0 * u[1], -2.0 * u[2], 0.0, 0.0};
              break;
            case ClosureModel::MM1Entropy:
              if (cfg_.lb == LbVariant::Polynomial) {
                lb = lb_mixed_polynomial(u);
              } else {
                const LbTabulatedResult t =
                    lb_mixed_entropy_traces(u, warm_[c], cfg_.lb_cap_scale);
                lb = t.rhs;
                if (t.capped) ++row_caps[static_cast<std::size_t>(j)];
              }
              break;
            case ClosureModel::MK1:
              if (cfg_.lb == LbVariant::Polynomial) {
                lb = lb_mixed_polynomial(u);
              } else {
                const GammaPair g = gamma_interpolation(normalized_mixed(u));
                const LbTabulatedResult t =
                    lb_mixed_tabulated(u, *cfg_.table, g, cfg_.lb_cap_scale);
                lb = t.rhs;
                if (t.capped) ++row_caps[static_cast<std::size_t>(j)];
              }
              break;
            case ClosureModel::QK1AdvectionOnly:
              break;  // validated out
          }
          for (int cc = 0; cc < ncomp; ++cc)
            r[static_cast<std::size_t>(cc)] += 0.5 * sigs * lb[static_cast<std::size_t>(cc)];
        }
      }
  });

  StageOut out;
  for (int j = 0; j < ny_; ++j) {
    out.source_mass += row_source[static_cast<std::size_t>(j)];
    out.cap_events += row_caps[static_cast<std::size_t>(j)];
  }

  // Net mass inflow through non-periodic boundaries, fixed accumulation order.
  if (!periodic_x) {
    for (int j = 0; j < ny_; ++j)
      for (int p = 0; p < parts_; ++p) {
        const std::array<double, 5>& fl =
            fx_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        const std::array<double, 5>& fr =
            fx_face_[(static_cast<std::size_t>(j) * static_cast<std::size_t>(nx_ + 1) +
                      static_cast<std::size_t>(nx_)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        out.boundary_inflow += (fl[0] - fr[0]) * dy_;
      }
  }
  if (!periodic_y) {
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) {
        const std::array<double, 5>& fb =
            fy_face_[static_cast<std::size_t>(i) * static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        const std::array<double, 5>& ft =
            fy_face_[(static_cast<std::size_t>(ny_) * static_cast<std::size_t>(nx_) +
                      static_cast<std::size_t>(i)) *
                         static_cast<std::size_t>(parts_) +
                     static_cast<std::size_t>(p)];
        out.boundary_inflow += (fb[0] - ft[0]) * dx_;
      }
  }
  return out;
}

double Simulation::total_mass(const std::vector<MomentVec>& state) const {
  double mass = 0.0;
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i)
      for (int p = 0; p < parts_; ++p) mass += state[idx(i, j, p)][0];
  return mass * dx_ * dy_;
}

double Simulation::cfl_dt() const {
  double dt = cfg_.cfl * std::min(dx_, dy_);  // max transport speed is 1
  const double react =
      cfg_.coeff.sigma_a + 0.5 * cfg_.coeff.sigma_s * scattering_scale(cfg_);
  if (react > 0.0) dt = std::min(dt, 4.0 * cfg_.cfl / react);
  return dt;
}

StepStats Simulation::step(double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const int ncomp = basis_for(cfg_.closure, 0).size();
  const double cell_area = dx_ * dy_;

  StepStats st;
  st.dt = dt;
  st.mass_before = total_mass(cells_);

  const StageOut s1 = compute_rhs(cells_, rhs_);
  double lim_mass1 = 0.0;
  long hits = 0;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    MomentVec& v = stage_[c];
    v.kind = cells_[c].kind;
    for (int cc = 0; cc < ncomp; ++cc) {
      const auto k = static_cast<std::size_t>(cc);
      v.v[k] = cells_[c].v[k] + dt * rhs_[c][k];
    }
    for (int cc = ncomp; cc < 5; ++cc) v.v[static_cast<std::size_t>(cc)] = 0.0;
    const double before = v[0];
    if (limit_in_place(v, cfg_.limiter_eps, cfg_.floor)) ++hits;
    lim_mass1 += (v[0] - before) * cell_area;
  }

  const StageOut s2 = compute_rhs(stage_, rhs_);
  double lim_mass2 = 0.0;
  double min_u00 = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    MomentVec v = stage_[c];
    for (int cc = 0; cc < ncomp; ++cc) {
      const auto k = static_cast<std::size_t>(cc);
      v.v[k] = stage_[c].v[k] + dt * rhs_[c][k];
    }
    const double before = v[0];
    if (limit_in_place(v, cfg_.limiter_eps, cfg_.floor)) ++hits;
    lim_mass2 += (v[0] - before) * cell_area;
    MomentVec& dst = cells_[c];
    for (int cc = 0; cc < ncomp; ++cc) {
      const auto k = static_cast<std::size_t>(cc);
      dst.v[k] = 0.5 * (dst.v[k] + v.v[k]);
    }
    min_u00 = std::min(min_u00, dst[0]);
  }

  time_ += dt;
  st.mass_after = total_mass(cells_);
  st.boundary_inflow = 0.5 * dt * (s1.boundary_inflow + s2.boundary_inflow);
  st.source_mass = 0.5 * dt * (s1.source_mass + s2.source_mass);
  st.limiter_mass = 0.5 * (lim_mass1 + lim_mass2);
  st.conservation_residual =
      st.mass_after - st.mass_before - st.boundary_inflow - st.source_mass - st.limiter_mass;
  st.limiter_hits = hits;
  st.cap_events = s1.cap_events + s2.cap_events;

  ++stats_.steps;
  stats_.limiter_hits += hits;
  stats_.cap_events += st.cap_events;
  stats_.max_conservation_residual =
      std::max(stats_.max_conservation_residual, std::abs(st.conservation_residual));
  stats_.min_u00_seen = std::min(stats_.min_u00_seen, min_u00);
  return st;
}

void Simulation::advance_to(double t_final) {
  const double eps = 1e-12 * std::max(1.0, std::abs(t_final));
  while (time_ < t_final - eps) {
    const double dt = std::min(cfl_dt(), t_final - time_);
    step(dt);
  }
}

double Simulation::sample_density(double x, double y) const {
  return sample_moments(x, y)[0];
}

MomentVec Simulation::sample_moments(double x, double y) const {
  const double gx = std::clamp((x - dom_.xmin) / dx_ - 0.5, 0.0, static_cast<double>(nx_ - 1));
  const double gy = std::clamp((y - dom_.ymin) / dy_ - 0.5, 0.0, static_cast<double>(ny_ - 1));
  const int i0 = std::min(static_cast<int>(gx), nx_ - 2 < 0 ? 0 : nx_ - 2);
  const int j0 = std::min(static_cast<int>(gy), ny_ - 2 < 0 ? 0 : ny_ - 2);
  const double tx = std::clamp(gx - i0, 0.0, 1.0);
  const double ty = std::clamp(gy - j0, 0.0, 1.0);
  const int i1 = std::min(i0 + 1, nx_ - 1);
  const int j1 = std::min(j0 + 1, ny_ - 1);

  const MomentVec a = aggregate(i0, j0);
  const MomentVec b = aggregate(i1, j0);
  const MomentVec c = aggregate(i0, j1);
  const MomentVec d = aggregate(i1, j1);
  MomentVec out;
  out.kind = a.kind;
  for (int k = 0; k < a.size(); ++k)
    out[k] = (1.0 - ty) * ((1.0 - tx) * a[k] + tx * b[k]) +
             ty * ((1.0 - tx) * c[k] + tx * d[k]);
  return out;
}

Diagnostics Simulation::diagnostics() const {
  Diagnostics d;
  d.time = time_;
  d.run = stats_;

  double min_u = std::numeric_limits<double>::infinity();
  double max_u = -std::numeric_limits<double>::infinity();
  long violations = 0;
  double mass = 0.0;
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nx_; ++i) {
      const double u00 = aggregate(i, j)[0];
      mass += u00;
      min_u = std::min(min_u, u00);
      max_u = std::max(max_u, u00);
      for (int p = 0; p < parts_; ++p) {
        const MomentVec& u = cells_[idx(i, j, p)];
        if (!is_realizable(u, 1e-10 * std::max(1.0, u[0]))) ++violations;
      }
    }
  d.mass = mass * dx_ * dy_;
  d.min_u00 = min_u;
  d.max_u00 = max_u;
  d.realizability_violations = violations;

  // Rotational symmetry of the density about the domain center: compare each
  // interior sample against its 16 rotated bilinear resamples, normalized by
  // the field maximum.
  const double cx = 0.5 * (dom_.xmin + dom_.xmax);
  const double cy = 0.5 * (dom_.ymin + dom_.ymax);
  const double rmax = std::min(std::min(dom_.xmax - cx, cx - dom_.xmin),
                               std::min(dom_.ymax - cy, cy - dom_.ymin)) -
                      std::max(dx_, dy_);
  double err = 0.0;
  double norm = 0.0;
  if (rmax > 0.0) {
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        const double px = cell_x(i) - cx;
        const double py = cell_y(j) - cy;
        if (px * px + py * py > rmax * rmax) continue;
        const double u0 = aggregate(i, j)[0];
        norm = std::max(norm, std::abs(u0));
        for (int k = 1; k < 16; ++k) {
          const double th = 2.0 * kPi * k / 16.0;
          const double qx = cx + std::cos(th) * px - std::sin(th) * py;
          const double qy = cy + std::sin(th) * px + std::cos(th) * py;
          err = std::max(err, std::abs(sample_density(qx, qy) - u0));
        }
      }
  }
  d.symmetry_error = norm > 0.0 ? err / norm : 0.0;
  return d;
}

std::vector<CutSample> Simulation::cut_horizontal() const {
  const double cx = 0.5 * (dom_.xmin + dom_.xmax);
  const double cy = 0.5 * (dom_.ymin + dom_.ymax);
  std::vector<CutSample> out;
  out.reserve(static_cast<std::size_t>(nx_));
  for (int i = 0; i < nx_; ++i) {
    CutSample s;
    s.x = cell_x(i);
    s.y = cy;
    s.s = s.x - cx;
    s.u = sample_moments(s.x, s.y);
    out.push_back(s);
  }
  return out;
}

std::vector<CutSample> Simulation::cut_diagonal() const {
  const double cx = 0.5 * (dom_.xmin + dom_.xmax);
  const double cy = 0.5 * (dom_.ymin + dom_.ymax);
  const double e = 1.0 / std::sqrt(2.0);
  const double ds = std::hypot(dx_, dy_);
  // Keep samples inside the bilinear hull of cell centers.
  const double sx_hi = (dom_.xmax - 0.5 * dx_ - cx) / e;
  const double sy_hi = (dom_.ymax - 0.5 * dy_ - cy) / e;
  const double sx_lo = (cx - dom_.xmin - 0.5 * dx_) / e;
  const double sy_lo = (cy - dom_.ymin - 0.5 * dy_) / e;
  const double s_hi = std::min(sx_hi, sy_hi);
  const double s_lo = -std::min(sx_lo, sy_lo);

  std::vector<CutSample> out;
  for (long k = static_cast<long>(std::floor(s_lo / ds)); k <= static_cast<long>(std::ceil(s_hi / ds)); ++k) {
    const double s = static_cast<double>(k) * ds;
    if (s < s_lo || s > s_hi) continue;
    CutSample c;
    c.s = s;
    c.x = cx + s * e;
    c.y = cy + s * e;
    c.u = sample_moments(c.x, c.y);
    out.push_back(c);
  }
  return out;
}

void Simulation::for_rows(int count, const std::function<void(int)>& body) const {
  const int t = std::min(threads_, count);
  if (t <= 1) {
    for (int j = 0; j < count; ++j) body(j);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error;
  std::mutex err_mutex;
  pool.reserve(static_cast<std::size_t>(t));
  for (int b = 0; b < t; ++b) {
    const int lo = count * b / t;
    const int hi = count * (b + 1) / t;
    pool.emplace_back([&, lo, hi]() {
      try {
        for (int j = lo; j < hi; ++j) body(j);
      } catch (...) {
        std::lock_guard<std::mutex> g(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mixmom
