#include "mixmom/qm1_table.hpp"

#include "mixmom/collision.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace mixmom {

namespace {

void second_moments(const QuadratureRule& rule, const std::vector<double>& psi, double& u20,
                    double& u11, double& u02) {
  u20 = u11 = u02 = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const QuadNode& n = rule.nodes[i];
    const double wp = n.weight * psi[i];
    const double ox = n.dir.omega_x();
    const double oy = n.dir.omega_y();
    u20 += wp * ox * ox;
    u11 += wp * ox * oy;
    u02 += wp * oy * oy;
  }
}

}  // namespace

QM1Table QM1Table::tabulate(int resolution, const QuadratureRule& quad, const DualOptions& opts) {
  if (resolution < 16) throw std::invalid_argument("qm1_tabulate: resolution must be >= 16");
  if (quad.region.kind != Region::Kind::Quadrant || quad.region.quadrant != Quadrant::PP)
    throw std::invalid_argument("qm1_tabulate: quadrature must cover the PP quadrant");

  QM1Table t;
  t.res_ = resolution;
  t.n_mu_ = quad.n_mu;
  t.n_phi_ = quad.n_phi;
  t.tol_ = opts.tol;
  const int m = resolution - 1;
  t.nodes_.assign(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), QM1Node{});

  const EntropyEvaluator ev(BasisKind::quarter1(Quadrant::PP), quad);
  std::vector<double> psi;
  const double h = 1.0 / resolution;

  std::array<double, 3> row_warm{};
  bool have_row_warm = false;
  for (int j = 1; j <= m; ++j) {
    std::array<double, 3> warm = row_warm;
    bool have_warm = have_row_warm;
    for (int i = 1; i <= m; ++i) {
      QM1Node& node = t.nodes_[t.index(i, j)];
      const double px = i * h;
      const double py = j * h;
      if (std::hypot(px, py) >= 1.0 - 1e-9) continue;  // outside the realizable disk

      MomentVec u;
      u.kind = BasisKind::quarter1(Quadrant::PP);
      u.v = {1.0, px, py, 0.0, 0.0};
      DualResult res;
      try {
        res = ev.solve(u, opts, have_warm ? warm.data() : nullptr, &psi);
      } catch (const DualFailure&) {
        try {
          res = ev.solve(u, opts, nullptr, &psi);  // cold-start retry
        } catch (const DualFailure&) {
          continue;  // left invalid; filled from a neighbor below
        }
      }

      node.valid = true;
      node.blend_r = res.blend_r;
      node.phi_eff = {(1.0 - res.blend_r) * px + res.blend_r * 0.5,
                      (1.0 - res.blend_r) * py + res.blend_r * 0.5};
      node.alpha = {res.alpha[0], res.alpha[1], res.alpha[2]};
      second_moments(quad, psi, node.u20, node.u11, node.u02);
      node.trace_x = edge_trace_integral(node.alpha[0], node.alpha[1]);
      node.trace_y = edge_trace_integral(node.alpha[0], node.alpha[2]);
      t.max_trace_sum_ = std::max(t.max_trace_sum_, node.trace_x + node.trace_y);

      warm = node.alpha;
      have_warm = true;
      if (i == 1) {
        row_warm = node.alpha;
        have_row_warm = true;
      }
    }
  }

  // Fill invalid nodes from the nearest valid one (Euclidean in grid indices);
  // lookups past the realizability boundary then clamp to the interior ring.
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      QM1Node& node = t.nodes_[t.index(i, j)];
      if (node.valid) continue;
      long best = std::numeric_limits<long>::max();
      const QM1Node* src = nullptr;
      for (int jj = 1; jj <= m; ++jj) {
        for (int ii = 1; ii <= m; ++ii) {
          const QM1Node& cand = t.nodes_[t.index(ii, jj)];
          if (!cand.valid) continue;
          const long d = static_cast<long>(ii - i) * (ii - i) + static_cast<long>(jj - j) * (jj - j);
          if (d < best) {
            best = d;
            src = &cand;
          }
        }
      }
      if (!src) throw std::runtime_error("qm1_tabulate: no valid node on the grid");
      node = *src;
      node.valid = false;  // keeps the original status visible after the fill
    }
  }
  return t;
}

std::size_t QM1Table::invalid_count() const {
  std::size_t n = 0;
  for (const QM1Node& node : nodes_)
    if (!node.valid) ++n;
  return n;
}

const QM1Node& QM1Table::node(int i, int j) const {
  if (i < 1 || i > res_ - 1 || j < 1 || j > res_ - 1)
    throw std::out_of_range("QM1Table::node: index outside 1..res-1");
  return nodes_[index(i, j)];
}

void QM1Table::save(std::ostream& os) const {
  os.precision(17);
  os << "qm1table 1\n";
  os << "resolution " << res_ << "\n";
  os << "quadrature " << n_mu_ << " " << n_phi_ << "\n";
  os << "tolerance " << tol_ << "\n";
  os << "max_trace_sum " << max_trace_sum_ << "\n";
  os << "nodes " << nodes_.size() << "\n";
  const int m = res_ - 1;
  for (int j = 1; j <= m; ++j) {
    for (int i = 1; i <= m; ++i) {
      const QM1Node& n = nodes_[index(i, j)];
      os << i << " " << j << " " << (n.valid ? 1 : 0) << " " << n.phi_eff[0] << " " << n.phi_eff[1]
         << " " << n.u20 << " " << n.u11 << " " << n.u02 << " " << n.trace_x << " " << n.trace_y
         << " " << n.alpha[0] << " " << n.alpha[1] << " " << n.alpha[2] << " " << n.blend_r
         << "\n";
    }
  }
}

QM1Table QM1Table::load(std::istream& is) {
  auto expect = [&is](const char* token) {
    std::string word;
    if (!(is >> word) || word != token)
      throw std::runtime_error(std::string("QM1Table::load: expected '") + token + "'");
  };
  expect("qm1table");
  int version = 0;
  if (!(is >> version) || version != 1)
    throw std::runtime_error("QM1Table::load: unsupported version");

  QM1Table t;
  std::size_t count = 0;
  expect("resolution");
  is >> t.res_;
  expect("quadrature");
  is >> t.n_mu_ >> t.n_phi_;
  expect("tolerance");
  is >> t.tol_;
  expect("max_trace_sum");
  is >> t.max_trace_sum_;
  expect("nodes");
  is >> count;
  if (!is || t.res_ < 16 ||
      count != static_cast<std::size_t>(t.res_ - 1) * static_cast<std::size_t>(t.res_ - 1))
    throw std::runtime_error("QM1Table::load: malformed header");

  t.nodes_.assign(count, QM1Node{});
  for (std::size_t k = 0; k < count; ++k) {
    int i = 0, j = 0, valid = 0;
    QM1Node n;
    is >> i >> j >> valid >> n.phi_eff[0] >> n.phi_eff[1] >> n.u20 >> n.u11 >> n.u02 >>
        n.trace_x >> n.trace_y >> n.alpha[0] >> n.alpha[1] >> n.alpha[2] >> n.blend_r;
    if (!is || i < 1 || i > t.res_ - 1 || j < 1 || j > t.res_ - 1)
      throw std::runtime_error("QM1Table::load: malformed node record");
    n.valid = valid != 0;
    t.nodes_[t.index(i, j)] = n;
  }
  return t;
}

void QM1Table::save_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("QM1Table::save_file: cannot open " + path);
  save(os);
  if (!os) throw std::runtime_error("QM1Table::save_file: write failed for " + path);
}

QM1Table QM1Table::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("QM1Table::load_file: cannot open " + path);
  return load(is);
}

QM1Lookup qm1_lookup(const QM1Table& table, const std::array<double, 2>& phi, Quadrant q) {
  const double sx = quadrant_sign_x(q);
  const double sy = quadrant_sign_y(q);
  const double tol = 1e-12;
  if (phi[0] * sx < -tol || phi[1] * sy < -tol)
    throw std::domain_error("qm1_lookup: phi outside quadrant");
  const double ax = std::abs(phi[0]);
  const double ay = std::abs(phi[1]);
  const double norm = std::hypot(ax, ay);
  if (norm > 1.0 + 1e-9) throw std::domain_error("qm1_lookup: |phi| exceeds 1");

  const int res = table.resolution();
  const int m = res - 1;
  // Grid coordinates: node i sits at i/res. Clamp into the node hull.
  auto locate = [&](double v, int& i0, double& frac) {
    double c = std::clamp(v * res, 1.0, static_cast<double>(m));
    i0 = std::min(static_cast<int>(c), m - 1);
    i0 = std::max(i0, 1);
    frac = c - i0;
  };
  int i0 = 0, j0 = 0;
  double fx = 0.0, fy = 0.0;
  locate(ax, i0, fx);
  locate(ay, j0, fy);

  const QM1Node& n00 = table.node(i0, j0);
  const QM1Node& n10 = table.node(i0 + 1, j0);
  const QM1Node& n01 = table.node(i0, j0 + 1);
  const QM1Node& n11 = table.node(i0 + 1, j0 + 1);
  auto lerp2 = [&](auto get) {
    return (1.0 - fy) * ((1.0 - fx) * get(n00) + fx * get(n10)) +
           fy * ((1.0 - fx) * get(n01) + fx * get(n11));
  };

  QM1Lookup out;
  out.phi_eff = {sx * lerp2([](const QM1Node& n) { return n.phi_eff[0]; }),
                 sy * lerp2([](const QM1Node& n) { return n.phi_eff[1]; })};
  out.u20 = lerp2([](const QM1Node& n) { return n.u20; });
  out.u11 = sx * sy * lerp2([](const QM1Node& n) { return n.u11; });
  out.u02 = lerp2([](const QM1Node& n) { return n.u02; });
  out.trace_x = lerp2([](const QM1Node& n) { return n.trace_x; });
  out.trace_y = lerp2([](const QM1Node& n) { return n.trace_y; });
  out.alpha = {lerp2([](const QM1Node& n) { return n.alpha[0]; }),
               sx * lerp2([](const QM1Node& n) { return n.alpha[1]; }),
               sy * lerp2([](const QM1Node& n) { return n.alpha[2]; })};
  out.blend_r = lerp2([](const QM1Node& n) { return n.blend_r; });
  out.near_boundary = norm > 0.995;
  return out;
}

double qm1_eigen_deviation(const QM1Table& table, const std::array<double, 2>& phi) {
  const std::array<double, 2> a = {std::abs(phi[0]), std::abs(phi[1])};
  const double norm = std::hypot(a[0], a[1]);
  if (norm <= 0.0) return 0.0;
  const QM1Lookup lk = qm1_lookup(table, a, Quadrant::PP);
  // Principal axes of the symmetric 2x2 tensor [[u20, u11], [u11, u02]].
  const double theta = 0.5 * std::atan2(2.0 * lk.u11, lk.u20 - lk.u02);
  const double c = std::cos(theta), s = std::sin(theta);
  const double d1 = std::abs(a[0] * c + a[1] * s) / norm;
  const double d2 = std::abs(-a[0] * s + a[1] * c) / norm;
  const double cosang = std::min(1.0, std::max(d1, d2));
  return std::acos(cosang) * 180.0 / kPi;
}

}  // namespace mixmom
