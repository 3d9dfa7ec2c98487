#include "mixmom/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mixmom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("config: " + what); }

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  std::size_t pos = 0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::invalid_argument&) {
    bad("value of '" + key + "' is not a number: '" + v + "'");
  } catch (const std::out_of_range&) {
    bad("value of '" + key + "' is out of range: '" + v + "'");
  }
  if (pos != v.size()) bad("trailing characters in value of '" + key + "'");
  return x;
}

int to_int(const std::string& key, const std::string& v) {
  const double x = to_double(key, v);
  const int i = static_cast<int>(x);
  if (static_cast<double>(i) != x) bad("value of '" + key + "' is not an integer: '" + v + "'");
  return i;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true") return true;
  if (v == "off" || v == "false") return false;
  bad("value of '" + key + "' must be on/off: '" + v + "'");
}

const std::array<std::string, 4> kSideNames = {"left", "right", "bottom", "top"};

int side_index(const std::string& name) {
  for (int s = 0; s < 4; ++s)
    if (name == kSideNames[static_cast<std::size_t>(s)]) return s;
  bad("unknown boundary side '" + name + "'");
}

BasisKind part_basis(ClosureModel m, int part) {
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

}  // namespace

void apply_override(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "xmin") c.xmin = to_double(key, value);
  else if (key == "xmax") c.xmax = to_double(key, value);
  else if (key == "ymin") c.ymin = to_double(key, value);
  else if (key == "ymax") c.ymax = to_double(key, value);
  else if (key == "nx") c.nx = to_int(key, value);
  else if (key == "ny") c.ny = to_int(key, value);
  else if (key == "t_final") c.t_final = to_double(key, value);
  else if (key == "cfl") c.cfl = to_double(key, value);
  else if (key == "closure") c.closure = value;
  else if (key == "lb") c.lb = value;
  else if (key == "flux") c.flux = value;
  else if (key == "reconstruction") c.reconstruction = to_bool(key, value);
  else if (key == "sigma_s") c.sigma_s = to_double(key, value);
  else if (key == "sigma_a") c.sigma_a = to_double(key, value);
  else if (key == "q") c.q = to_double(key, value);
  else if (key == "ic_kind") c.ic_kind = value;
  else if (key == "ic_sigma") c.ic_sigma = to_double(key, value);
  else if (key == "ic_amplitude") c.ic_amplitude = to_double(key, value);
  else if (key == "ic_floor") c.ic_floor = to_double(key, value);
  else if (key == "ic_value") c.ic_value = to_double(key, value);
  else if (key == "left" || key == "right" || key == "bottom" || key == "top")
    c.side_kind[static_cast<std::size_t>(side_index(key))] = value;
  else if (key == "left_value" || key == "right_value" || key == "bottom_value" ||
           key == "top_value")
    c.side_value[static_cast<std::size_t>(side_index(key.substr(0, key.size() - 6)))] =
        to_double(key, value);
  else if (key == "beam") {
    std::istringstream bs(value);
    std::string side;
    BeamConfig b;
    if (!(bs >> side >> b.lo >> b.hi >> b.azimuth >> b.width2 >> b.amplitude))
      bad("beam needs: side lo hi azimuth width2 amplitude; got '" + value + "'");
    std::string rest;
    if (bs >> rest) bad("trailing characters in beam line: '" + value + "'");
    b.side = side_index(side);
    c.beams.push_back(b);
  } else if (key == "quad_n_mu") c.quad_n_mu = to_int(key, value);
  else if (key == "quad_n_phi") c.quad_n_phi = to_int(key, value);
  else if (key == "bc_quad_n") c.bc_quad_n = to_int(key, value);
  else if (key == "dual_tol") c.dual_tol = to_double(key, value);
  else if (key == "dual_max_iter") c.dual_max_iter = to_int(key, value);
  else if (key == "floor") c.floor = to_double(key, value);
  else if (key == "limiter_eps") c.limiter_eps = to_double(key, value);
  else if (key == "lb_cap_scale") c.lb_cap_scale = to_double(key, value);
  else if (key == "lb_trace_scale") c.lb_trace_scale = to_double(key, value);
  else if (key == "table_path") c.table_path = value;
  else if (key == "table_resolution") c.table_resolution = to_int(key, value);
  else if (key == "output_prefix") c.output_prefix = value;
  else if (key == "output_cadence") c.output_cadence = to_double(key, value);
  else bad("unknown key '" + key + "'");
}

RunConfig parse_config(std::istream& in) {
  static const std::array<std::string, 9> kSections = {
      "domain", "time", "model", "coefficients", "initial",
      "boundary", "numerics", "table", "output"};
  RunConfig c;
  c.beams.clear();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad("line " + std::to_string(lineno) + ": unterminated section");
      const std::string sec = trim(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), sec) == kSections.end())
        bad("line " + std::to_string(lineno) + ": unknown section '" + sec + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      bad("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) bad("line " + std::to_string(lineno) + ": empty key");
    try {
      apply_override(c, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "[domain]\n";
  o << "xmin = " << fmt(c.xmin) << "\n";
  o << "xmax = " << fmt(c.xmax) << "\n";
  o << "ymin = " << fmt(c.ymin) << "\n";
  o << "ymax = " << fmt(c.ymax) << "\n";
  o << "nx = " << c.nx << "\n";
  o << "ny = " << c.ny << "\n";
  o << "\n[time]\n";
  o << "t_final = " << fmt(c.t_final) << "\n";
  o << "cfl = " << fmt(c.cfl) << "\n";
  o << "\n[model]\n";
  o << "closure = " << c.closure << "\n";
  o << "lb = " << c.lb << "\n";
  o << "flux = " << c.flux << "\n";
  o << "reconstruction = " << (c.reconstruction ? "on" : "off") << "\n";
  o << "\n[coefficients]\n";
  o << "sigma_s = " << fmt(c.sigma_s) << "\n";
  o << "sigma_a = " << fmt(c.sigma_a) << "\n";
  o << "q = " << fmt(c.q) << "\n";
  o << "\n[initial]\n";
  o << "ic_kind = " << c.ic_kind << "\n";
  o << "ic_sigma = " << fmt(c.ic_sigma) << "\n";
  o << "ic_amplitude = " << fmt(c.ic_amplitude) << "\n";
  o << "ic_floor = " << fmt(c.ic_floor) << "\n";
  o << "ic_value = " << fmt(c.ic_value) << "\n";
  o << "\n[boundary]\n";
  for (int s = 0; s < 4; ++s) {
    const auto ss = static_cast<std::size_t>(s);
    o << kSideNames[ss] << " = " << c.side_kind[ss] << "\n";
    o << kSideNames[ss] << "_value = " << fmt(c.side_value[ss]) << "\n";
  }
  for (const BeamConfig& b : c.beams)
    o << "beam = " << kSideNames[static_cast<std::size_t>(b.side)] << " " << fmt(b.lo) << " "
      << fmt(b.hi) << " " << fmt(b.azimuth) << " " << fmt(b.width2) << " " << fmt(b.amplitude)
      << "\n";
  o << "\n[numerics]\n";
  o << "quad_n_mu = " << c.quad_n_mu << "\n";
  o << "quad_n_phi = " << c.quad_n_phi << "\n";
  o << "bc_quad_n = " << c.bc_quad_n << "\n";
  o << "dual_tol = " << fmt(c.dual_tol) << "\n";
  o << "dual_max_iter = " << c.dual_max_iter << "\n";
  o << "floor = " << fmt(c.floor) << "\n";
  o << "limiter_eps = " << fmt(c.limiter_eps) << "\n";
  o << "lb_cap_scale = " << fmt(c.lb_cap_scale) << "\n";
  o << "lb_trace_scale = " << fmt(c.lb_trace_scale) << "\n";
  o << "\n[table]\n";
  o << "table_path = " << c.table_path << "\n";
  o << "table_resolution = " << c.table_resolution << "\n";
  o << "\n[output]\n";
  o << "output_prefix = " << c.output_prefix << "\n";
  o << "output_cadence = " << fmt(c.output_cadence) << "\n";
  return o.str();
}

void validate_config(const RunConfig& c) {
  if (!(c.xmax > c.xmin) || !(c.ymax > c.ymin)) bad("domain extents must be positive");
  if (c.nx < 1 || c.ny < 1) bad("nx and ny must be at least 1");
  if (!(c.t_final > 0.0)) bad("t_final must be positive");
  if (!(c.cfl > 0.0) || c.cfl > 0.5) bad("cfl must lie in (0, 0.5]");

  if (c.closure != "p1" && c.closure != "m1" && c.closure != "mm1" && c.closure != "mk1" &&
      c.closure != "qk1")
    bad("closure must be one of p1, m1, mm1, mk1, qk1; got '" + c.closure + "'");
  if (c.lb != "polynomial" && c.lb != "tabulated")
    bad("lb must be polynomial or tabulated; got '" + c.lb + "'");
  if (c.flux != "kinetic" && c.flux != "lax-friedrichs")
    bad("flux must be kinetic or lax-friedrichs; got '" + c.flux + "'");
  if (c.closure == "qk1" && c.sigma_s > 0.0)
    bad("the quarter-moment advection model has no scattering operator; sigma_s must be 0");
  if (c.reconstruction && c.closure != "p1")
    bad("linear reconstruction is supported for the p1 closure only");

  if (c.sigma_s < 0.0 || c.sigma_a < 0.0 || c.q < 0.0) bad("coefficients must be non-negative");

  if (c.ic_kind == "gaussian") {
    if (!(c.ic_sigma > 0.0)) bad("gaussian initial condition needs ic_sigma > 0");
    if (!(c.ic_amplitude > 0.0)) bad("gaussian initial condition needs ic_amplitude > 0");
    if (c.ic_floor < 0.0) bad("ic_floor must be non-negative");
  } else if (c.ic_kind == "uniform") {
    if (c.ic_value < 0.0) bad("uniform initial condition needs ic_value >= 0");
  } else {
    bad("ic_kind must be gaussian or uniform; got '" + c.ic_kind + "'");
  }

  for (int s = 0; s < 4; ++s) {
    const std::string& k = c.side_kind[static_cast<std::size_t>(s)];
    if (k != "isotropic" && k != "periodic")
      bad("boundary side kind must be isotropic or periodic; got '" + k + "'");
    if (c.side_value[static_cast<std::size_t>(s)] < 0.0)
      bad("boundary values must be non-negative");
  }
  if ((c.side_kind[0] == "periodic") != (c.side_kind[1] == "periodic") ||
      (c.side_kind[2] == "periodic") != (c.side_kind[3] == "periodic"))
    bad("periodic sides must come in opposite pairs");
  for (const BeamConfig& b : c.beams) {
    if (b.side < 0 || b.side > 3) bad("beam side out of range");
    if (c.side_kind[static_cast<std::size_t>(b.side)] == "periodic")
      bad("periodic sides cannot carry beams");
    if (!(b.hi > b.lo)) bad("beam segment must have positive length");
    if (!(b.width2 > 0.0)) bad("beam width2 must be positive");
    if (!(b.amplitude > 0.0)) bad("beam amplitude must be positive");
  }

  if (c.quad_n_mu < 4 || c.quad_n_phi < 4) bad("closure quadrature needs at least 4 nodes per axis");
  if (c.bc_quad_n < 4) bad("bc_quad_n must be at least 4");
  if (!(c.dual_tol > 0.0)) bad("dual_tol must be positive");
  if (c.dual_max_iter < 1) bad("dual_max_iter must be at least 1");
  if (!(c.floor > 0.0)) bad("floor must be positive");
  if (!(c.limiter_eps > 0.0) || c.limiter_eps >= 0.5) bad("limiter_eps must lie in (0, 0.5)");
  if (!(c.lb_cap_scale > 0.0)) bad("lb_cap_scale must be positive");
  if (!(c.lb_trace_scale > 0.0)) bad("lb_trace_scale must be positive");
  if (c.table_resolution < 16) bad("table_resolution must be at least 16");
  if (c.output_prefix.empty()) bad("output_prefix must be non-empty");
  if (c.output_cadence < 0.0) bad("output_cadence must be non-negative");
}

ClosureModel closure_model(const RunConfig& c) {
  if (c.closure == "p1") return ClosureModel::P1Linear;
  if (c.closure == "m1") return ClosureModel::M1Entropy;
  if (c.closure == "mm1") return ClosureModel::MM1Entropy;
  if (c.closure == "mk1") return ClosureModel::MK1;
  if (c.closure == "qk1") return ClosureModel::QK1AdvectionOnly;
  bad("closure must be one of p1, m1, mm1, mk1, qk1; got '" + c.closure + "'");
}

bool config_needs_table(const RunConfig& c) {
  return c.closure == "mk1" && c.lb == "tabulated" && c.sigma_s > 0.0;
}

SolverConfig solver_config(const RunConfig& c, const QM1Table* table) {
  SolverConfig sc;
  sc.closure = closure_model(c);
  sc.lb = c.lb == "polynomial" ? LbVariant::Polynomial : LbVariant::Tabulated;
  sc.flux = c.flux == "kinetic" ? FluxScheme::Kinetic : FluxScheme::LaxFriedrichs;
  sc.linear_reconstruction = c.reconstruction;
  sc.coeff.sigma_s = c.sigma_s;
  sc.coeff.sigma_a = c.sigma_a;
  sc.coeff.q = c.q;
  sc.cfl = c.cfl;
  sc.floor = c.floor;
  sc.limiter_eps = c.limiter_eps;
  sc.quad_n_mu = c.quad_n_mu;
  sc.quad_n_phi = c.quad_n_phi;
  sc.bc_quad_n = c.bc_quad_n;
  sc.dual.tol = c.dual_tol;
  sc.dual.max_iter = c.dual_max_iter;
  sc.lb_cap_scale = c.lb_cap_scale;
  sc.lb_trace_scale = c.lb_trace_scale;
  sc.table = table;
  return sc;
}

Domain domain_of(const RunConfig& c) { return Domain{c.xmin, c.xmax, c.ymin, c.ymax}; }

std::array<SideBoundary, 4> boundaries_of(const RunConfig& c) {
  std::array<SideBoundary, 4> sides;
  for (int s = 0; s < 4; ++s) {
    const auto ss = static_cast<std::size_t>(s);
    sides[ss].kind = c.side_kind[ss] == "periodic" ? SideBoundary::Kind::Periodic
                                                   : SideBoundary::Kind::Isotropic;
    sides[ss].iso_psi = c.side_value[ss];
  }
  for (const BeamConfig& b : c.beams) {
    SideBoundary::Beam sb;
    sb.lo = b.lo;
    sb.hi = b.hi;
    sb.azimuth = b.azimuth;
    sb.width2 = b.width2;
    sb.amplitude = b.amplitude;
    sides[static_cast<std::size_t>(b.side)].beams.push_back(sb);
  }
  return sides;
}

std::function<MomentVec(double, double, int)> initial_condition(const RunConfig& c) {
  const ClosureModel model = closure_model(c);
  const double cx = 0.5 * (c.xmin + c.xmax);
  const double cy = 0.5 * (c.ymin + c.ymax);
  if (c.ic_kind == "uniform") {
    const double psi = c.ic_value;
    return [model, psi](double, double, int part) {
      return isotropic_moments(part_basis(model, part), psi);
    };
  }
  const double sigma2 = c.ic_sigma * c.ic_sigma;
  const double amp = c.ic_amplitude;
  const double floor_psi = c.ic_floor;
  return [model, cx, cy, sigma2, amp, floor_psi](double x, double y, int part) {
    const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
    const double psi = std::max(amp * std::exp(-r2 / (2.0 * sigma2)), floor_psi);
    return isotropic_moments(part_basis(model, part), psi);
  };
}

}  // namespace mixmom
