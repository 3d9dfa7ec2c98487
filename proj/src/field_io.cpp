#include "mixmom/field_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mixmom {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void malformed(const std::string& what) {
  throw std::runtime_error("field file: " + what);
}

int parts_of_closure(const std::string& closure) { return closure == "qk1" ? 4 : 1; }

BasisKind basis_of_closure(const std::string& closure, int part) {
  if (closure == "p1" || closure == "m1") return BasisKind::full1();
  if (closure == "mm1" || closure == "mk1") return BasisKind::mixed1();
  if (closure == "qk1") return BasisKind::quarter1(kQuadrants[static_cast<std::size_t>(part)]);
  malformed("unknown closure '" + closure + "'");
}

std::vector<std::string> column_names(const std::string& closure) {
  if (closure == "p1" || closure == "m1") return {"u00", "ux", "uy"};
  if (closure == "mm1" || closure == "mk1") return {"u00", "uxp", "uxm", "uyp", "uym"};
  if (closure == "qk1") {
    static const char* kTag[4] = {"pp", "mp", "mm", "pm"};
    std::vector<std::string> names;
    for (const char* t : kTag)
      for (const char* c : {"u00_", "ux_", "uy_"}) names.push_back(std::string(c) + t);
    return names;
  }
  malformed("unknown closure '" + closure + "'");
}

MomentVec field_aggregate(const FieldData& f, int i, int j) {
  MomentVec out;
  out.kind = BasisKind::full1();
  if (f.parts == 4) {
    for (int p = 0; p < f.parts; ++p) {
      const MomentVec& u = f.at(i, j, p);
      out[0] += u[0];
      out[1] += u[1];
      out[2] += u[2];
    }
    return out;
  }
  const MomentVec& u = f.at(i, j, 0);
  if (u.kind.size() == 5) {
    out[0] = u[0];
    out[1] = u[1] + u[2];
    out[2] = u[3] + u[4];
    return out;
  }
  return u;
}

MomentVec field_sample(const FieldData& f, double x, double y) {
  const double dx = (f.dom.xmax - f.dom.xmin) / f.nx;
  const double dy = (f.dom.ymax - f.dom.ymin) / f.ny;
  const double gx = std::clamp((x - f.dom.xmin) / dx - 0.5, 0.0, static_cast<double>(f.nx - 1));
  const double gy = std::clamp((y - f.dom.ymin) / dy - 0.5, 0.0, static_cast<double>(f.ny - 1));
  const int i0 = std::min(static_cast<int>(gx), f.nx - 2 < 0 ? 0 : f.nx - 2);
  const int j0 = std::min(static_cast<int>(gy), f.ny - 2 < 0 ? 0 : f.ny - 2);
  const double tx = std::clamp(gx - i0, 0.0, 1.0);
  const double ty = std::clamp(gy - j0, 0.0, 1.0);
  const int i1 = std::min(i0 + 1, f.nx - 1);
  const int j1 = std::min(j0 + 1, f.ny - 1);

  const MomentVec a = field_aggregate(f, i0, j0);
  const MomentVec b = field_aggregate(f, i1, j0);
  const MomentVec c = field_aggregate(f, i0, j1);
  const MomentVec d = field_aggregate(f, i1, j1);
  MomentVec out;
  out.kind = a.kind;
  for (int k = 0; k < a.size(); ++k)
    out[k] = (1.0 - ty) * ((1.0 - tx) * a[k] + tx * b[k]) + ty * ((1.0 - tx) * c[k] + tx * d[k]);
  return out;
}

// Smallest slack among the moment-cone constraints of the vector's basis.
double realizability_margin(const MomentVec& u) {
  double m = u[0];
  switch (u.kind.family) {
    case BasisKind::Family::Full1:
      m = std::min(m, u[0] - std::hypot(u[1], u[2]));
      break;
    case BasisKind::Family::Quarter1:
      m = std::min(m, quadrant_sign_x(u.kind.quadrant) * u[1]);
      m = std::min(m, quadrant_sign_y(u.kind.quadrant) * u[2]);
      m = std::min(m, u[0] - std::hypot(u[1], u[2]));
      break;
    case BasisKind::Family::Mixed1:
      m = std::min({m, u[1], -u[2], u[3], -u[4]});
      m = std::min(m, u[0] - std::hypot(u[1] - u[2], u[3] - u[4]));
      break;
  }
  return m;
}

}  // namespace

void write_field(std::ostream& out, const Simulation& sim, const std::string& closure_name) {
  const Domain& dom = sim.domain();
  out << "# mixmom field\n";
  out << "# closure = " << closure_name << "\n";
  out << "# nx = " << sim.nx() << "\n";
  out << "# ny = " << sim.ny() << "\n";
  out << "# parts = " << sim.parts() << "\n";
  out << "# xmin = " << fmt(dom.xmin) << "\n";
  out << "# xmax = " << fmt(dom.xmax) << "\n";
  out << "# ymin = " << fmt(dom.ymin) << "\n";
  out << "# ymax = " << fmt(dom.ymax) << "\n";
  out << "# time = " << fmt(sim.time()) << "\n";
  out << "x y";
  for (const std::string& name : column_names(closure_name)) out << " " << name;
  out << "\n";
  for (int j = 0; j < sim.ny(); ++j)
    for (int i = 0; i < sim.nx(); ++i) {
      out << fmt(sim.cell_x(i)) << " " << fmt(sim.cell_y(j));
      for (int p = 0; p < sim.parts(); ++p) {
        const MomentVec& u = sim.cell(i, j, p);
        for (int k = 0; k < u.size(); ++k) out << " " << fmt(u[k]);
      }
      out << "\n";
    }
}

void write_field_file(const std::string& path, const Simulation& sim,
                      const std::string& closure_name) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  write_field(out, sim, closure_name);
  if (!out) throw std::runtime_error("write failed: " + path);
}

FieldData read_field(std::istream& in) {
  FieldData f;
  f.nx = f.ny = f.parts = -1;
  bool have_time = false;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  int have_extent = 0;

  std::string line;
  bool header_seen = false;
  long row = 0;
  long expected_rows = -1;
  std::vector<BasisKind> kinds;
  int row_width = 0;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;  // banner line
      std::istringstream ks(line.substr(1, eq - 1));
      std::string key;
      ks >> key;
      std::istringstream vs(line.substr(eq + 1));
      if (key == "closure") {
        vs >> f.closure;
      } else if (key == "nx") {
        vs >> f.nx;
      } else if (key == "ny") {
        vs >> f.ny;
      } else if (key == "parts") {
        vs >> f.parts;
      } else if (key == "xmin") {
        vs >> xmin;
        ++have_extent;
      } else if (key == "xmax") {
        vs >> xmax;
        ++have_extent;
      } else if (key == "ymin") {
        vs >> ymin;
        ++have_extent;
      } else if (key == "ymax") {
        vs >> ymax;
        ++have_extent;
      } else if (key == "time") {
        vs >> f.time;
        have_time = true;
      }
      if (!vs) malformed("bad metadata line: '" + line + "'");
      continue;
    }
    if (!header_seen) {
      // Column-name header row; everything needed to size the data must be
      // known by now.
      if (f.closure.empty() || f.nx < 1 || f.ny < 1 || f.parts < 1 || have_extent != 4 ||
          !have_time)
        malformed("incomplete metadata before data rows");
      if (f.parts != parts_of_closure(f.closure))
        malformed("parts does not match closure '" + f.closure + "'");
      f.dom = Domain{xmin, xmax, ymin, ymax};
      if (!(f.dom.xmax > f.dom.xmin) || !(f.dom.ymax > f.dom.ymin))
        malformed("domain extents must be positive");
      for (int p = 0; p < f.parts; ++p) kinds.push_back(basis_of_closure(f.closure, p));
      row_width = 2;
      for (const BasisKind& k : kinds) row_width += k.size();
      expected_rows = static_cast<long>(f.nx) * f.ny;
      f.cells.reserve(static_cast<std::size_t>(expected_rows) * f.parts);
      header_seen = true;
      continue;
    }
    std::istringstream rs(line);
    double x = 0, y = 0;
    if (!(rs >> x >> y)) malformed("bad data row " + std::to_string(row + 1));
    for (const BasisKind& k : kinds) {
      MomentVec u;
      u.kind = k;
      for (int c = 0; c < k.size(); ++c)
        if (!(rs >> u[c])) malformed("bad data row " + std::to_string(row + 1));
      f.cells.push_back(u);
    }
    std::string rest;
    if (rs >> rest)
      malformed("row " + std::to_string(row + 1) + " has more than " +
                std::to_string(row_width) + " columns");
    ++row;
  }
  if (!header_seen) malformed("no data found");
  if (row != expected_rows)
    malformed("expected " + std::to_string(expected_rows) + " data rows, found " +
              std::to_string(row));
  return f;
}

FieldData read_field_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open field file: " + path);
  return read_field(in);
}

RealizabilityReport check_realizability(const FieldData& field, double slack_rel) {
  RealizabilityReport r;
  for (int j = 0; j < field.ny; ++j)
    for (int i = 0; i < field.nx; ++i)
      for (int p = 0; p < field.parts; ++p) {
        const MomentVec& u = field.at(i, j, p);
        const double margin = realizability_margin(u);
        ++r.cells_checked;
        if (margin < r.worst_margin) {
          r.worst_margin = margin;
          r.worst_i = i;
          r.worst_j = j;
          r.worst_part = p;
        }
        if (margin < -slack_rel * std::max(1.0, std::abs(u[0]))) ++r.violations;
      }
  return r;
}

std::vector<CutSample> field_cut_horizontal(const FieldData& f) {
  const double cx = 0.5 * (f.dom.xmin + f.dom.xmax);
  const double cy = 0.5 * (f.dom.ymin + f.dom.ymax);
  std::vector<CutSample> out;
  out.reserve(static_cast<std::size_t>(f.nx));
  for (int i = 0; i < f.nx; ++i) {
    CutSample s;
    s.x = f.cell_x(i);
    s.y = cy;
    s.s = s.x - cx;
    s.u = field_sample(f, s.x, s.y);
    out.push_back(s);
  }
  return out;
}

std::vector<CutSample> field_cut_diagonal(const FieldData& f) {
  const double cx = 0.5 * (f.dom.xmin + f.dom.xmax);
  const double cy = 0.5 * (f.dom.ymin + f.dom.ymax);
  const double dx = (f.dom.xmax - f.dom.xmin) / f.nx;
  const double dy = (f.dom.ymax - f.dom.ymin) / f.ny;
  const double e = 1.0 / std::sqrt(2.0);
  const double ds = std::hypot(dx, dy);
  const double sx_hi = (f.dom.xmax - 0.5 * dx - cx) / e;
  const double sy_hi = (f.dom.ymax - 0.5 * dy - cy) / e;
  const double sx_lo = (cx - f.dom.xmin - 0.5 * dx) / e;
  const double sy_lo = (cy - f.dom.ymin - 0.5 * dy) / e;
  const double s_hi = std::min(sx_hi, sy_hi);
  const double s_lo = -std::min(sx_lo, sy_lo);

  std::vector<CutSample> out;
  for (long k = static_cast<long>(std::floor(s_lo / ds));
       k <= static_cast<long>(std::ceil(s_hi / ds)); ++k) {
    const double s = static_cast<double>(k) * ds;
    if (s < s_lo || s > s_hi) continue;
    CutSample c;
    c.s = s;
    c.x = cx + s * e;
    c.y = cy + s * e;
    c.u = field_sample(f, c.x, c.y);
    out.push_back(c);
  }
  return out;
}

void write_cuts(std::ostream& out, const std::vector<CutSample>& horizontal,
                const std::vector<CutSample>& diagonal) {
  out << "# mixmom cuts (direction-aggregated moments)\n";
  out << "# cut = horizontal\n";
  out << "s x y u00 ux uy\n";
  for (const CutSample& c : horizontal)
    out << fmt(c.s) << " " << fmt(c.x) << " " << fmt(c.y) << " " << fmt(c.u[0]) << " "
        << fmt(c.u[1]) << " " << fmt(c.u[2]) << "\n";
  out << "\n# cut = diagonal\n";
  out << "s x y u00 ux uy\n";
  for (const CutSample& c : diagonal)
    out << fmt(c.s) << " " << fmt(c.x) << " " << fmt(c.y) << " " << fmt(c.u[0]) << " "
        << fmt(c.u[1]) << " " << fmt(c.u[2]) << "\n";
}

void write_summary(std::ostream& out, const SummaryRecord& s, const std::string& config_echo) {
  out << "# mixmom summary\n";
  out << "mass_initial = " << fmt(s.mass_initial) << "\n";
  out << "mass_final = " << fmt(s.mass_final) << "\n";
  out << "min_u00 = " << fmt(s.min_u00) << "\n";
  out << "limiter_activations = " << s.limiter_activations << "\n";
  out << "symmetry_error = " << fmt(s.symmetry_error) << "\n";
  out << "wall_seconds = " << fmt(s.wall_seconds) << "\n";
  out << "steps = " << s.steps << "\n";
  out << "cap_events = " << s.cap_events << "\n";
  out << "max_conservation_residual = " << fmt(s.max_conservation_residual) << "\n";
  out << "dual_solves = " << s.dual_solves << "\n";
  out << "dual_iterations = " << s.dual_iterations << "\n";
  out << "# configuration\n";
  std::istringstream cfg(config_echo);
  std::string line;
  while (std::getline(cfg, line)) out << "# " << line << "\n";
}

}  // namespace mixmom
