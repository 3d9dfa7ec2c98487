#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "mixmom/solver.hpp"

namespace mixmom {

// One boundary beam, in config units. side: 0 left, 1 right, 2 bottom, 3 top.
struct BeamConfig {
  int side = 0;
  double lo = 0.0, hi = 0.0;
  double azimuth = 0.0;
  double width2 = 0.05;
  double amplitude = 0.0;

  bool operator==(const BeamConfig&) const = default;
};

// Complete run description. Serializes to line-oriented `key = value` text with
// sections; parse(serialize(c)) == c.
struct RunConfig {
  // [domain]
  double xmin = -0.5, xmax = 0.5, ymin = -0.5, ymax = 0.5;
  int nx = 100, ny = 100;
  // [time]
  double t_final = 0.45;
  double cfl = 0.45;
  // [model]
  std::string closure = "mk1";  // p1 | m1 | mm1 | mk1 | qk1
  std::string lb = "tabulated";  // polynomial | tabulated
  std::string flux = "kinetic";  // kinetic | lax-friedrichs
  bool reconstruction = false;   // P1 only
  // [coefficients]
  double sigma_s = 0.0, sigma_a = 0.0, q = 0.0;
  // [initial] gaussian: psi = max(amplitude exp(-r^2/(2 sigma^2)), floor_value);
  // uniform: psi = value. Both isotropic in angle.
  std::string ic_kind = "uniform";
  double ic_sigma = 0.03;
  double ic_amplitude = 0.0;
  double ic_floor = 1e-4;
  double ic_value = 0.0;
  // [boundary] per side: isotropic | periodic, with the background angular
  // density, plus any number of beams.
  std::array<std::string, 4> side_kind = {"isotropic", "isotropic", "isotropic", "isotropic"};
  std::array<double, 4> side_value = {0.0, 0.0, 0.0, 0.0};
  std::vector<BeamConfig> beams;
  // [numerics]
  int quad_n_mu = 32, quad_n_phi = 32, bc_quad_n = 80;
  double dual_tol = 1e-9;
  int dual_max_iter = 200;
  double floor = 1e-10;
  double limiter_eps = 1e-9;
  double lb_cap_scale = 1e6;
  double lb_trace_scale = 100.0;
  // [table]
  std::string table_path;
  int table_resolution = 128;
  // [output]
  std::string output_prefix = "out/run";
  double output_cadence = 0.0;  // 0: final outputs only

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_config(std::istream& in);
RunConfig parse_config_file(const std::string& path);
std::string serialize_config(const RunConfig& c);

// Throws std::invalid_argument naming the violated constraint.
void validate_config(const RunConfig& c);

// Set one scalar key ("nx = 25" style, same names as the file format).
void apply_override(RunConfig& c, const std::string& key, const std::string& value);

// Conversions to solver inputs (validate_config first).
ClosureModel closure_model(const RunConfig& c);
bool config_needs_table(const RunConfig& c);
SolverConfig solver_config(const RunConfig& c, const QM1Table* table);
Domain domain_of(const RunConfig& c);
std::array<SideBoundary, 4> boundaries_of(const RunConfig& c);
std::function<MomentVec(double, double, int)> initial_condition(const RunConfig& c);

// Benchmark presets: linesource, twobeams, twobeams-rotated.
RunConfig preset_config(const std::string& name);

}  // namespace mixmom
