#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mixmom/config.hpp"
#include "mixmom/field_io.hpp"
#include "mixmom/qm1_table.hpp"
#include "mixmom/sphere.hpp"

namespace {

using namespace mixmom;

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& overrides) {
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must look like key=value; got '" + ov + "'");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    apply_override(cfg, trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)));
  }
}

int run_config(const RunConfig& cfg) {
  validate_config(cfg);

  std::optional<QM1Table> table_store;
  const QM1Table* table = nullptr;
  if (config_needs_table(cfg)) {
    if (!cfg.table_path.empty() && std::filesystem::exists(cfg.table_path)) {
      table_store = QM1Table::load_file(cfg.table_path);
      std::cout << "loaded closure table " << cfg.table_path << " (resolution "
                << table_store->resolution() << ")\n";
    } else {
      std::cout << "tabulating quarter-moment closure at resolution " << cfg.table_resolution
                << "...\n";
      table_store = QM1Table::tabulate(
          cfg.table_resolution,
          quadrature(Region::quarter(Quadrant::PP), cfg.quad_n_mu, cfg.quad_n_phi));
      if (!cfg.table_path.empty()) {
        ensure_parent_dir(cfg.table_path);
        table_store->save_file(cfg.table_path);
        std::cout << "saved closure table to " << cfg.table_path << "\n";
      }
    }
    table = &*table_store;
  }

  ensure_parent_dir(cfg.output_prefix + "_field.txt");

  Simulation sim(solver_config(cfg, table), domain_of(cfg), cfg.nx, cfg.ny, boundaries_of(cfg),
                 initial_condition(cfg));

  const auto t0 = std::chrono::steady_clock::now();
  const Diagnostics d0 = sim.diagnostics();
  const double mass_initial = d0.mass;
  std::cout << "grid " << cfg.nx << "x" << cfg.ny << ", closure " << cfg.closure
            << ", t_final " << cfg.t_final << ", initial mass " << mass_initial << "\n";

  double next_snap = cfg.output_cadence > 0.0 ? cfg.output_cadence : -1.0;
  int snap_id = 0;
  while (sim.time() < cfg.t_final - 1e-12) {
    const double dt = std::min(sim.cfl_dt(), cfg.t_final - sim.time());
    sim.step(dt);
    if (next_snap > 0.0 && sim.time() >= next_snap - 1e-12) {
      std::ostringstream name;
      name << cfg.output_prefix << "_snap" << ++snap_id << ".txt";
      write_field_file(name.str(), sim, cfg.closure);
      while (next_snap <= sim.time() + 1e-12) next_snap += cfg.output_cadence;
    }
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const Diagnostics d = sim.diagnostics();
  const RunStats rs = sim.run_stats();

  write_field_file(cfg.output_prefix + "_field.txt", sim, cfg.closure);
  {
    std::ofstream cf(cfg.output_prefix + "_cuts.txt");
    if (!cf) throw std::runtime_error("cannot open cuts output");
    write_cuts(cf, sim.cut_horizontal(), sim.cut_diagonal());
  }
  SummaryRecord s;
  s.mass_initial = mass_initial;
  s.mass_final = d.mass;
  s.min_u00 = rs.min_u00_seen;
  s.limiter_activations = rs.limiter_hits;
  s.symmetry_error = d.symmetry_error;
  s.wall_seconds = wall;
  s.steps = rs.steps;
  s.cap_events = rs.cap_events;
  s.max_conservation_residual = rs.max_conservation_residual;
  s.dual_solves = rs.dual_solves;
  s.dual_iterations = rs.dual_iterations;
  {
    std::ofstream sf(cfg.output_prefix + "_summary.txt");
    if (!sf) throw std::runtime_error("cannot open summary output");
    write_summary(sf, s, serialize_config(cfg));
  }
  std::ostringstream echo;
  write_summary(echo, s, "");
  std::cout << echo.str();
  std::cout << "realizability_violations = " << d.realizability_violations << "\n";
  std::cout << "wrote " << cfg.output_prefix << "_{field,cuts,summary}.txt\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first-order moment-closure transport simulator"};
  app.require_subcommand(1);

  std::string config_path;
  CLI::App* run = app.add_subcommand("run", "simulate from a config file");
  run->add_option("config", config_path, "path to a run configuration")->required();

  std::string preset_name;
  std::vector<std::string> overrides;
  bool print_only = false;
  CLI::App* preset = app.add_subcommand("preset", "simulate a built-in benchmark");
  preset->add_option("name", preset_name, "linesource | twobeams | twobeams-rotated")
      ->required();
  preset->add_option("--override", overrides, "key=value config override (repeatable)");
  preset->add_flag("--print", print_only, "print the resolved config and exit");

  int tab_resolution = 128;
  int tab_quad = 32;
  std::string tab_out = "qm1_table.txt";
  CLI::App* tab = app.add_subcommand("tabulate", "precompute the quarter-moment closure table");
  tab->add_option("--resolution", tab_resolution, "grid points per axis")
      ->check(CLI::Range(16, 4096));
  tab->add_option("--quad", tab_quad, "quadrature nodes per axis");
  tab->add_option("--out", tab_out, "output path");

  std::string check_path;
  CLI::App* check = app.add_subcommand("check", "audit a field file for realizability");
  check->add_option("field", check_path, "field file written by run/preset")->required();

  std::string cuts_path;
  std::string cuts_out;
  CLI::App* cuts = app.add_subcommand("cuts", "extract density cuts from a field file");
  cuts->add_option("field", cuts_path, "field file written by run/preset")->required();
  cuts->add_option("--out", cuts_out, "output path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_config(parse_config_file(config_path));
    if (*preset) {
      RunConfig cfg = preset_config(preset_name);
      apply_overrides(cfg, overrides);
      if (print_only) {
        validate_config(cfg);
        std::cout << serialize_config(cfg);
        return 0;
      }
      return run_config(cfg);
    }
    if (*tab) {
      const QM1Table t = QM1Table::tabulate(
          tab_resolution, quadrature(Region::quarter(Quadrant::PP), tab_quad, tab_quad));
      ensure_parent_dir(tab_out);
      t.save_file(tab_out);
      std::cout << "wrote " << tab_out << " (resolution " << t.resolution() << ", invalid nodes "
                << t.invalid_count() << ", max trace sum " << t.max_trace_sum() << ")\n";
      return 0;
    }
    if (*check) {
      const RealizabilityReport r = check_realizability(read_field_file(check_path));
      std::cout << "cells_checked = " << r.cells_checked << "\n";
      std::cout << "violations = " << r.violations << "\n";
      std::cout << "worst_margin = " << r.worst_margin << " at cell (" << r.worst_i << ", "
                << r.worst_j << ") part " << r.worst_part << "\n";
      return r.violations == 0 ? 0 : 2;
    }
    if (*cuts) {
      const FieldData f = read_field_file(cuts_path);
      const auto horizontal = field_cut_horizontal(f);
      const auto diagonal = field_cut_diagonal(f);
      if (cuts_out.empty()) {
        write_cuts(std::cout, horizontal, diagonal);
      } else {
        ensure_parent_dir(cuts_out);
        std::ofstream out(cuts_out);
        if (!out) throw std::runtime_error("cannot open " + cuts_out);
        write_cuts(out, horizontal, diagonal);
        std::cout << "wrote " << cuts_out << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
