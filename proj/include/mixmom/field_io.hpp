#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mixmom/solver.hpp"

namespace mixmom {

// A simulation field as stored on disk: per-cell moment vectors for every
// solver part, plus the grid metadata needed to interpret them.
struct FieldData {
  std::string closure;  // p1 | m1 | mm1 | mk1 | qk1
  int nx = 0;
  int ny = 0;
  int parts = 1;
  Domain dom{};
  double time = 0.0;
  std::vector<MomentVec> cells;  // index (j * nx + i) * parts + part

  const MomentVec& at(int i, int j, int part) const {
    return cells[static_cast<std::size_t>((j * nx + i) * parts + part)];
  }
  double cell_x(int i) const { return dom.xmin + (i + 0.5) * (dom.xmax - dom.xmin) / nx; }
  double cell_y(int j) const { return dom.ymin + (j + 0.5) * (dom.ymax - dom.ymin) / ny; }
};

// Plain-text field files: `# key = value` metadata, one column-name header
// row, then one row per cell (x and y centers followed by the moment columns
// of every part). Rewriting the same state produces byte-identical files.
void write_field(std::ostream& out, const Simulation& sim, const std::string& closure_name);
void write_field_file(const std::string& path, const Simulation& sim,
                      const std::string& closure_name);
FieldData read_field(std::istream& in);
FieldData read_field_file(const std::string& path);

struct RealizabilityReport {
  long cells_checked = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  int worst_i = -1;
  int worst_j = -1;
  int worst_part = 0;
};

// Audits every stored moment vector against the moment-cone constraints of
// its basis. `margin` is the smallest constraint slack encountered; negative
// beyond `slack_rel * max(1, u00)` counts as a violation.
RealizabilityReport check_realizability(const FieldData& field, double slack_rel = 1e-10);

// Density cuts re-extracted from a stored field (same sampling as the
// in-memory solver cuts: bilinear interpolation of part-aggregated moments).
std::vector<CutSample> field_cut_horizontal(const FieldData& field);
std::vector<CutSample> field_cut_diagonal(const FieldData& field);
void write_cuts(std::ostream& out, const std::vector<CutSample>& horizontal,
                const std::vector<CutSample>& diagonal);

struct SummaryRecord {
  double mass_initial = 0.0;
  double mass_final = 0.0;
  double min_u00 = 0.0;
  long limiter_activations = 0;
  double symmetry_error = 0.0;
  double wall_seconds = 0.0;
  long steps = 0;
  long cap_events = 0;
  double max_conservation_residual = 0.0;
  long dual_solves = 0;
  long dual_iterations = 0;
};

// Fixed-key summary block, followed by the run's full configuration echoed
// as comment lines so every output file is self-describing.
void write_summary(std::ostream& out, const SummaryRecord& s, const std::string& config_echo);

}  // namespace mixmom
