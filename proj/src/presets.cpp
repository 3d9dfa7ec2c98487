#include "mixmom/config.hpp"

#include <stdexcept>

#include "mixmom/sphere.hpp"

namespace mixmom {

namespace {

RunConfig linesource() {
  RunConfig c;
  c.xmin = -0.5;
  c.xmax = 0.5;
  c.ymin = -0.5;
  c.ymax = 0.5;
  c.nx = 100;
  c.ny = 100;
  c.t_final = 0.45;
  c.closure = "m1";
  c.sigma_s = 1.0;
  c.sigma_a = 0.0;
  c.q = 0.0;
  c.ic_kind = "gaussian";
  c.ic_sigma = 0.03;
  c.ic_amplitude = 1.0 / (8.0 * kPi * c.ic_sigma * c.ic_sigma);
  c.ic_floor = 1e-4;
  for (auto& k : c.side_kind) k = "isotropic";
  for (auto& v : c.side_value) v = 1e-4;
  c.output_prefix = "out/linesource";
  return c;
}

RunConfig twobeams() {
  RunConfig c;
  c.xmin = 0.0;
  c.xmax = 1.0;
  c.ymin = 0.0;
  c.ymax = 1.0;
  c.nx = 100;
  c.ny = 100;
  c.t_final = 1.2;
  c.closure = "mk1";
  c.sigma_s = 0.0;
  c.sigma_a = 0.0;
  c.q = 0.0;
  const double amp = 100.0 / (4.0 * kPi);
  const double vacuum = amp * 1e-6;
  c.ic_kind = "uniform";
  c.ic_value = vacuum;
  for (auto& k : c.side_kind) k = "isotropic";
  for (auto& v : c.side_value) v = vacuum;
  c.beams.push_back(BeamConfig{0, 0.45, 0.55, 0.0, 0.05, amp});
  c.beams.push_back(BeamConfig{2, 0.45, 0.55, 0.5 * kPi, 0.05, amp});
  c.output_prefix = "out/twobeams";
  return c;
}

RunConfig twobeams_rotated() {
  RunConfig c = twobeams();
  c.beams.clear();
  const double amp = 100.0 / (4.0 * kPi);
  c.beams.push_back(BeamConfig{0, 0.90, 1.00, -0.25 * kPi, 0.05, amp});
  c.beams.push_back(BeamConfig{0, 0.00, 0.10, 0.25 * kPi, 0.05, amp});
  c.output_prefix = "out/twobeams-rotated";
  return c;
}

}  // namespace

RunConfig preset_config(const std::string& name) {
  if (name == "linesource") return linesource();
  if (name == "twobeams") return twobeams();
  if (name == "twobeams-rotated") return twobeams_rotated();
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected linesource, twobeams, twobeams-rotated)");
}

}  // namespace mixmom
