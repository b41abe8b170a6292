#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cutlab/heis.hpp"
#include "cutlab/process.hpp"
#include "cutlab/sphere.hpp"

namespace cutlab {

// One JSON document drives a batch run; CLI flags override individual fields.

enum class RunMode {
  Dims,
  Project,
  Slice,
  Euclid,
  SphereDims,
  SphereProject,
  Selftest,
  Report,
};

RunMode parse_mode(const std::string& name);  // throws on unknown
std::string mode_name(RunMode m);

struct ExperimentConfig {
  RunMode mode = RunMode::Dims;
  std::string space = "heis";  // heis | sphere (implied by mode for sphere-*)
  double gamma = 1.0;
  int n_max = 8;
  int n_lo = 4, n_hi = 8;
  int seed_count = 20;
  uint64_t seed_base = 1000;
  std::vector<uint64_t> seeds;  // explicit list wins over count+base
  // Heisenberg observation window (Koranyi ball)
  double omega_center[3] = {0.0, 0.0, 0.0};
  double omega_radius = 1.0;
  // sphere observation ball, in chart coordinates [1 : x1 : x2]
  double omega_sphere_chart[4] = {-1.0, 0.0, 0.0, 0.0};
  double omega_sphere_radius = 0.35;
  std::vector<std::array<double, 4>> anchors;  // sphere anchors, chart coords
  double grid_step = 1.0 / 16.0;
  double window_lo = -1.0, window_hi = 1.0;  // fiber window
  std::vector<std::array<double, 2>> fibers;
  int threads = 0;  // 0 = CUTOUT_LAB_THREADS env or hardware
  int children_per_parent = 48;
  double budget_events = 2.5e7;
  bool emptiness_test = false;
  int retry_cap_factor = 3;  // seed-rejection cap = factor * seed_count
  std::string output_dir = "out";
  std::vector<std::string> report_inputs;  // manifests for report mode

  std::vector<uint64_t> seed_list() const;
  HeisRegion omega_heis() const;
  SpherePoint omega_sphere_center() const;
  std::vector<SpherePoint> anchor_points() const;  // defaults if empty
};

// throws std::invalid_argument with a field-level message
void validate(const ExperimentConfig& c);

ExperimentConfig config_from_json_file(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_canonical_json(const ExperimentConfig& c);

// FNV-1a 64 over the canonical JSON text
uint64_t config_hash(const ExperimentConfig& c);
std::string config_hash_hex(const ExperimentConfig& c);

}  // namespace cutlab
