#pragma once

#include <string>
#include <vector>

#include "cutlab/config.hpp"

namespace cutlab {

// Orchestration: seeded batch runs with deterministic, byte-identical
// outputs for identical configs. Per-seed failures are isolated; outcomes
// are recorded in the manifest. Wall-clock goes to a sidecar .log so the
// data artifacts stay reproducible.

struct SeedOutcome {
  uint64_t seed = 0;
  std::string status;  // "survived" | "extinct" | "error"
  std::string detail;
};

struct RunManifest {
  std::string config_hash;
  std::string mode;
  std::vector<SeedOutcome> outcomes;
  std::vector<std::string> artifacts;  // file paths
  std::string summary_path;
};

RunManifest run(const ExperimentConfig& config);

// aggregates fit summaries across manifests (median, IQR); rejects inputs
// with mixed configs
std::string report(const std::vector<std::string>& manifest_paths, const std::string& out_dir);

struct SelftestResult {
  std::string suite;
  bool pass = false;
  std::string detail;
};

// identity suites (1e-10 class), statistical suites (3 sigma class) and
// comparability suites (fitted constants, reported); `tamper` shrinks the
// identity tolerance to 1e-20 to prove the harness can fail
std::vector<SelftestResult> selftest(bool deep = false, bool tamper = false);

// formatting shared by all writers: 17 significant digits, round-trip safe
std::string fmt_g17(double v);

}  // namespace cutlab
