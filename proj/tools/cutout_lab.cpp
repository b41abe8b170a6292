#include <cstdio>
#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "cutlab/runner.hpp"

// cutout-lab <mode> --config FILE [--gamma X --seeds N --seed-base K
//                                  --n-max M --out DIR --threads T]
// exit codes: 0 pass, 1 runtime error, 2 config error, 3 acceptance failure

int main(int argc, char** argv) {
  CLI::App app{"Poisson cut-out laboratory for the Heisenberg group and the visual 3-sphere"};
  std::string mode_arg;
  std::string config_path;
  double gamma = -1.0;
  int seeds = -1;
  long long seed_base = -1;
  int n_max = -1;
  std::string out_dir;
  int threads = -1;

  app.add_option("mode", mode_arg,
                 "dims|project|slice|euclid|sphere-dims|sphere-project|selftest|report")
      ->required();
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--gamma", gamma, "intensity parameter override");
  app.add_option("--seeds", seeds, "seed count override");
  app.add_option("--seed-base", seed_base, "first seed override");
  app.add_option("--n-max", n_max, "depth override (also sets n_range top)");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--threads", threads, "worker threads (0 = auto)");

  CLI11_PARSE(app, argc, argv);

  cutlab::ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = cutlab::config_from_json_file(config_path);
    cfg.mode = cutlab::parse_mode(mode_arg);
    if (gamma >= 0.0) cfg.gamma = gamma;
    if (seeds >= 0) {
      cfg.seed_count = seeds;
      cfg.seeds.clear();
    }
    if (seed_base >= 0) cfg.seed_base = static_cast<uint64_t>(seed_base);
    if (n_max > 0) {
      cfg.n_max = n_max;
      cfg.n_hi = std::min(cfg.n_hi, n_max);
    }
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (threads >= 0) cfg.threads = threads;
    cutlab::validate(cfg);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (cfg.mode == cutlab::RunMode::Selftest) {
      auto results = cutlab::selftest(false, false);
      bool all = true;
      for (const auto& r : results) {
        std::printf("[%s] %s %s\n", r.pass ? "PASS" : "FAIL", r.suite.c_str(),
                    r.detail.c_str());
        all = all && r.pass;
      }
      return all ? 0 : 3;
    }
    cutlab::RunManifest mf = cutlab::run(cfg);
    long errors = 0;
    for (const auto& o : mf.outcomes) errors += o.status == "error";
    std::printf("mode=%s config=%s outcomes=%zu errors=%ld summary=%s\n", mf.mode.c_str(),
                mf.config_hash.c_str(), mf.outcomes.size(), errors, mf.summary_path.c_str());
    return errors == static_cast<long>(mf.outcomes.size()) && !mf.outcomes.empty() ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 1;
  }
}
