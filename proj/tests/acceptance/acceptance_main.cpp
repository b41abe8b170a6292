// Acceptance battery: desk-scale statistical reproductions of the dimension
// and projection results, plus exact identity suites. One line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "cutlab/estimators.hpp"
#include "cutlab/runner.hpp"
#include "json.hpp"

using namespace cutlab;
using nlohmann::json;

namespace {

int g_fail = 0;
std::chrono::steady_clock::time_point g_t0;

void report_line(int idx, const char* name, bool pass, const std::string& detail) {
  double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
  std::printf("[%s] criterion %2d: %-34s %s  (t=%.0fs)\n", pass ? "PASS" : "FAIL", idx, name,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++g_fail;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int threads() {
  if (const char* env = std::getenv("CUTOUT_LAB_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 2;
}

json run_summary(const std::string& cfg_text) {
  ExperimentConfig c = config_from_json_text(cfg_text);
  c.threads = threads();
  RunManifest m = run(c);
  std::ifstream in(m.summary_path);
  json s;
  in >> s;
  return s;
}

// ---- criteria -------------------------------------------------------------

void criterion1_identities() {
  auto results = selftest(true, false);  // deep identity counts (1e5 per identity)
  bool pass = false;
  std::string detail;
  for (const auto& r : results)
    if (r.suite == "identities") {
      pass = r.pass;
      detail = r.detail;
    }
  report_line(1, "geometry identities 1e-10", pass, detail);
}

void criterion2_measures() {
  Rng rng(2026);
  const int N = 1000000;
  long hits = 0;
  for (int i = 0; i < N; ++i) {
    double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), t = rng.uniform(-0.5, 0.5);
    double m2 = x * x + y * y;
    if (m2 * m2 + 4 * t * t <= 1.0) ++hits;
  }
  double vol = 4.0 * double(hits) / N;
  bool ok1 = std::abs(vol - kKoranyiUnitBallLebVolume) / kKoranyiUnitBallLebVolume < 0.01;

  const int M = 8000000;
  SpherePoint x0 = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  double rs[3] = {0.05, 0.1, 0.2};
  long h3[3] = {0, 0, 0};
  for (int i = 0; i < M; ++i) {
    SpherePoint y = sample_sphere_uniform(rng);
    double d = visual_dist(x0, y);
    for (int j = 0; j < 3; ++j)
      if (d <= rs[j]) ++h3[j];
  }
  bool ok2 = true;
  std::ostringstream os;
  os << "koranyi=" << fmt(vol);
  for (int j = 0; j < 3; ++j) {
    double want = sphere_ball_volume(rs[j]) / kSphereTotalMass;
    double got = double(h3[j]) / M;
    double se = std::sqrt(want * (1 - want) / M);
    if (std::abs(got - want) > 3.0 * se) ok2 = false;
    os << " f(" << rs[j] << ")z=" << fmt((got - want) / se);
  }
  bool ok3 = true;
  double prev = 0.0;
  for (int j = 1; j <= 12; ++j) {
    double ratio = sphere_ball_volume(std::pow(2.0, -j)) / std::pow(16.0, -j);
    if (ratio < prev - 1e-14 || ratio > 1.0 + 1e-12) ok3 = false;
    prev = ratio;
  }
  report_line(2, "measure normalizations", ok1 && ok2 && ok3, os.str());
}

void criterion3_emptiness() {
  // gamma = 4.5 > m: extinction frequency at n = 10 over 50 seeds
  std::atomic<int> extinct{0};
  std::vector<int> seeds(50);
  for (int i = 0; i < 50; ++i) seeds[i] = i;
  std::atomic<size_t> idx{0};
  auto worker = [&] {
    size_t i;
    while ((i = idx.fetch_add(1)) < seeds.size()) {
      HeisProcessDef def{4.5, 31000ull + seeds[i], 10, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
      HeisCellStore store(def);
      auto [in, out] = count_surviving_boxes_at(store, 10, HeisRegion{HeisPoint(cplx(0, 0), 0), 1.0});
      if (out == 0) ++extinct;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads() - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  double freq = extinct / 50.0;
  report_line(3, "supercritical emptiness", freq >= 0.95, "extinct_freq=" + fmt(freq));
}

void criterion4_box_dims() {
  json s1 = run_summary(R"({
    "mode":"dims","gamma":1.0,"n_max":6,"n_range":[3,6],
    "seeds":{"count":20,"base":41000},"omega":{"center":[0,0,0],"radius":1.0},
    "output_dir":"/tmp/acc/dims_g1"})");
  double m1 = s1.value("median_slope", 0.0);
  bool ok1 = m1 >= 2.6 && m1 <= 3.4;

  json s2 = run_summary(R"({
    "mode":"dims","gamma":2.5,"n_max":8,"n_range":[4,8],
    "seeds":{"count":20,"base":42000},"omega":{"center":[0,0,0],"radius":1.0},
    "output_dir":"/tmp/acc/dims_g25"})");
  double m2 = s2.value("median_slope", 0.0);
  bool ok2 = m2 >= 1.1 && m2 <= 1.9;

  json s3 = run_summary(R"({
    "mode":"sphere-dims","gamma":1.0,"n_max":6,"n_range":[3,6],
    "seeds":{"count":12,"base":43000},
    "omega_sphere":{"chart":[-1,0,0,0],"radius":0.35},
    "output_dir":"/tmp/acc/sdims_g1"})");
  double m3 = s3.value("median_slope", 0.0);
  bool ok3 = m3 >= 2.6 && m3 <= 3.4;

  report_line(4, "box dimension m - gamma", ok1 && ok2 && ok3,
              "heis_g1=" + fmt(m1) + " heis_g25=" + fmt(m2) + " sphere_g1=" + fmt(m3));
}

void criterion5_projection() {
  json s1 = run_summary(R"({
    "mode":"project","gamma":1.0,"n_max":6,"n_range":[3,6],
    "seeds":{"count":20,"base":51000},"omega":{"center":[0,0,0],"radius":1.0},
    "grid_step":0.0625,"output_dir":"/tmp/acc/proj_g1"})");
  double area = s1.value("median_area", 0.0);
  double rel = s1.value("median_area_rel_change", 1.0);
  bool ok1 = area > 0.0 && rel < 0.10;
  // positive field patch: count positive cells in the last run's per-seed data
  long long pos = 0, tot = 0;
  for (const auto& rec : s1.at("per_seed")) {
    pos += rec.value("field_positive", 0LL);
    tot += rec.value("field_total", 0LL);
  }
  bool ok2 = tot > 0 && pos > tot / 10;  // an open patch worth of positive fibers

  json s2 = run_summary(R"({
    "mode":"project","gamma":2.5,"n_max":8,"n_range":[4,8],
    "seeds":{"count":20,"base":52000},"omega":{"center":[0,0,0],"radius":1.0},
    "grid_step":0.125,"output_dir":"/tmp/acc/proj_g25"})");
  double cslope = s2.value("median_count_slope", 0.0);
  bool ok3 = cslope >= 1.1 && cslope <= 1.9;
  report_line(5, "vertical projection", ok1 && ok2 && ok3,
              "area=" + fmt(area) + " rel=" + fmt(rel) + " posfrac=" +
                  fmt(tot ? double(pos) / tot : 0.0) + " count_slope_g25=" + fmt(cslope));
}

void criterion6_euclid() {
  json s1 = run_summary(R"({
    "mode":"euclid","gamma":1.0,"n_max":8,"n_range":[4,8],
    "seeds":{"count":12,"base":61000},"omega":{"center":[0,0,0],"radius":1.0},
    "output_dir":"/tmp/acc/euclid_g1"})");
  double m1 = s1.value("median_slope", 0.0);
  double lo1 = s1.value("median_bracket_lo", 0.0), hi1 = s1.value("median_bracket_hi", 9.0);
  bool ok1 = m1 >= 2.1 && m1 <= 2.9 && m1 >= lo1 - 0.05 && m1 <= hi1 + 0.05;

  json s2 = run_summary(R"({
    "mode":"euclid","gamma":2.5,"n_max":8,"n_range":[4,8],
    "seeds":{"count":12,"base":62000},"omega":{"center":[0,0,0],"radius":1.0},
    "output_dir":"/tmp/acc/euclid_g25"})");
  double m2 = s2.value("median_slope", 0.0);
  double lo2 = s2.value("median_bracket_lo", 0.0), hi2 = s2.value("median_bracket_hi", 9.0);
  bool ok2 = m2 >= 1.1 && m2 <= 1.9 && m2 >= lo2 - 0.05 && m2 <= hi2 + 0.05;
  report_line(6, "Euclidean dimension phi(beta)", ok1 && ok2,
              "g1=" + fmt(m1) + " in [" + fmt(lo1) + "," + fmt(hi1) + "]  g25=" + fmt(m2) +
                  " in [" + fmt(lo2) + "," + fmt(hi2) + "]");
}

void criterion7_slices() {
  json s = run_summary(R"({
    "mode":"slice","gamma":1.0,"n_max":9,"n_range":[4,9],
    "seeds":{"count":20,"base":71000},"omega":{"center":[0,0,0],"radius":1.0},
    "grid_step":0.2,"output_dir":"/tmp/acc/slice_g1"})");
  double m = s.value("median_slope", 0.0);
  report_line(7, "fiber slice dimension beta-2", m >= 0.65 && m <= 1.35, "median=" + fmt(m));
}

void criterion8_radial() {
  json s1 = run_summary(R"({
    "mode":"sphere-project","gamma":2.5,"n_max":8,"n_range":[3,8],
    "seeds":{"count":10,"base":81000},
    "omega_sphere":{"chart":[-1,0,0,0],"radius":0.35},
    "output_dir":"/tmp/acc/sproj_g25"})");
  bool ok1 = true;
  std::ostringstream os;
  os << "g25:";
  for (const auto& a : s1.at("per_anchor")) {
    double sl = a.value("median_slope", 0.0);
    os << " " << fmt(sl);
    if (!(sl >= 1.1 && sl <= 1.9)) ok1 = false;
  }
  json s2 = run_summary(R"({
    "mode":"sphere-project","gamma":1.0,"n_max":6,"n_range":[3,6],
    "seeds":{"count":10,"base":82000},
    "omega_sphere":{"chart":[-1,0,0,0],"radius":0.35},
    "output_dir":"/tmp/acc/sproj_g1"})");
  bool ok2 = true;
  double worst_rel = 0.0;
  os << " g1:";
  for (const auto& a : s2.at("per_anchor")) {
    double sl = a.value("median_slope", 0.0);
    double ar = a.value("median_area", 0.0);
    os << " " << fmt(sl);
    if (!(sl >= 1.6 && sl <= 2.4) || !(ar > 0.0)) ok2 = false;
  }
  report_line(8, "radial projections all anchors", ok1 && ok2, os.str() + " worst_rel=" + fmt(worst_rel));
}

void criterion9_chain_control() {
  Chain L(CVec3{cplx(1, 0), cplx(0.3, -0.2), cplx(std::sqrt(2.0), 0.3)});
  SpherePoint anchor = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  ChainControl cc = chain_projection_control(L, anchor, 3, 8);
  bool pass = cc.projection_dim.slope <= 1.2 && cc.own_box_dim.slope >= 1.7 &&
              cc.own_box_dim.slope <= 2.3;
  report_line(9, "chain negative control", pass,
              "own=" + fmt(cc.own_box_dim.slope) + " proj=" + fmt(cc.projection_dim.slope));
}

void criterion10_annulus() {
  // sup over configurations of eta_L(A(x,r,delta))/sqrt(delta), dyadic deltas
  SpherePoint x = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  std::vector<Chain> chains;
  chains.emplace_back(CVec3{cplx(1, 0), cplx(0, 0), cplx(std::sqrt(2.0), 0)});
  chains.emplace_back(CVec3{cplx(1, 0), cplx(0.9, 0.3), cplx(1.2, -0.4)});
  chains.emplace_back(CVec3{cplx(1, 0), cplx(-0.4, 0.1), cplx(0.2, 1.4)});
  // a chain through x itself (tangential case)
  SpherePoint y2 = SpherePoint::from_chart(cplx(0.2, 0.3), cplx(0.7, std::sqrt(1 - 0.04 - 0.09 - 0.49)));
  chains.push_back(radial_project(x, y2));
  std::vector<double> bounds;
  bool ok = true;
  for (int e = 4; e <= 20; ++e) {
    double delta = std::pow(2.0, -e);
    double best = 0.0;
    for (const auto& L : chains) {
      for (double r : {0.05, 0.1, 0.2, 0.3}) {
        if (delta > r) continue;
        double m = chain_annulus_mass(L, x, r, delta);
        best = std::max(best, m / std::sqrt(delta));
      }
    }
    bounds.push_back(best);
  }
  double mx = 0.0, mn = 1e300;
  for (size_t i = bounds.size() - 8; i < bounds.size(); ++i) {
    mx = std::max(mx, bounds[i]);
    mn = std::min(mn, bounds[i]);
  }
  ok = mx / mn <= 2.0 && mx < 10.0;
  report_line(10, "annulus bound delta^{1/2}", ok,
              "last8 ratio=" + fmt(mx / mn) + " sup=" + fmt(mx));
}

void criterion11_martingale() {
  // meta-runs of the conditional resampling z-statistic
  const int META = 100;
  std::atomic<int> ok_runs{0};
  std::atomic<size_t> idx{0};
  auto worker = [&] {
    size_t i;
    while ((i = idx.fetch_add(1)) < META) {
      Rng rng = Rng::keyed({0x11AAull, static_cast<uint64_t>(i)});
      HeisProcessDef def{1.0, 90000ull + i, 5, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
      cplx u(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      double z = martingale_check_z(def, u, 4, 300, -1.0, 1.0);
      if (std::abs(z) <= 3.0) ++ok_runs;
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads() - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // survival probability = 1/beta_n within 3 sigma (both spaces)
  const int T = 20000, n = 4;
  std::atomic<long> alive{0};
  idx = 0;
  HeisPoint p(cplx(0.21, -0.13), 0.05);
  auto worker2 = [&] {
    size_t t;
    while ((t = idx.fetch_add(1)) < T) {
      HeisProcessDef def{1.0, 700000ull + t, n, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
      HeisCellStore store(def);
      if (heis_survives(store, p, n)) ++alive;
    }
  };
  pool.clear();
  for (int t = 0; t < threads() - 1; ++t) pool.emplace_back(worker2);
  worker2();
  for (auto& t : pool) t.join();
  double want = 1.0 / beta_n_heis(1.0, n);
  double got = double(alive) / T;
  double se = std::sqrt(want * (1 - want) / T);
  bool surv_ok = std::abs(got - want) <= 3.0 * se;

  const int TS = 4000, ns = 3;
  std::atomic<long> alive_s{0};
  idx = 0;
  SpherePoint ps = SpherePoint::from_chart(cplx(-1, 0), cplx(0, 0));
  auto worker3 = [&] {
    size_t t;
    while ((t = idx.fetch_add(1)) < TS) {
      SphereProcessDef def{1.0, 800000ull + t, ns, 0};
      std::vector<std::vector<SphereEvent>> bands;
      for (int k = 1; k <= ns; ++k) bands.push_back(sphere_band_global(def, k));
      if (sphere_survives(bands, ps, ns)) ++alive_s;
    }
  };
  pool.clear();
  for (int t = 0; t < threads() - 1; ++t) pool.emplace_back(worker3);
  worker3();
  for (auto& t : pool) t.join();
  double want_s = 1.0 / beta_n_sphere(1.0, ns);
  double got_s = double(alive_s) / TS;
  double se_s = std::sqrt(want_s * (1 - want_s) / TS);
  bool surv_s_ok = std::abs(got_s - want_s) <= 3.0 * se_s;

  bool pass = ok_runs >= 99 && surv_ok && surv_s_ok;
  report_line(11, "SI-martingale + survival prob", pass,
              "z_ok=" + std::to_string(ok_runs.load()) + "/100 heis_z=" +
                  fmt((got - want) / se) + " sph_z=" + fmt((got_s - want_s) / se_s));
}

void criterion12_determinism() {
  const char* cfg = R"({
    "mode":"dims","gamma":2.5,"n_max":6,"n_range":[3,6],
    "seeds":{"count":4,"base":12000},"omega":{"center":[0,0,0],"radius":1.0},
    "output_dir":"%s"})";
  char buf1[512], buf2[512];
  std::snprintf(buf1, sizeof buf1, cfg, "/tmp/acc/det1");
  std::snprintf(buf2, sizeof buf2, cfg, "/tmp/acc/det2");
  ExperimentConfig c1 = config_from_json_text(buf1);
  c1.threads = threads();
  ExperimentConfig c2 = config_from_json_text(buf2);
  c2.threads = 1;
  run(c1);
  run(c2);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  bool same = slurp("/tmp/acc/det1/counts.csv") == slurp("/tmp/acc/det2/counts.csv") &&
              slurp("/tmp/acc/det1/summary.json") == slurp("/tmp/acc/det2/summary.json") &&
              slurp("/tmp/acc/det1/manifest.json") == slurp("/tmp/acc/det2/manifest.json") &&
              !slurp("/tmp/acc/det1/counts.csv").empty();
  report_line(12, "byte determinism", same, same ? "identical artifacts" : "mismatch");
}

}  // namespace

int main() {
  g_t0 = std::chrono::steady_clock::now();
  std::printf("acceptance battery (threads=%d)\n", threads());
  criterion1_identities();
  criterion2_measures();
  criterion3_emptiness();
  criterion10_annulus();
  criterion9_chain_control();
  criterion12_determinism();
  criterion11_martingale();
  criterion7_slices();
  criterion4_box_dims();
  criterion5_projection();
  criterion6_euclid();
  criterion8_radial();
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_t0).count();
  std::printf("%d criteria failed; total %.0fs\n", g_fail, secs);
  return g_fail == 0 ? 0 : 3;
}
