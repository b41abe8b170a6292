#include "cutlab/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "cutlab/estimators.hpp"
#include "json.hpp"

namespace cutlab {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- config -------------------------------------------------------------------

RunMode parse_mode(const std::string& name) {
  if (name == "dims") return RunMode::Dims;
  if (name == "project") return RunMode::Project;
  if (name == "slice") return RunMode::Slice;
  if (name == "euclid") return RunMode::Euclid;
  if (name == "sphere-dims") return RunMode::SphereDims;
  if (name == "sphere-project") return RunMode::SphereProject;
  if (name == "selftest") return RunMode::Selftest;
  if (name == "report") return RunMode::Report;
  throw std::invalid_argument("mode: unknown value '" + name + "'");
}

std::string mode_name(RunMode m) {
  switch (m) {
    case RunMode::Dims: return "dims";
    case RunMode::Project: return "project";
    case RunMode::Slice: return "slice";
    case RunMode::Euclid: return "euclid";
    case RunMode::SphereDims: return "sphere-dims";
    case RunMode::SphereProject: return "sphere-project";
    case RunMode::Selftest: return "selftest";
    case RunMode::Report: return "report";
  }
  return "?";
}

std::vector<uint64_t> ExperimentConfig::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<uint64_t> out;
  for (int i = 0; i < seed_count; ++i) out.push_back(seed_base + static_cast<uint64_t>(i));
  return out;
}

HeisRegion ExperimentConfig::omega_heis() const {
  HeisRegion r;
  r.center = HeisPoint(cplx(omega_center[0], omega_center[1]), omega_center[2]);
  r.radius = omega_radius;
  return r;
}

SpherePoint ExperimentConfig::omega_sphere_center() const {
  return SpherePoint::from_chart(cplx(omega_sphere_chart[0], omega_sphere_chart[1]),
                                 cplx(omega_sphere_chart[2], omega_sphere_chart[3]));
}

std::vector<SpherePoint> ExperimentConfig::anchor_points() const {
  std::vector<SpherePoint> out;
  if (!anchors.empty()) {
    for (const auto& a : anchors)
      out.push_back(SpherePoint::from_chart(cplx(a[0], a[1]), cplx(a[2], a[3])));
    return out;
  }
  // default: nine anchors spread over a small ball around [1:1:0]
  out.push_back(SpherePoint::from_chart(cplx(1, 0), cplx(0, 0)));
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < 4; ++i) {
    double chi = i * pi / 2.0;
    out.push_back(SpherePoint::from_chart(cplx(std::cos(0.28), 0),
                                          std::polar(std::sin(0.28), chi)));
  }
  for (int i = 0; i < 4; ++i) {
    double chi = pi / 4.0 + i * pi / 2.0;
    out.push_back(SpherePoint::from_chart(cplx(std::cos(0.45), 0),
                                          std::polar(std::sin(0.45), chi)));
  }
  return out;
}

void validate(const ExperimentConfig& c) {
  if (!(c.gamma > 0.0)) throw std::invalid_argument("gamma: must be > 0");
  if (!(c.gamma < 4.0) && !c.emptiness_test)
    throw std::invalid_argument("gamma: must be in (0,4) unless emptiness_test is set");
  if (c.n_max < 1 || c.n_max > 20) throw std::invalid_argument("n_max: must be in [1,20]");
  if (c.n_lo < 1 || c.n_hi > c.n_max || c.n_lo > c.n_hi)
    throw std::invalid_argument("n_range: need 1 <= n_lo <= n_hi <= n_max");
  if (c.seeds.empty() && c.seed_count < 1)
    throw std::invalid_argument("seeds: need a list or a positive count");
  if (!(c.omega_radius > 0.0)) throw std::invalid_argument("omega.radius: must be > 0");
  if (!(c.grid_step > 0.0)) throw std::invalid_argument("grid_step: must be > 0");
  if (c.window_hi <= c.window_lo) throw std::invalid_argument("window: hi must exceed lo");
  if (c.mode == RunMode::Report && c.report_inputs.empty())
    throw std::invalid_argument("report: needs at least one manifest");
}

static ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
  if (j.contains("space")) c.space = j.at("space").get<std::string>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<double>();
  if (j.contains("n_max")) c.n_max = j.at("n_max").get<int>();
  if (j.contains("n_range")) {
    c.n_lo = j.at("n_range").at(0).get<int>();
    c.n_hi = j.at("n_range").at(1).get<int>();
  }
  if (j.contains("seeds")) {
    const auto& s = j.at("seeds");
    if (s.is_array())
      for (const auto& v : s) c.seeds.push_back(v.get<uint64_t>());
    else {
      if (s.contains("count")) c.seed_count = s.at("count").get<int>();
      if (s.contains("base")) c.seed_base = s.at("base").get<uint64_t>();
    }
  }
  if (j.contains("omega")) {
    const auto& o = j.at("omega");
    if (o.contains("center"))
      for (int i = 0; i < 3; ++i) c.omega_center[i] = o.at("center").at(i).get<double>();
    if (o.contains("radius")) c.omega_radius = o.at("radius").get<double>();
  }
  if (j.contains("omega_sphere")) {
    const auto& o = j.at("omega_sphere");
    if (o.contains("chart"))
      for (int i = 0; i < 4; ++i) c.omega_sphere_chart[i] = o.at("chart").at(i).get<double>();
    if (o.contains("radius")) c.omega_sphere_radius = o.at("radius").get<double>();
  }
  if (j.contains("anchors"))
    for (const auto& a : j.at("anchors"))
      c.anchors.push_back({a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
                           a.at(3).get<double>()});
  if (j.contains("grid_step")) c.grid_step = j.at("grid_step").get<double>();
  if (j.contains("window")) {
    c.window_lo = j.at("window").at("lo").get<double>();
    c.window_hi = j.at("window").at("hi").get<double>();
  }
  if (j.contains("fibers"))
    for (const auto& f : j.at("fibers"))
      c.fibers.push_back({f.at(0).get<double>(), f.at(1).get<double>()});
  if (j.contains("threads")) c.threads = j.at("threads").get<int>();
  if (j.contains("children_per_parent"))
    c.children_per_parent = j.at("children_per_parent").get<int>();
  if (j.contains("budget_events")) c.budget_events = j.at("budget_events").get<double>();
  if (j.contains("emptiness_test")) c.emptiness_test = j.at("emptiness_test").get<bool>();
  if (j.contains("retry_cap_factor")) c.retry_cap_factor = j.at("retry_cap_factor").get<int>();
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("report_inputs"))
    for (const auto& p : j.at("report_inputs")) c.report_inputs.push_back(p.get<std::string>());
  return c;
}

ExperimentConfig config_from_json_text(const std::string& text) {
  return config_from_json(json::parse(text));
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  json j;
  in >> j;
  return config_from_json(j);
}

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string config_to_canonical_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = mode_name(c.mode);
  j["space"] = c.space;
  j["gamma"] = c.gamma;
  j["n_max"] = c.n_max;
  j["n_range"] = {c.n_lo, c.n_hi};
  if (!c.seeds.empty())
    j["seeds"] = c.seeds;
  else
    j["seeds"] = {{"count", c.seed_count}, {"base", c.seed_base}};
  j["omega"] = {{"center", {c.omega_center[0], c.omega_center[1], c.omega_center[2]}},
                {"radius", c.omega_radius}};
  j["omega_sphere"] = {{"chart",
                        {c.omega_sphere_chart[0], c.omega_sphere_chart[1],
                         c.omega_sphere_chart[2], c.omega_sphere_chart[3]}},
                       {"radius", c.omega_sphere_radius}};
  if (!c.anchors.empty()) {
    json a = json::array();
    for (const auto& x : c.anchors) a.push_back({x[0], x[1], x[2], x[3]});
    j["anchors"] = a;
  }
  j["grid_step"] = c.grid_step;
  j["window"] = {{"lo", c.window_lo}, {"hi", c.window_hi}};
  if (!c.fibers.empty()) {
    json f = json::array();
    for (const auto& x : c.fibers) f.push_back({x[0], x[1]});
    j["fibers"] = f;
  }
  j["children_per_parent"] = c.children_per_parent;
  j["budget_events"] = c.budget_events;
  j["emptiness_test"] = c.emptiness_test;
  j["retry_cap_factor"] = c.retry_cap_factor;
  return j.dump();
}

uint64_t config_hash(const ExperimentConfig& c) {
  std::string s = config_to_canonical_json(c);
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string config_hash_hex(const ExperimentConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(c)));
  return buf;
}

// ---- output helpers -------------------------------------------------------------

namespace {

void write_atomic(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
  }
  fs::rename(tmp, path);
}

template <class F>
void parallel_for(int n, int threads, F&& f) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> idx{0};
  auto worker = [&] {
    int i;
    while ((i = idx.fetch_add(1)) < n) f(i);
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads - 1; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

int resolve_threads(const ExperimentConfig& c) {
  if (c.threads > 0) return c.threads;
  if (const char* env = std::getenv("CUTOUT_LAB_THREADS")) {
    int t = std::atoi(env);
    if (t > 0) return t;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double quantile_of(std::vector<double> v, double q) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  double pos = q * (v.size() - 1);
  size_t lo = static_cast<size_t>(pos);
  size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

json fit_to_json(const ScalingFit& f) {
  json j;
  j["slope"] = f.slope;
  j["intercept"] = f.intercept;
  j["stderr"] = f.stderr_slope;
  j["range"] = {f.n_lo, f.n_hi};
  return j;
}

struct SeedTask {
  uint64_t seed;
  bool want_sensitivity = false;
  std::string status = "survived";
  std::string detail;
  json record;                      // per-seed fit record
  std::vector<std::string> csv_rows;  // rows for the shared CSV
  std::vector<std::string> field_rows;
};

}  // namespace

// ---- per-mode seed work -----------------------------------------------------------

namespace {

void run_dims_seed(const ExperimentConfig& c, SeedTask& t) {
  HeisProcessDef def{c.gamma, t.seed, c.n_hi, HeisRegion{c.omega_heis().center,
                                                         c.omega_heis().radius + 1.0}};
  HeisCellStore store(def);
  BoxWalkParams p;
  p.n_lo = c.n_lo;
  p.n_hi = c.n_hi;
  p.omega = c.omega_heis();
  SandwichCounts counts = count_surviving_boxes(store, p);
  for (int n = c.n_lo; n <= c.n_hi; ++n) {
    std::ostringstream row;
    row << t.seed << "," << n << "," << counts.inner_at(n) << "," << counts.outer_at(n);
    t.csv_rows.push_back(row.str());
  }
  std::vector<std::pair<int, double>> in_pts, out_pts;
  for (int n = c.n_lo; n <= c.n_hi; ++n) {
    if (counts.inner_at(n) > 0) in_pts.emplace_back(n, double(counts.inner_at(n)));
    if (counts.outer_at(n) > 0) out_pts.emplace_back(n, double(counts.outer_at(n)));
  }
  t.record["seed"] = t.seed;
  if (counts.outer_at(c.n_hi) == 0 || out_pts.size() < 3) {
    t.status = "extinct";
    return;
  }
  t.record["outer"] = fit_to_json(fit_dimension(out_pts));
  if (in_pts.size() >= 3) t.record["inner"] = fit_to_json(fit_dimension(in_pts));
  if (t.want_sensitivity) {
    // margin sensitivity of the outer slope at C/2 and 2C, shallow range
    json sens;
    for (double factor : {0.5, 2.0}) {
      BoxWalkParams sp = p;
      sp.margin = factor * box_diameter_bound(0);
      sp.n_hi = std::min(c.n_hi, std::max(c.n_lo + 2, 5));
      SandwichCounts sc = count_surviving_boxes(store, sp);
      std::vector<std::pair<int, double>> pts;
      for (int n = sp.n_lo; n <= sp.n_hi; ++n)
        if (sc.outer_at(n) > 0) pts.emplace_back(n, double(sc.outer_at(n)));
      if (pts.size() >= 3)
        sens[factor == 0.5 ? "half_margin_outer_slope" : "double_margin_outer_slope"] =
            fit_dimension(pts).slope;
    }
    t.record["margin_sensitivity"] = sens;
  }
}

void run_project_seed(const ExperimentConfig& c, SeedTask& t) {
  HeisProcessDef def{c.gamma, t.seed, c.n_hi, HeisRegion{c.omega_heis().center,
                                                         c.omega_heis().radius + 1.0}};
  HeisCellStore store(def);
  json levels = json::array();
  double area_top = 0.0, area_prev = 0.0;
  for (int n = c.n_lo; n <= c.n_hi; ++n) {
    double step = (n == c.n_hi) ? c.grid_step : 0.0;
    ProjectionCounts pc =
        projection_counts(store, n, c.omega_heis(), step, c.window_lo, c.window_hi);
    std::ostringstream row;
    row << t.seed << "," << n << "," << pc.count_inner << "," << pc.count_outer << ","
        << fmt_g17(pc.area_inner) << "," << fmt_g17(pc.area_outer);
    t.csv_rows.push_back(row.str());
    json lv;
    lv["n"] = n;
    lv["count_outer"] = pc.count_outer;
    lv["count_inner"] = pc.count_inner;
    lv["area_outer"] = pc.area_outer;
    levels.push_back(lv);
    if (n == c.n_hi) {
      area_top = pc.area_outer;
      for (size_t i = 0; i < pc.field.us.size(); ++i) {
        std::ostringstream frow;
        frow << t.seed << "," << fmt_g17(pc.field.us[i].real()) << ","
             << fmt_g17(pc.field.us[i].imag()) << "," << fmt_g17(pc.field.mass[i]);
        t.field_rows.push_back(frow.str());
      }
      HolderModulus hm = holder_modulus(pc.field);
      t.record["holder_flat"] = hm.flat;
      t.record["holder_exponent"] = hm.exponent;
      long positive = 0;
      for (double m : pc.field.mass) positive += m > 0.0;
      t.record["field_positive"] = positive;
      t.record["field_total"] = pc.field.mass.size();
    }
    if (n == c.n_hi - 1) area_prev = pc.area_outer;
  }
  t.record["seed"] = t.seed;
  t.record["levels"] = levels;
  t.record["area_top"] = area_top;
  t.record["area_prev"] = area_prev;
  t.record["area_rel_change"] =
      (area_prev > 0.0) ? std::abs(area_top - area_prev) / area_prev : std::nan("");
  if (area_top <= 0.0) t.status = "extinct";
  // projection count fit over the levels
  std::vector<std::pair<int, double>> pts;
  for (const auto& lv : levels)
    if (lv.at("count_outer").get<long long>() > 0)
      pts.emplace_back(lv.at("n").get<int>(), lv.at("count_outer").get<double>());
  if (pts.size() >= 3) t.record["count_fit"] = fit_to_json(fit_dimension(pts));
}

void run_slice_seed(const ExperimentConfig& c, SeedTask& t) {
  HeisProcessDef def{c.gamma, t.seed, c.n_hi, HeisRegion{c.omega_heis().center,
                                                         c.omega_heis().radius + 1.0}};
  HeisCellStore store(def);
  std::vector<cplx> fibers;
  if (!c.fibers.empty()) {
    for (const auto& f : c.fibers) fibers.emplace_back(f[0], f[1]);
  } else {
    // fibers with positive mass on a coarse grid, capped
    int m = static_cast<int>(std::floor(c.omega_radius / c.grid_step));
    for (int i = -m; i <= m && fibers.size() < 24; ++i)
      for (int j = -m; j <= m && fibers.size() < 24; ++j) {
        cplx u = c.omega_heis().center.u + cplx(i * c.grid_step, j * c.grid_step);
        if (std::abs(u - c.omega_heis().center.u) > 0.8 * c.omega_radius) continue;
        if (fiber_mass(store, u, c.n_hi, c.window_lo, c.window_hi) > 0.0) fibers.push_back(u);
      }
  }
  json rows = json::array();
  std::vector<double> slopes;
  for (const cplx& u : fibers) {
    try {
      ScalingFit f = fiber_dim(store, u, c.n_lo, c.n_hi, c.window_lo, c.window_hi);
      slopes.push_back(f.slope);
      std::ostringstream row;
      row << t.seed << "," << fmt_g17(u.real()) << "," << fmt_g17(u.imag()) << ","
          << fmt_g17(f.slope) << "," << fmt_g17(f.stderr_slope);
      t.csv_rows.push_back(row.str());
      json r;
      r["u"] = {u.real(), u.imag()};
      r["slope"] = f.slope;
      rows.push_back(r);
    } catch (const std::exception&) {
      // extinct fiber: skipped
    }
  }
  t.record["seed"] = t.seed;
  t.record["fibers"] = rows;
  if (slopes.empty()) {
    t.status = "extinct";
    return;
  }
  t.record["median_slope"] = median_of(slopes);
}

void run_euclid_seed(const ExperimentConfig& c, SeedTask& t) {
  HeisProcessDef def{c.gamma, t.seed, c.n_hi, HeisRegion{c.omega_heis().center,
                                                         c.omega_heis().radius + 1.0}};
  HeisCellStore store(def);
  EuclidDim ed = euclid_box_dim(store, c.n_lo, c.n_hi, c.omega_heis(),
                                hash_key({t.seed, 0xE5ull}));
  t.record["seed"] = t.seed;
  if (ed.extinct) {
    t.status = "extinct";
    return;
  }
  t.record["headline"] = fit_to_json(ed.headline);
  json br = json::array();
  double blo = 1e300, bhi = -1e300;
  for (const auto& b : ed.brackets) {
    br.push_back(fit_to_json(b));
    blo = std::min(blo, b.slope);
    bhi = std::max(bhi, b.slope);
  }
  t.record["brackets"] = br;
  if (!ed.brackets.empty()) {
    t.record["bracket_lo"] = blo;
    t.record["bracket_hi"] = bhi;
  }
  std::ostringstream row;
  row << t.seed << "," << fmt_g17(ed.headline.slope) << ","
      << fmt_g17(ed.brackets.empty() ? std::nan("") : blo) << ","
      << fmt_g17(ed.brackets.empty() ? std::nan("") : bhi);
  t.csv_rows.push_back(row.str());
}

SphereRefineParams sphere_params(const ExperimentConfig& c, uint64_t seed) {
  SphereRefineParams prm;
  prm.def = SphereProcessDef{c.gamma, seed, std::max(c.n_max, c.n_hi), 0};
  prm.omega_center = c.omega_sphere_center();
  prm.omega_radius = c.omega_sphere_radius;
  prm.n_lo = c.n_lo;
  prm.n_hi = c.n_hi;
  prm.children_per_parent = c.children_per_parent;
  prm.est_seed = hash_key({seed, 0x5FEull});
  return prm;
}

void run_sphere_dims_seed(const ExperimentConfig& c, SeedTask& t) {
  SphereRefineParams prm = sphere_params(c, t.seed);
  // two chart anchors for the chart-independence diagnostic
  SpherePoint a1 = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  SpherePoint a2 = SpherePoint::from_chart(cplx(0, 0), cplx(0, 1));
  SphereDims d1 = sphere_box_dim(prm, a1);
  t.record["seed"] = t.seed;
  if (d1.extinct) {
    t.status = "extinct";
    return;
  }
  SphereDims d2 = sphere_box_dim(prm, a2);
  t.record["outer"] = fit_to_json(d1.outer);
  if (!d1.inner.points.empty()) t.record["inner"] = fit_to_json(d1.inner);
  if (!d2.extinct) t.record["outer_alt_chart"] = fit_to_json(d2.outer);
  for (const auto& [n, logc] : d1.outer.points) {
    std::ostringstream row;
    row << t.seed << "," << n << "," << fmt_g17(std::pow(2.0, logc));
    t.csv_rows.push_back(row.str());
  }
}

void run_sphere_project_seed(const ExperimentConfig& c, SeedTask& t) {
  auto anchors = c.anchor_points();
  t.record["seed"] = t.seed;
  json arr = json::array();
  bool extinct = false;
  // one refinement per anchor set is wasteful; run once per seed by moving
  // the projections into the level callback
  SphereRefineParams prm = sphere_params(c, t.seed);
  std::vector<std::vector<std::pair<int, double>>> pts(anchors.size());
  std::vector<double> area_top(anchors.size(), 0.0), area_prev(anchors.size(), 0.0);
  auto counts = sphere_refine(prm, [&](const SphereLevelView& lv) {
    for (size_t a = 0; a < anchors.size(); ++a) {
      std::vector<CVec3> images;
      for (size_t i = 0; i < lv.pts.size(); ++i) {
        if (lv.outer[i] != 1) continue;
        images.push_back(radial_project(anchors[a], lv.pts[i]).w);
      }
      if (images.empty()) continue;
      long long cnt = p1_net_count(anchors[a], images, std::pow(2.0, -lv.level));
      pts[a].emplace_back(lv.level, double(cnt));
      double area = cnt * std::pow(4.0, -lv.level);
      if (lv.level == prm.n_hi) area_top[a] = area;
      if (lv.level == prm.n_hi - 1) area_prev[a] = area;
      std::ostringstream row;
      row << t.seed << "," << a << "," << lv.level << "," << cnt;
      t.csv_rows.push_back(row.str());
    }
  });
  extinct = counts.extinct;
  for (size_t a = 0; a < anchors.size(); ++a) {
    json rec;
    rec["anchor"] = a;
    if (pts[a].size() >= 3) {
      rec["fit"] = fit_to_json(fit_dimension(pts[a]));
      rec["area_top"] = area_top[a];
      rec["area_prev"] = area_prev[a];
    }
    arr.push_back(rec);
  }
  t.record["anchors"] = arr;
  if (extinct) t.status = "extinct";
}

void run_seed_dispatch(const ExperimentConfig& c, SeedTask& t) {
  switch (c.mode) {
    case RunMode::Dims: run_dims_seed(c, t); break;
    case RunMode::Project: run_project_seed(c, t); break;
    case RunMode::Slice: run_slice_seed(c, t); break;
    case RunMode::Euclid: run_euclid_seed(c, t); break;
    case RunMode::SphereDims: run_sphere_dims_seed(c, t); break;
    case RunMode::SphereProject: run_sphere_project_seed(c, t); break;
    default: throw std::logic_error("run_seed_dispatch: not a batch mode");
  }
}

std::string csv_header_for(RunMode m) {
  switch (m) {
    case RunMode::Dims: return "seed,n,inner,outer";
    case RunMode::Project: return "seed,n,count_inner,count_outer,area_inner,area_outer";
    case RunMode::Slice: return "seed,u_re,u_im,slope,stderr";
    case RunMode::Euclid: return "seed,headline_slope,bracket_lo,bracket_hi";
    case RunMode::SphereDims: return "seed,n,outer_boxes";
    case RunMode::SphereProject: return "seed,anchor,n,net_count";
    default: return "";
  }
}

}  // namespace

RunManifest run(const ExperimentConfig& c) {
  validate(c);
  RunManifest mf;
  mf.config_hash = config_hash_hex(c);
  mf.mode = mode_name(c.mode);
  fs::create_directories(c.output_dir);
  auto t_start = std::chrono::steady_clock::now();

  if (c.mode == RunMode::Selftest) {
    auto results = selftest(false, false);
    std::ostringstream body;
    body << "# config=" << mf.config_hash << "\n";
    body << "suite,pass,detail\n";
    bool all = true;
    for (const auto& r : results) {
      body << r.suite << "," << (r.pass ? 1 : 0) << "," << r.detail << "\n";
      all = all && r.pass;
    }
    std::string path = c.output_dir + "/selftest.csv";
    write_atomic(path, body.str());
    mf.artifacts.push_back(path);
    mf.outcomes.push_back({0, all ? "survived" : "error", all ? "" : "selftest failure"});
    mf.summary_path = path;
  } else if (c.mode == RunMode::Report) {
    mf.summary_path = report(c.report_inputs, c.output_dir);
    mf.artifacts.push_back(mf.summary_path);
  } else {
    // batch modes with seed rejection for extinction (unless testing emptiness)
    std::vector<uint64_t> seeds = c.seed_list();
    bool reject_extinct = !c.emptiness_test && c.seeds.empty();
    int want = static_cast<int>(seeds.size());
    int cap = want * std::max(1, c.retry_cap_factor);
    std::vector<SeedTask> done;
    int next_index = 0;
    int attempts = 0;
    int threads = resolve_threads(c);
    while (static_cast<int>(done.size()) < want && attempts < cap) {
      int batch = std::min(want - static_cast<int>(done.size()), cap - attempts);
      std::vector<SeedTask> tasks(batch);
      for (int i = 0; i < batch; ++i) {
        tasks[i].seed = c.seeds.empty() ? c.seed_base + static_cast<uint64_t>(next_index + i)
                                        : seeds[next_index + i];
        tasks[i].want_sensitivity = (c.mode == RunMode::Dims && next_index + i == 0);
      }
      parallel_for(batch, threads, [&](int i) {
        try {
          run_seed_dispatch(c, tasks[i]);
        } catch (const std::exception& e) {
          tasks[i].status = "error";
          tasks[i].detail = e.what();
        }
      });
      next_index += batch;
      attempts += batch;
      for (auto& t : tasks) {
        mf.outcomes.push_back({t.seed, t.status, t.detail});
        if (t.status == "survived" || !reject_extinct) done.push_back(std::move(t));
        if (static_cast<int>(done.size()) >= want) break;
      }
      if (!c.seeds.empty()) break;  // explicit list: one pass only
    }
    std::sort(done.begin(), done.end(),
              [](const SeedTask& a, const SeedTask& b) { return a.seed < b.seed; });
    std::sort(mf.outcomes.begin(), mf.outcomes.end(),
              [](const SeedOutcome& a, const SeedOutcome& b) { return a.seed < b.seed; });

    // shared CSV
    std::ostringstream csv;
    csv << "# config=" << mf.config_hash << "\n" << csv_header_for(c.mode) << "\n";
    for (const auto& t : done)
      for (const auto& row : t.csv_rows) csv << row << "\n";
    std::string csv_path = c.output_dir + "/counts.csv";
    write_atomic(csv_path, csv.str());
    mf.artifacts.push_back(csv_path);

    if (c.mode == RunMode::Project) {
      std::ostringstream field;
      field << "# config=" << mf.config_hash << "\nseed,u_re,u_im,mass\n";
      for (const auto& t : done)
        for (const auto& row : t.field_rows) field << row << "\n";
      std::string fpath = c.output_dir + "/field.csv";
      write_atomic(fpath, field.str());
      mf.artifacts.push_back(fpath);
    }

    // summary
    json summary;
    summary["config_hash"] = mf.config_hash;
    summary["mode"] = mode_name(c.mode);
    summary["gamma"] = c.gamma;
    summary["seed_count"] = done.size();
    long extinct = 0, errors = 0;
    for (const auto& o : mf.outcomes) {
      extinct += o.status == "extinct";
      errors += o.status == "error";
    }
    summary["extinct_attempts"] = extinct;
    summary["error_attempts"] = errors;
    summary["attempts"] = mf.outcomes.size();
    summary["extinct_fraction"] =
        mf.outcomes.empty() ? 0.0 : double(extinct) / double(mf.outcomes.size());
    json per_seed = json::array();
    for (const auto& t : done) per_seed.push_back(t.record);
    summary["per_seed"] = per_seed;

    auto collect = [&](const char* path1, const char* path2) {
      std::vector<double> v;
      for (const auto& t : done) {
        if (!t.record.contains(path1)) continue;
        const json& a = t.record.at(path1);
        if (path2[0] == 0) {
          if (a.is_number()) v.push_back(a.get<double>());
        } else if (a.contains(path2)) {
          v.push_back(a.at(path2).get<double>());
        }
      }
      return v;
    };
    if (c.mode == RunMode::Dims || c.mode == RunMode::SphereDims) {
      auto vo = collect("outer", "slope");
      auto vi = collect("inner", "slope");
      if (!vo.empty()) {
        summary["median_outer_slope"] = median_of(vo);
        summary["iqr_outer_slope"] = {quantile_of(vo, 0.25), quantile_of(vo, 0.75)};
        summary["median_slope"] = 0.0;  // filled below
      }
      if (!vi.empty()) summary["median_inner_slope"] = median_of(vi);
      if (!vo.empty() && !vi.empty())
        summary["median_slope"] = 0.5 * (median_of(vo) + median_of(vi));
      else if (!vo.empty())
        summary["median_slope"] = median_of(vo);
    } else if (c.mode == RunMode::Project) {
      auto areas = collect("area_top", "");
      auto rel = collect("area_rel_change", "");
      auto holder = collect("holder_exponent", "");
      auto cf = collect("count_fit", "slope");
      if (!areas.empty()) summary["median_area"] = median_of(areas);
      if (!rel.empty()) summary["median_area_rel_change"] = median_of(rel);
      if (!holder.empty()) summary["median_holder_exponent"] = median_of(holder);
      if (!cf.empty()) summary["median_count_slope"] = median_of(cf);
    } else if (c.mode == RunMode::Slice) {
      auto sl = collect("median_slope", "");
      if (!sl.empty()) {
        summary["median_slope"] = median_of(sl);
        summary["iqr_slope"] = {quantile_of(sl, 0.25), quantile_of(sl, 0.75)};
      }
    } else if (c.mode == RunMode::Euclid) {
      auto h = collect("headline", "slope");
      auto lo = collect("bracket_lo", "");
      auto hi = collect("bracket_hi", "");
      if (!h.empty()) {
        summary["median_slope"] = median_of(h);
        summary["iqr_slope"] = {quantile_of(h, 0.25), quantile_of(h, 0.75)};
      }
      if (!lo.empty()) summary["median_bracket_lo"] = median_of(lo);
      if (!hi.empty()) summary["median_bracket_hi"] = median_of(hi);
    } else if (c.mode == RunMode::SphereProject) {
      // per-anchor medians
      size_t n_anchors = c.anchor_points().size();
      json per_anchor = json::array();
      for (size_t a = 0; a < n_anchors; ++a) {
        std::vector<double> sl, ar;
        for (const auto& t : done) {
          if (!t.record.contains("anchors")) continue;
          const json& arr = t.record.at("anchors");
          if (a < arr.size() && arr[a].contains("fit")) {
            sl.push_back(arr[a].at("fit").at("slope").get<double>());
            ar.push_back(arr[a].at("area_top").get<double>());
          }
        }
        json rec;
        rec["anchor"] = a;
        if (!sl.empty()) {
          rec["median_slope"] = median_of(sl);
          rec["median_area"] = median_of(ar);
        }
        per_anchor.push_back(rec);
      }
      summary["per_anchor"] = per_anchor;
    }

    std::string sum_path = c.output_dir + "/summary.json";
    write_atomic(sum_path, summary.dump(2) + "\n");
    mf.artifacts.push_back(sum_path);
    mf.summary_path = sum_path;
  }

  // manifest (byte-deterministic; wall-clock goes to the sidecar log)
  json mjson;
  mjson["config_hash"] = mf.config_hash;
  mjson["config"] = json::parse(config_to_canonical_json(c));
  mjson["mode"] = mf.mode;
  mjson["version"] = "cutout-lab 1.0.0";
  json outs = json::array();
  for (const auto& o : mf.outcomes)
    outs.push_back({{"seed", o.seed}, {"status", o.status}, {"detail", o.detail}});
  mjson["outcomes"] = outs;
  mjson["artifacts"] = mf.artifacts;
  std::string man_path = c.output_dir + "/manifest.json";
  write_atomic(man_path, mjson.dump(2) + "\n");

  auto t_end = std::chrono::steady_clock::now();
  double secs = std::chrono::duration<double>(t_end - t_start).count();
  std::ofstream log(c.output_dir + "/run.log", std::ios::app);
  log << mode_name(c.mode) << " config=" << mf.config_hash << " wall_clock_s=" << secs << "\n";
  return mf;
}

std::string report(const std::vector<std::string>& manifest_paths, const std::string& out_dir) {
  if (manifest_paths.empty()) throw std::invalid_argument("report: no manifests");
  json agg;
  std::string hash0, mode0;
  json rows = json::array();
  for (const auto& path : manifest_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    json m;
    in >> m;
    std::string mode = m.at("mode").get<std::string>();
    double gamma = m.at("config").at("gamma").get<double>();
    if (mode0.empty()) {
      mode0 = mode;
      agg["gamma"] = gamma;
    } else if (mode != mode0 || gamma != agg.at("gamma").get<double>()) {
      throw std::invalid_argument("report: incompatible configs (mode or gamma mismatch)");
    }
    // pull the summary next to the manifest
    fs::path dir = fs::path(path).parent_path();
    std::ifstream sin(dir / "summary.json");
    if (sin) {
      json s;
      sin >> s;
      rows.push_back(s);
    }
  }
  agg["mode"] = mode0;
  agg["runs"] = rows;
  std::vector<double> med;
  for (const auto& r : rows)
    if (r.contains("median_slope")) med.push_back(r.at("median_slope").get<double>());
  if (!med.empty()) {
    agg["median_slope"] = median_of(med);
    agg["iqr_slope"] = {quantile_of(med, 0.25), quantile_of(med, 0.75)};
  }
  fs::create_directories(out_dir);
  std::string path = out_dir + "/report.json";
  write_atomic(path, agg.dump(2) + "\n");
  return path;
}

}  // namespace cutlab
