#include "cutlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cutlab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double pow2(int e) { return std::pow(2.0, e); }
}  // namespace

ScalingFit fit_dimension(const std::vector<std::pair<int, double>>& counts) {
  std::vector<std::pair<int, double>> pts;
  for (const auto& [n, N] : counts) {
    if (!(N > 0.0)) throw std::invalid_argument("fit_dimension: nonpositive count");
    pts.emplace_back(n, std::log2(N));
  }
  if (pts.size() < 3) throw std::invalid_argument("fit_dimension: need at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += double(x) * x;
    sxy += x * y;
  }
  double m = static_cast<double>(pts.size());
  double denom = m * sxx - sx * sx;
  ScalingFit fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double rss = 0;
  for (const auto& [x, y] : pts) {
    double e = y - (fit.intercept + fit.slope * x);
    rss += e * e;
  }
  fit.stderr_slope = (pts.size() > 2)
                         ? std::sqrt(rss / (m - 2.0) / (sxx - sx * sx / m))
                         : 0.0;
  fit.n_lo = pts.front().first;
  fit.n_hi = pts.back().first;
  fit.points = pts;
  return fit;
}

// ---- fiber masses -------------------------------------------------------------

namespace {

void fiber_intervals_store(const HeisCellStore& store, cplx u, int k, double tlo, double thi,
                           std::vector<Interval>& out) {
  double hr = pow2(1 - k);
  store.for_each_near_fiber(k, u, hr, tlo, thi, [&](const HeisEvent& e) {
    double a2 = std::norm(u - e.z);
    double r2 = e.r * e.r;
    if (a2 > r2) return;
    double h = 0.5 * std::sqrt(std::max(0.0, r2 * r2 - a2 * a2));
    double tc = e.t + std::imag(std::conj(e.z) * u);
    out.emplace_back(tc - h, tc + h);
  });
}

void fiber_intervals_sample(const ProcessSample& s, cplx u, int k, std::vector<Interval>& out) {
  for (const auto& e : s.heis_bands[k - 1]) {
    double a2 = std::norm(u - e.z);
    double r2 = e.r * e.r;
    if (a2 > r2) continue;
    double h = 0.5 * std::sqrt(std::max(0.0, r2 * r2 - a2 * a2));
    double tc = e.t + std::imag(std::conj(e.z) * u);
    out.emplace_back(tc - h, tc + h);
  }
}

}  // namespace

double fiber_mass(const HeisCellStore& store, cplx u, int n, double win_lo, double win_hi) {
  std::vector<Interval> iv;
  for (int k = 1; k <= n; ++k) fiber_intervals_store(store, u, k, win_lo, win_hi, iv);
  double covered = covered_length(iv, win_lo, win_hi);
  return beta_n_heis(store.def().gamma, n) * (win_hi - win_lo - covered);
}

double fiber_mass(const ProcessSample& s, cplx u, int n, double win_lo, double win_hi) {
  std::vector<Interval> iv;
  for (int k = 1; k <= n && k <= static_cast<int>(s.heis_bands.size()); ++k)
    fiber_intervals_sample(s, u, k, iv);
  double covered = covered_length(iv, win_lo, win_hi);
  return beta_n_heis(s.gamma, n) * (win_hi - win_lo - covered);
}

double martingale_check_z(const HeisProcessDef& def, cplx u, int n, int trials, double win_lo,
                          double win_hi) {
  if (trials < 2) throw std::invalid_argument("martingale_check_z: trials too small");
  if (def.gamma <= 0.0) return 0.0;
  HeisCellStore base(def);
  std::vector<Interval> base_iv;
  for (int k = 1; k <= n; ++k) fiber_intervals_store(base, u, k, win_lo, win_hi, base_iv);
  std::vector<Interval> tmp = base_iv;
  double covered_n = covered_length(tmp, win_lo, win_hi);
  double xn = beta_n_heis(def.gamma, n) * (win_hi - win_lo - covered_n);

  double beta_next = beta_n_heis(def.gamma, n + 1);
  double sum = 0.0, sumsq = 0.0;
  for (int t = 0; t < trials; ++t) {
    HeisProcessDef rdef = def;
    rdef.stream_tag = hash_key({0xA5A5ull, static_cast<uint64_t>(t + 1)});
    HeisCellStore rs(rdef);
    std::vector<Interval> iv = base_iv;
    fiber_intervals_store(rs, u, n + 1, win_lo, win_hi, iv);
    double covered = covered_length(iv, win_lo, win_hi);
    double x = beta_next * (win_hi - win_lo - covered);
    sum += x;
    sumsq += x * x;
  }
  double mean = sum / trials;
  double var = std::max(0.0, sumsq / trials - mean * mean) * trials / (trials - 1.0);
  double se = std::sqrt(var / trials);
  if (se == 0.0) return 0.0;
  return (mean - xn) / se;
}

// ---- box dims -------------------------------------------------------------------

HeisBoxDim heis_box_dim(const HeisCellStore& store, int n_lo, int n_hi, const HeisRegion& omega) {
  BoxWalkParams p;
  p.n_lo = n_lo;
  p.n_hi = n_hi;
  p.omega = omega;
  SandwichCounts c = count_surviving_boxes(store, p);
  HeisBoxDim out;
  out.extinct = c.outer_at(n_hi) == 0;
  std::vector<std::pair<int, double>> in_pts, out_pts;
  for (int n = n_lo; n <= n_hi; ++n) {
    if (c.inner_at(n) > 0) in_pts.emplace_back(n, double(c.inner_at(n)));
    if (c.outer_at(n) > 0) out_pts.emplace_back(n, double(c.outer_at(n)));
  }
  if (out_pts.size() >= 3)
    out.outer = fit_dimension(out_pts);
  else
    out.extinct = true;
  if (in_pts.size() >= 3) out.inner = fit_dimension(in_pts);
  return out;
}

ProjectionCounts projection_counts(const HeisCellStore& store, int n, const HeisRegion& omega,
                                   double field_step, double win_lo, double win_hi) {
  BoxWalkParams p;
  p.n_lo = p.n_hi = n;
  p.omega = omega;
  p.want_projection = true;
  SandwichCounts c = count_surviving_boxes(store, p);
  ProjectionCounts out;
  out.count_outer = c.proj_outer;
  out.count_inner = c.proj_inner;
  double cell = std::pow(4.0, -n);
  out.area_outer = c.proj_outer * cell;
  out.area_inner = c.proj_inner * cell;
  if (field_step > 0.0) {
    out.field.n = n;
    out.field.grid_step = field_step;
    const cplx uc = omega.center.u;
    int m = static_cast<int>(std::floor(omega.radius / field_step));
    for (int i = -m; i <= m; ++i)
      for (int j = -m; j <= m; ++j) {
        cplx u = uc + cplx(i * field_step, j * field_step);
        if (std::abs(u - uc) > omega.radius) continue;
        out.field.us.push_back(u);
        out.field.mass.push_back(fiber_mass(store, u, n, win_lo, win_hi));
      }
  }
  return out;
}

ScalingFit fiber_dim(const HeisCellStore& store, cplx u, int n_lo, int n_hi, double win_lo,
                     double win_hi) {
  std::vector<Interval> iv;
  std::vector<std::pair<int, double>> pts;
  for (int k = 1; k <= n_hi; ++k) {
    fiber_intervals_store(store, u, k, win_lo, win_hi, iv);
    if (k < n_lo) continue;
    std::vector<Interval> copy = iv;
    covered_length(copy, win_lo, win_hi);  // sort+merge in place
    auto gaps = complement_gaps(copy, win_lo, win_hi);
    long long cells = cells_meeting_gaps(gaps, std::pow(4.0, -k));
    if (cells > 0) pts.emplace_back(k, double(cells));
  }
  if (pts.empty() || pts.back().first != n_hi)
    throw std::runtime_error("fiber_dim: extinct fiber");
  return fit_dimension(pts);
}

// ---- Euclidean-metric estimates ----------------------------------------------

namespace {

// Koranyi radius of a Euclidean delta-cube about its center at |u| = ucabs
double cube_kradius(double delta, double ucabs) {
  double hv = 0.7071067811865476 * delta;
  double vv = 0.5 * delta + ucabs * hv;
  return std::pow(hv * hv * hv * hv + 4.0 * vv * vv, 0.25);
}

struct ECtx {
  const HeisCellStore* store;
  double factor;  // margin multiplier (1.0 and 0.5 variants)
  int n_lo, n_hi;
  HeisRegion omega;
  std::vector<long long> inner, outer;
  long long probes = 0;
};

// band k joins the hierarchical gather once cubes resolve its radius scale;
// finer bands are treated as fully deflated for the outer count (still an
// upper bound) and are probed exactly for the inner count
int band_entry_level(int k) { return 2 * k; }

bool inner_probe(ECtx& ctx, const HeisPoint& center, int level, double m_in) {
  // true if some not-yet-entered band has an event within r + m_in
  for (int k = level; 2 * k > level && k >= 1; --k) {
    bool hit = false;
    ctx.store->for_each_near(k, center, pow2(1 - k) + m_in, [&](const HeisEvent& e) {
      if (hit) return;
      if (koranyi_dist(center, HeisPoint(e.z, e.t)) <= e.r + m_in) hit = true;
    });
    ++ctx.probes;
    if (hit) return true;
  }
  return false;
}

void euclid_walk(ECtx& ctx, int l, int64_t i, int64_t j, int64_t m, std::vector<HeisEvent> evs) {
  const double delta = pow2(-l);
  HeisPoint center(cplx((i + 0.5) * delta, (j + 0.5) * delta), (m + 0.5) * delta);
  double om = koranyi_dist(center, ctx.omega.center);
  double mbox = cube_kradius(delta, std::abs(center.u));
  if (om > ctx.omega.radius + 2.0 * mbox) return;

  // gather entering bands
  for (int k = 1; k <= l; ++k) {
    int entry = std::max(band_entry_level(k), 2);
    if (entry != l) continue;
    double reach = pow2(1 - k) + (ctx.factor + 1.0) * mbox;
    ctx.store->for_each_near(k, center, reach, [&](const HeisEvent& e) {
      evs.push_back(e);
    });
  }

  double m_cnt = ctx.factor * mbox;
  bool outer = true, inner = true, killed = false;
  std::vector<HeisEvent> keep;
  keep.reserve(evs.size());
  for (const auto& e : evs) {
    double d = koranyi_dist(center, HeisPoint(e.z, e.t));
    if (d <= e.r - (1.0 + ctx.factor) * mbox) {
      killed = true;
      break;
    }
    if (d <= e.r - m_cnt) outer = false;
    if (d <= e.r + m_cnt) inner = false;
    if (d <= e.r + (1.0 + ctx.factor) * mbox) keep.push_back(e);
  }
  if (killed) return;
  if (l >= ctx.n_lo && l <= ctx.n_hi && om <= ctx.omega.radius + mbox) {
    if (outer) ++ctx.outer[l - ctx.n_lo];
    if (inner && !inner_probe(ctx, center, l, m_cnt)) ++ctx.inner[l - ctx.n_lo];
  }
  if (l >= ctx.n_hi) return;
  for (int d = 0; d < 8; ++d)
    euclid_walk(ctx, l + 1, 2 * i + (d & 1), 2 * j + ((d >> 1) & 1), 2 * m + ((d >> 2) & 1), keep);
}

std::vector<ScalingFit> euclid_cube_brackets(const HeisCellStore& store, int n_lo, int n_hi,
                                             const HeisRegion& omega) {
  std::vector<ScalingFit> fits;
  for (double factor : {1.0, 0.5}) {
    ECtx ctx{&store, factor, n_lo, n_hi, omega, {}, {}, 0};
    ctx.inner.assign(n_hi - n_lo + 1, 0);
    ctx.outer.assign(n_hi - n_lo + 1, 0);
    const int l0 = 2;
    const double d0 = pow2(-l0);
    double R = omega.radius + 1.0;
    int64_t lo = static_cast<int64_t>(std::floor(-R / d0));
    int64_t hi = static_cast<int64_t>(std::floor(R / d0));
    for (int64_t i = lo; i <= hi; ++i)
      for (int64_t j = lo; j <= hi; ++j)
        for (int64_t m = lo; m <= hi; ++m) euclid_walk(ctx, l0, i, j, m, {});
    for (int which = 0; which < 2; ++which) {
      const auto& counts = which == 0 ? ctx.outer : ctx.inner;
      std::vector<std::pair<int, double>> pts;
      for (int n = n_lo; n <= n_hi; ++n)
        if (counts[n - n_lo] > 0) pts.emplace_back(n, double(counts[n - n_lo]));
      if (pts.size() >= 3) fits.push_back(fit_dimension(pts));
    }
  }
  return fits;
}

HeisPoint sample_koranyi_ball(const HeisRegion& ball, Rng& rng) {
  // exact: u uniform over the disk, then s uniform over the fiber interval
  for (int it = 0; it < 10000; ++it) {
    double rr = ball.radius * std::sqrt(rng.u01());
    cplx u = ball.center.u + std::polar(rr, rng.uniform(0.0, 2.0 * kPi));
    double a2 = std::norm(u - ball.center.u);
    double h = 0.5 * std::sqrt(std::max(0.0, std::pow(ball.radius, 4.0) - a2 * a2));
    if (h <= 0.0) continue;
    // accept with probability proportional to the fiber length
    if (rng.u01() * ball.radius * ball.radius > 2.0 * h) continue;
    double tc = ball.center.s + std::imag(std::conj(ball.center.u) * u);
    return HeisPoint(u, tc + rng.uniform(-h, h));
  }
  throw std::runtime_error("sample_koranyi_ball: rejection failed");
}

}  // namespace

EuclidDim euclid_box_dim(const HeisCellStore& store, int n_lo, int n_hi, const HeisRegion& omega,
                         uint64_t est_seed) {
  EuclidDim out;
  out.brackets = euclid_cube_brackets(store, n_lo, n_hi, omega);

  // headline: scaling of mu_n mass in Euclidean balls around mu_n-weighted points
  const int n_q = n_hi;
  Rng rng = Rng::keyed({est_seed, store.def().seed, 0xE0C1ull});
  std::vector<HeisPoint> anchors;
  for (int tries = 0; tries < 300000 && anchors.size() < 32; ++tries) {
    HeisPoint p = sample_koranyi_ball(omega, rng);
    if (heis_survives(store, p, n_q)) anchors.push_back(p);
  }
  if (anchors.size() < 8) {
    out.extinct = true;
    return out;
  }
  const int l_lo = 2, l_hi = 5;
  const int K = 1200;
  std::vector<std::pair<int, double>> pts;
  for (int l = l_lo; l <= l_hi; ++l) {
    double rho = pow2(-l);
    long long hits = 0;
    for (const auto& a : anchors) {
      for (int s = 0; s < K; ++s) {
        // uniform in the Euclidean rho-ball around the anchor
        double x, y, z;
        do {
          x = rng.uniform(-1, 1);
          y = rng.uniform(-1, 1);
          z = rng.uniform(-1, 1);
        } while (x * x + y * y + z * z > 1.0);
        HeisPoint q(a.u + cplx(x * rho, y * rho), a.s + z * rho);
        if (koranyi_dist(q, omega.center) > omega.radius) continue;
        if (heis_survives(store, q, n_q)) ++hits;
      }
    }
    double mass = (hits + 0.5) / double(anchors.size() * K) * rho * rho * rho;
    pts.emplace_back(l, mass);
  }
  // mass ~ rho^alpha = 2^{-alpha l}: slope of log2(mass) vs l is -alpha
  ScalingFit f = fit_dimension(pts);
  f.slope = -f.slope;
  out.headline = f;
  return out;
}

HolderModulus holder_modulus(const FiberMassField& field) {
  HolderModulus out;
  size_t n = field.us.size();
  if (n < 4) {
    out.flat = true;
    return out;
  }
  double mn = *std::min_element(field.mass.begin(), field.mass.end());
  double mx = *std::max_element(field.mass.begin(), field.mass.end());
  if (mx - mn <= 1e-12 * std::max(1.0, mx)) {
    out.flat = true;
    return out;
  }
  // log-log cloud binned by log2 |u - v|
  const int B = 16;
  double lo = std::log2(field.grid_step * 0.9), hi = std::log2(1.0);
  std::vector<double> sum(B, 0.0);
  std::vector<long long> cnt(B, 0);
  Rng rng(12345);
  long long target = std::min<long long>(400000, static_cast<long long>(n) * (n - 1) / 2);
  for (long long t = 0; t < target; ++t) {
    size_t i = static_cast<size_t>(rng.u01() * n), j = static_cast<size_t>(rng.u01() * n);
    if (i >= n || j >= n || i == j) continue;
    double du = std::abs(field.us[i] - field.us[j]);
    double dx = std::abs(field.mass[i] - field.mass[j]);
    if (du <= 0.0 || dx <= 0.0) continue;
    int b = static_cast<int>((std::log2(du) - lo) / (hi - lo) * B);
    if (b < 0 || b >= B) continue;
    sum[b] += std::log2(dx);
    cnt[b]++;
    out.pairs++;
  }
  std::vector<std::pair<int, double>> pts;
  int used = 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int b = 0; b < B; ++b) {
    if (cnt[b] < 20) continue;
    double x = lo + (b + 0.5) * (hi - lo) / B;
    double y = sum[b] / cnt[b];
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++used;
  }
  if (used < 3) {
    out.flat = true;
    return out;
  }
  out.exponent = (used * sxy - sx * sy) / (used * sxx - sx * sx);
  return out;
}

// ---- sphere estimators ----------------------------------------------------------

SphereDims sphere_box_dim(const SphereRefineParams& prm, const SpherePoint& chart_anchor) {
  StereoChart chart = StereoChart::at(chart_anchor);
  std::vector<std::pair<int, double>> in_pts, out_pts;
  auto counts = sphere_refine(prm, [&](const SphereLevelView& lv) {
    std::vector<SpherePoint> op, ip;
    for (size_t i = 0; i < lv.pts.size(); ++i) {
      if (lv.outer[i] == 1) op.push_back(lv.pts[i]);
      if (lv.inner[i] == 1) ip.push_back(lv.pts[i]);
    }
    long long oc = chart_box_count(chart, op, lv.level);
    long long ic = chart_box_count(chart, ip, lv.level);
    if (oc > 0) out_pts.emplace_back(lv.level, double(oc));
    if (ic > 0) in_pts.emplace_back(lv.level, double(ic));
  });
  SphereDims out;
  out.extinct = counts.extinct;
  if (out_pts.size() >= 3)
    out.outer = fit_dimension(out_pts);
  else
    out.extinct = true;
  if (in_pts.size() >= 3) out.inner = fit_dimension(in_pts);
  return out;
}

SphereProjection sphere_radial_projection_dim(const SphereRefineParams& prm,
                                              const SpherePoint& anchor) {
  std::vector<std::pair<int, double>> pts;
  SphereProjection out;
  auto counts = sphere_refine(prm, [&](const SphereLevelView& lv) {
    std::vector<CVec3> images;
    images.reserve(lv.pts.size());
    for (size_t i = 0; i < lv.pts.size(); ++i) {
      if (lv.outer[i] != 1) continue;
      images.push_back(radial_project(anchor, lv.pts[i]).w);
    }
    if (images.empty()) return;
    long long c = p1_net_count(anchor, images, pow2(-lv.level));
    pts.emplace_back(lv.level, double(c));
    double area = c * std::pow(4.0, -lv.level);
    if (lv.level == prm.n_hi)
      out.image_area = area;
    else if (lv.level == prm.n_hi - 1)
      out.area_prev = area;
  });
  out.extinct = counts.extinct;
  if (pts.size() >= 3)
    out.fit = fit_dimension(pts);
  else
    out.extinct = true;
  return out;
}

ChainControl chain_projection_control(const Chain& L, const SpherePoint& anchor, int n_lo,
                                      int n_hi) {
  ChainChart cc = chartify(L);
  double q = cc.density();  // d(y_a, y_b)^2 = q |e^{ia} - e^{ib}|
  ChainControl out;
  std::vector<std::pair<int, double>> own, proj;
  for (int n = n_lo; n <= n_hi; ++n) {
    double rad = pow2(-n);
    // exact visual net along the chain: theta spacing from the chord formula
    double chord = rad * rad / q;  // |e^{ia} - e^{ib}| at distance rad
    long long cnt = 0;
    double th = 0.0;
    double dth = (chord >= 2.0) ? 2.0 * kPi : 2.0 * std::asin(std::min(1.0, 0.5 * chord));
    if (dth <= 0) dth = 1e-9;
    while (th < 2.0 * kPi) {
      ++cnt;
      th += dth;
    }
    own.emplace_back(n, double(cnt));
    // projected image: net of the smooth curve pi_x(chain)
    int M = std::min<long long>(1 << 18, 64LL << n);
    std::vector<CVec3> images;
    images.reserve(M);
    for (int i = 0; i < M; ++i) {
      SpherePoint y = chain_point(cc, i * 2.0 * kPi / M);
      if (visual_dist(y, anchor) < 1e-6) continue;
      images.push_back(radial_project(anchor, y).w);
    }
    proj.emplace_back(n, double(p1_net_count(anchor, images, rad)));
  }
  out.own_box_dim = fit_dimension(own);
  out.projection_dim = fit_dimension(proj);
  return out;
}

}  // namespace cutlab
