#include <cmath>
#include <sstream>

#include "cutlab/estimators.hpp"
#include "cutlab/runner.hpp"

namespace cutlab {

namespace {
constexpr double kPi = 3.14159265358979323846;

HeisPoint rand_heis(Rng& rng, double box) {
  return HeisPoint(cplx(rng.uniform(-box, box), rng.uniform(-box, box)), rng.uniform(-box, box));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

SelftestResult identity_suite(long trials, double tol) {
  SelftestResult r{"identities", true, ""};
  Rng rng(101);
  double worst = 0.0;
  for (long i = 0; i < trials; ++i) {
    // group axioms and left invariance
    HeisPoint a = rand_heis(rng, 4), b = rand_heis(rng, 4), g = rand_heis(rng, 4);
    HeisPoint lhs = heis_mul(heis_mul(a, b), g), rhs = heis_mul(a, heis_mul(b, g));
    worst = std::max(worst, std::abs(lhs.u - rhs.u) + std::abs(lhs.s - rhs.s));
    double d0 = koranyi_dist(a, b);
    worst = std::max(worst,
                     std::abs(koranyi_dist(heis_mul(g, a), heis_mul(g, b)) - d0) / (1.0 + d0));
    // sphere identities
    SpherePoint x = sample_sphere_uniform(rng), y = sample_sphere_uniform(rng);
    Chain pr = radial_project(x, y);
    worst = std::max(worst, std::abs(lorentz(pr.w, x.v)));
    worst = std::max(worst, std::abs(lorentz(pr.w, y.v)));
    double wn = wedge_norm(x.v, y.v);
    double ident = qform(pr.w) + std::norm(lorentz(x.v, y.v)) / (wn * wn);
    worst = std::max(worst, std::abs(ident));
    // chain parametrization identities and the distance formula
    cplx w1(rng.uniform(-2, 2), rng.uniform(-2, 2)), w2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    if (std::norm(w1) + std::norm(w2) > 1.1) {
      ChainChart cc = chartify(Chain(CVec3{cplx(1, 0), w1, w2}));
      double th = rng.uniform(0, 2 * kPi), ph = rng.uniform(0, 2 * kPi);
      SpherePoint yt = chain_point(cc, th), yp = chain_point(cc, ph);
      worst = std::max(worst, std::abs(qform(yt.v)));
      worst = std::max(worst, std::abs(lorentz(yt.v, CVec3{cplx(1, 0), w1, w2})) /
                                  std::sqrt(1.0 + cc.kappa2));
      double lhs2 = std::pow(visual_dist(yt, yp), 2.0);
      double rhs2 = cc.upsilon2 / (2.0 * cc.kappa2) *
                    std::abs(std::polar(1.0, th) - std::polar(1.0, ph));
      worst = std::max(worst, std::abs(lhs2 - rhs2));
    }
    // stereographic round trip
    StereoChart ch = StereoChart::standard();
    HeisPoint h = rand_heis(rng, 2);
    SpherePoint s = ch.from_heis(h);
    HeisPoint back = ch.to_heis(s);
    worst = std::max(worst, std::abs(back.u - h.u) + std::abs(back.s - h.s));
  }
  r.pass = worst <= tol;
  r.detail = "worst=" + fmt(worst) + " tol=" + fmt(tol);
  return r;
}

SelftestResult measure_suite() {
  SelftestResult r{"measures", true, ""};
  Rng rng(202);
  const int N = 400000;
  long hits = 0;
  for (int i = 0; i < N; ++i) {
    double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), t = rng.uniform(-0.5, 0.5);
    double m2 = x * x + y * y;
    if (m2 * m2 + 4 * t * t <= 1.0) ++hits;
  }
  double vol = 4.0 * hits / N;
  bool ok1 = std::abs(vol - kKoranyiUnitBallLebVolume) / kKoranyiUnitBallLebVolume < 0.01;
  // sphere ball volumes vs Monte Carlo at three radii
  const int M = 1500000;
  SpherePoint x0 = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  double rs[3] = {0.1, 0.2, 0.3};
  long h3[3] = {0, 0, 0};
  for (int i = 0; i < M; ++i) {
    SpherePoint y = sample_sphere_uniform(rng);
    double d = visual_dist(x0, y);
    for (int j = 0; j < 3; ++j)
      if (d <= rs[j]) ++h3[j];
  }
  bool ok2 = true;
  for (int j = 0; j < 3; ++j) {
    double want = sphere_ball_volume(rs[j]) / kSphereTotalMass;
    double got = double(h3[j]) / M;
    double se = std::sqrt(want * (1 - want) / M);
    if (std::abs(got - want) > 3.5 * se) ok2 = false;
  }
  // drift of f(r)/r^4 toward 1, monotone
  bool ok3 = true;
  double prev = 0.0;
  for (int j = 1; j <= 10; ++j) {
    double ratio = sphere_ball_volume(std::pow(2.0, -j)) / std::pow(2.0, -4.0 * j);
    if (ratio < prev - 1e-14 || ratio > 1.0 + 1e-12) ok3 = false;
    prev = ratio;
  }
  // beta_n on the sphere: log2(beta_n)/n increases toward gamma
  bool ok4 = true;
  double prevr = 0.0;
  for (int n = 6; n <= 14; ++n) {
    double ratio = std::log2(beta_n_sphere(1.0, n)) / n;
    if (ratio < prevr - 1e-12 || ratio > 1.0) ok4 = false;
    prevr = ratio;
  }
  r.pass = ok1 && ok2 && ok3 && ok4;
  r.detail = "koranyi_vol=" + fmt(vol) + " drift_last=" + fmt(prev) + " beta_ratio=" + fmt(prevr);
  return r;
}

SelftestResult process_suite(bool deep) {
  SelftestResult r{"process", true, ""};
  std::ostringstream det;
  bool ok = true;
  // band count means over seeds, 3 sigma
  {
    const int S = deep ? 400 : 150;
    HeisRegion window{HeisPoint(cplx(0, 0), 0), 2.0};
    double want = band_mean(1.0, heis_region_mass(window), 1);  // 60
    double sum = 0;
    for (int s = 0; s < S; ++s) {
      HeisProcessDef def{1.0, 7000ull + s, 1, window};
      ProcessSample ps = sample_process_heis(def);
      sum += ps.heis_bands[0].size();
    }
    double mean = sum / S;
    double se = std::sqrt(want / S);  // Poisson variance = mean
    if (std::abs(mean - want) > 3.0 * se) ok = false;
    det << "band_mean=" << fmt(mean) << "/" << fmt(want);
  }
  // survival probability 1/beta_n and E mu_n = 1, Heisenberg
  {
    const int T = deep ? 20000 : 6000;
    const int n = 4;
    HeisPoint p(cplx(0.21, -0.13), 0.05);
    long alive = 0;
    for (int t = 0; t < T; ++t) {
      HeisProcessDef def{1.0, 40000ull + t, n, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
      HeisCellStore store(def);
      alive += heis_survives(store, p, n);
    }
    double want = 1.0 / beta_n_heis(1.0, n);
    double got = double(alive) / T;
    double se = std::sqrt(want * (1 - want) / T);
    if (std::abs(got - want) > 3.0 * se) ok = false;
    det << " surv=" << fmt(got) << "/" << fmt(want);
  }
  // sphere survival probability
  {
    const int T = deep ? 4000 : 1200;
    const int n = 3;
    SpherePoint p = SpherePoint::from_chart(cplx(-1, 0), cplx(0, 0));
    long alive = 0;
    for (int t = 0; t < T; ++t) {
      SphereProcessDef def{1.0, 90000ull + t, n, 0};
      std::vector<std::vector<SphereEvent>> bands;
      for (int k = 1; k <= n; ++k) bands.push_back(sphere_band_global(def, k));
      alive += sphere_survives(bands, p, n);
    }
    double want = 1.0 / beta_n_sphere(1.0, n);
    double got = double(alive) / T;
    double se = std::sqrt(want * (1 - want) / T);
    if (std::abs(got - want) > 3.0 * se) ok = false;
    det << " sph_surv=" << fmt(got) << "/" << fmt(want);
  }
  // martingale z at n = 4
  {
    HeisProcessDef def{1.0, 424242ull, 5, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
    double z = martingale_check_z(def, cplx(0.1, 0.07), 4, deep ? 500 : 250, -1.0, 1.0);
    if (std::abs(z) > 3.5) ok = false;
    det << " mart_z=" << fmt(z);
  }
  r.pass = ok;
  r.detail = det.str();
  return r;
}

SelftestResult comparability_suite() {
  SelftestResult r{"comparability", true, ""};
  std::ostringstream det;
  Rng rng(303);
  // d^2 <= dE <= C d
  double cmax = 0.0;
  for (int i = 0; i < 20000; ++i) {
    SpherePoint a = sample_sphere_uniform(rng), b = sample_sphere_uniform(rng);
    double d = visual_dist(a, b), e = de_dist(a.v, b.v);
    if (d * d > e + 1e-12) r.pass = false;
    if (d > 1e-8) cmax = std::max(cmax, e / d);
  }
  det << "dE_over_d=" << fmt(cmax);
  // lem_a comparability: d_E(pi_x(y), w) vs d(y, L_w), disjoint compacta
  SpherePoint cB = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  SpherePoint cV = SpherePoint::from_chart(cplx(-1, 0), cplx(0, 0));
  double lo = 1e9, hi = 0.0;
  for (int i = 0; i < 400; ++i) {
    SpherePoint x = sample_visual_ball(cB, 0.25, rng);
    SpherePoint y = sample_visual_ball(cV, 0.35, rng);
    SpherePoint yq = sample_visual_ball(cV, 0.35, rng);
    Chain L = radial_project(x, y);
    ChainChart cc = chartify(L);
    double brute = 1e9;
    for (int j = 0; j < 2048; ++j)
      brute = std::min(brute, visual_dist(yq, chain_point(cc, j * 2 * kPi / 2048)));
    double lhs = de_dist(radial_project(x, yq).w, L.w);
    if (brute < 2e-3) continue;
    lo = std::min(lo, lhs / brute);
    hi = std::max(hi, lhs / brute);
  }
  if (!(lo > 0.01 && hi < 100.0 && hi / lo < 1e4)) r.pass = false;
  det << " lem_a=[" << fmt(lo) << "," << fmt(hi) << "]";
  // tube comparison (technical lemma): fitted C
  double cfit = 0.0;
  for (int i = 0; i < 300; ++i) {
    SpherePoint x = sample_visual_ball(cB, 0.2, rng);
    SpherePoint xp = sample_visual_ball(cB, 0.2, rng);
    SpherePoint y0 = sample_visual_ball(cV, 0.3, rng);
    Chain Lu = radial_project(x, y0);
    Chain Lup = radial_project(xp, y0);
    double rr = std::pow(2.0, -rng.uniform(2.0, 6.0));
    SpherePoint y = sample_visual_ball(cV, 0.3, rng);
    double du = de_dist(radial_project(x, y).w, Lu.w);
    if (du > rr) continue;  // y outside the tube
    double dup = de_dist(radial_project(xp, y).w, Lup.w);
    double dE_uu = de_dist(Lu.w, Lup.w);
    cfit = std::max(cfit, dup / (rr + dE_uu));
  }
  if (!(cfit > 0.0 && cfit < 100.0)) r.pass = false;
  det << " tube_C=" << fmt(cfit);
  // Frostman constant for chain balls and the annulus bound
  double frost = 0.0, annul = 0.0;
  SpherePoint xs = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  for (int i = 0; i < 400; ++i) {
    cplx w1(rng.uniform(-2, 2), rng.uniform(-2, 2)), w2(rng.uniform(-2, 2), rng.uniform(-2, 2));
    double k2 = std::norm(w1) + std::norm(w2);
    if (k2 < 1.2 || k2 > 5.0 || std::abs(w2) < 0.15) continue;
    ChainChart cc = chartify(Chain(CVec3{cplx(1, 0), w1, w2}));
    ChainProfile pp = chain_dist_profile(cc);
    double rad = std::pow(2.0, -rng.uniform(1.0, 8.0));
    frost = std::max(frost, chain_measure_arcs(cc, annulus_arcs(pp, 0.0, rad)) / (rad * rad));
    double delta = std::pow(2.0, -rng.uniform(4.0, 16.0));
    double rr = std::max(delta, std::pow(2.0, -rng.uniform(2.0, 4.0)));
    annul = std::max(annul, chain_measure_arcs(cc, annulus_arcs(pp, rr, rr + delta)) /
                                std::sqrt(delta));
  }
  if (!(frost < 10.0 && annul < 10.0)) r.pass = false;
  det << " frostman_C=" << fmt(frost) << " annulus_C=" << fmt(annul);
  r.detail = det.str();
  return r;
}

SelftestResult covers_suite() {
  SelftestResult r{"covers", true, ""};
  std::ostringstream det;
  Rng rng(404);
  // tiling: membership re-check over random points
  bool ok = true;
  for (int i = 0; i < 100000; ++i) {
    HeisPoint p = rand_heis(rng, 3);
    int n = 1 + static_cast<int>(rng.u01() * 8);
    if (!twisted_box_contains(twisted_box_index(p, n), p)) ok = false;
  }
  // diameter bound by random pair maximization, plus the contained ball
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.u01() * 6);
    TwistedBoxIndex idx{n, static_cast<int64_t>(rng.uniform(-8, 8)),
                        static_cast<int64_t>(rng.uniform(-8, 8)),
                        static_cast<int64_t>(rng.uniform(-40, 40))};
    HeisPoint corner = twisted_box_corner(idx);
    double du = std::pow(2.0, -n), h = std::pow(4.0, -n);
    for (int i = 0; i < 60; ++i) {
      HeisPoint a = heis_mul(corner, HeisPoint(cplx(rng.u01() * du, rng.u01() * du), rng.u01() * h));
      HeisPoint b = heis_mul(corner, HeisPoint(cplx(rng.u01() * du, rng.u01() * du), rng.u01() * h));
      worst_ratio = std::max(worst_ratio, koranyi_dist(a, b) / box_diameter_bound(n));
    }
  }
  if (worst_ratio > 1.0) ok = false;
  // inner ball radius around the box center (measured constant, reported)
  double inner_c = 1e9;
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng.u01() * 4);
    TwistedBoxIndex idx{n, static_cast<int64_t>(rng.uniform(-6, 6)),
                        static_cast<int64_t>(rng.uniform(-6, 6)),
                        static_cast<int64_t>(rng.uniform(-20, 20))};
    HeisPoint center = twisted_box_center(idx);
    // largest radius whose sampled sphere stays in the box
    double lo_r = 0.0, hi_r = box_diameter_bound(n);
    for (int it = 0; it < 24; ++it) {
      double mid = 0.5 * (lo_r + hi_r);
      bool inside = true;
      for (int s = 0; s < 48; ++s) {
        // rough sphere sample: random direction via rejection on the gauge
        HeisPoint q = rand_heis(rng, 1.0);
        double nn = koranyi_norm(q);
        if (nn < 1e-6) continue;
        double lam = mid / nn;
        HeisPoint dir(q.u * lam, q.s * lam * lam);
        if (!twisted_box_contains(idx, heis_mul(center, dir))) inside = false;
      }
      if (inside)
        lo_r = mid;
      else
        hi_r = mid;
    }
    inner_c = std::min(inner_c, lo_r * std::pow(2.0, n));
  }
  if (!(inner_c > 0.05)) ok = false;
  det << "diam_ratio=" << fmt(worst_ratio) << " inner_ball_c=" << fmt(inner_c);
  r.pass = ok;
  r.detail = det.str();
  return r;
}

}  // namespace

std::vector<SelftestResult> selftest(bool deep, bool tamper) {
  std::vector<SelftestResult> out;
  double tol = tamper ? 1e-20 : 1e-10;
  out.push_back(identity_suite(deep ? 100000 : 20000, tol));
  out.push_back(measure_suite());
  out.push_back(covers_suite());
  out.push_back(process_suite(deep));
  out.push_back(comparability_suite());
  return out;
}

}  // namespace cutlab
