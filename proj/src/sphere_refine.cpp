#include "cutlab/sphere_refine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace cutlab {

namespace {

// margins, in units of 2^-k at the working level
constexpr double kTrackDefl = 4.0;    // a point dies when a ball covers it under this deflation
constexpr double kCountMargin = 2.0;  // outer/inner count margin
constexpr double kStraddleW = 4.0;    // carried-event window |d - r| <= W 2^-k
constexpr int kGlobalBandMax = 4;     // bands sampled globally (shared with the eager sampler)

struct FlatEvent {
  SpherePoint y;
  double r;
};

// spatial hash of sphere points through a fixed stereographic chart; cell
// size tracks the net scale so neighbor lookups enumerate O(1) cells.
// Only valid for points in the region where the chart Lipschitz bound holds.
struct ChartHash {
  const StereoChart* chart = nullptr;
  double cell = 1.0;
  std::unordered_map<uint64_t, std::vector<int>> cells;
  std::vector<HeisPoint> imgs;

  void reset(const StereoChart* ch, double cell_size) {
    chart = ch;
    cell = cell_size;
    cells.clear();
    imgs.clear();
  }
  static uint64_t key(int64_t a, int64_t b, int64_t c) {
    return hash_key(
        {static_cast<uint64_t>(a), static_cast<uint64_t>(b), static_cast<uint64_t>(c)});
  }
  uint64_t key_of(const HeisPoint& h) const {
    return key(static_cast<int64_t>(std::floor(h.u.real() / cell)),
               static_cast<int64_t>(std::floor(h.u.imag() / cell)),
               static_cast<int64_t>(std::floor(h.s / (cell * cell))));
  }
  int insert(const SpherePoint& p) {
    HeisPoint h = chart->to_heis(p);
    int idx = static_cast<int>(imgs.size());
    imgs.push_back(h);
    cells[key_of(h)].push_back(idx);
    return idx;
  }
  template <class F>
  void for_each_near(const HeisPoint& h, double rad, F&& fn) const {
    int64_t a0 = static_cast<int64_t>(std::floor((h.u.real() - rad) / cell));
    int64_t a1 = static_cast<int64_t>(std::floor((h.u.real() + rad) / cell));
    int64_t b0 = static_cast<int64_t>(std::floor((h.u.imag() - rad) / cell));
    int64_t b1 = static_cast<int64_t>(std::floor((h.u.imag() + rad) / cell));
    double vr = 0.5 * rad * rad + rad * (std::abs(h.u) + rad);
    double ch = cell * cell;
    int64_t c0 = static_cast<int64_t>(std::floor((h.s - vr) / ch));
    int64_t c1 = static_cast<int64_t>(std::floor((h.s + vr) / ch));
    for (int64_t a = a0; a <= a1; ++a)
      for (int64_t b = b0; b <= b1; ++b)
        for (int64_t c = c0; c <= c1; ++c) {
          auto it = cells.find(key(a, b, c));
          if (it == cells.end()) continue;
          for (int idx : it->second) fn(idx);
        }
  }
};

struct Level {
  std::vector<SpherePoint> pts;
  std::vector<uint8_t> outer, inner;            // 0/1; 2 marks dead
  std::vector<std::vector<FlatEvent>> carried;  // straddlers per point
};

// apply one event to a point: updates flags, returns true if it killed it
bool apply_event(Level& lv, size_t i, const FlatEvent& ev, double scale) {
  double d = visual_dist(lv.pts[i], ev.y);
  if (d > ev.r + kStraddleW * scale) return false;
  if (d <= ev.r - kTrackDefl * scale) {
    lv.outer[i] = 2;
    return true;
  }
  if (d <= ev.r - kCountMargin * scale) lv.outer[i] = 0;
  if (d <= ev.r + kCountMargin * scale) lv.inner[i] = 0;
  lv.carried[i].push_back(ev);
  return false;
}

void compact(Level& lv) {
  Level alive;
  for (size_t i = 0; i < lv.pts.size(); ++i) {
    if (lv.outer[i] == 2) continue;
    alive.pts.push_back(lv.pts[i]);
    alive.outer.push_back(lv.outer[i]);
    alive.inner.push_back(lv.inner[i]);
    alive.carried.push_back(std::move(lv.carried[i]));
  }
  lv = std::move(alive);
}

}  // namespace

SphereRefineCounts sphere_refine(const SphereRefineParams& prm,
                                 const std::function<void(const SphereLevelView&)>& on_level) {
  SphereRefineCounts out;
  out.n_lo = prm.n_lo;
  out.n_hi = prm.n_hi;
  out.outer.assign(prm.n_hi - prm.n_lo + 1, 0);
  out.inner.assign(prm.n_hi - prm.n_lo + 1, 0);

  // hashing chart anchored as far as possible from the observation ball
  SpherePoint far_anchor = prm.omega_center;
  {
    Rng rng = Rng::keyed({0xFA2ull});
    double best = -1.0;
    for (int i = 0; i < 2000; ++i) {
      SpherePoint c = sample_sphere_uniform(rng);
      double d = visual_dist(c, prm.omega_center);
      if (d > best) {
        best = d;
        far_anchor = c;
      }
    }
  }
  StereoChart chart = StereoChart::at(far_anchor);
  double lip = 0.0;
  {
    Rng rng = Rng::keyed({prm.est_seed, 0xC0FFEEull});
    for (int i = 0; i < 4000; ++i) {
      SpherePoint a = sample_visual_ball(prm.omega_center, 0.8, rng);
      SpherePoint b = sample_visual_ball(prm.omega_center, 0.8, rng);
      double dv = visual_dist(a, b);
      if (dv < 1e-5) continue;
      lip = std::max(lip, koranyi_dist(chart.to_heis(a), chart.to_heis(b)) / dv);
    }
    lip *= 1.5;
  }

  Level cur;
  const int k0 = 1;
  {
    Rng rng = Rng::keyed({prm.est_seed, prm.def.seed, 0x5EEDull});
    std::vector<SpherePoint> cand;
    for (int i = 0; i < 600; ++i)
      cand.push_back(sample_visual_ball(prm.omega_center, prm.omega_radius, rng));
    double rad = std::pow(2.0, -k0);
    Net net = greedy_net(cand.size(), rad,
                         [&](size_t i, size_t j) { return visual_dist(cand[i], cand[j]); });
    for (size_t idx : net.kept) cur.pts.push_back(cand[idx]);
    cur.outer.assign(cur.pts.size(), 1);
    cur.inner.assign(cur.pts.size(), 1);
    cur.carried.assign(cur.pts.size(), {});
  }

  for (int k = k0; k <= prm.n_hi; ++k) {
    const double scale = std::pow(2.0, -k);
    int band_lo = (k == k0) ? 1 : k;
    for (int band = band_lo; band <= k; ++band) {
      const double rmax = std::pow(2.0, 1 - band);
      if (band <= kGlobalBandMax) {
        // coarse bands: same global realization as the eager sampler
        auto evs = sphere_band_global(prm.def, band);
        for (size_t i = 0; i < cur.pts.size(); ++i)
          for (const auto& e : evs)
            if (apply_event(cur, i, FlatEvent{e.y, e.r}, scale)) break;
        compact(cur);
        continue;
      }
      // fine bands: sample in balls around a coarse generator net of the
      // surviving points, with min-index ownership dedup
      const double rho_s = rmax + (1.0 + kStraddleW) * scale;
      const double gen_rad = 0.5 * rho_s;
      const double R_g = 1.5 * rho_s;
      ChartHash genhash;
      genhash.reset(&chart, std::max(lip * gen_rad, 1e-4));
      std::vector<SpherePoint> gens;
      for (const auto& p : cur.pts) {
        HeisPoint h = chart.to_heis(p);
        bool sep = true;
        genhash.for_each_near(h, lip * gen_rad, [&](int j) {
          if (sep && visual_dist(gens[j], p) <= gen_rad) sep = false;
        });
        if (sep) {
          genhash.insert(p);
          gens.push_back(p);
        }
      }
      const double lam = prm.def.gamma * band_weight(band) * sphere_ball_volume(R_g);
      ChartHash evhash;
      evhash.reset(&chart, std::max(lip * rmax, 1e-4));
      std::vector<FlatEvent> evs;
      ChartHash ownhash;
      ownhash.reset(&chart, std::max(lip * R_g, 1e-4));
      for (const auto& g : gens) ownhash.insert(g);
      for (size_t i = 0; i < gens.size(); ++i) {
        Rng rng = Rng::keyed({prm.def.seed, prm.def.stream_tag, 2ull,
                              static_cast<uint64_t>(band), static_cast<uint64_t>(k),
                              static_cast<uint64_t>(i)});
        long m = rng.poisson(lam);
        for (long e = 0; e < m; ++e) {
          SpherePoint y = sample_visual_ball(gens[i], R_g, rng);
          double r = band_radius_from_u(band, rng.u01());
          int owner = static_cast<int>(i);
          HeisPoint hy = chart.to_heis(y);
          ownhash.for_each_near(hy, lip * R_g, [&](int j) {
            if (j < owner && visual_dist(gens[j], y) <= R_g) owner = j;
          });
          if (owner != static_cast<int>(i)) continue;
          evhash.insert(y);
          evs.push_back(FlatEvent{y, r});
        }
      }
      const double reach = rmax + kStraddleW * scale;
      for (size_t i = 0; i < cur.pts.size(); ++i) {
        HeisPoint h = chart.to_heis(cur.pts[i]);
        bool done = false;
        evhash.for_each_near(h, lip * reach, [&](int j) {
          if (done) return;
          if (apply_event(cur, i, evs[j], scale)) done = true;
        });
      }
      compact(cur);
    }

    if (k >= prm.n_lo && k <= prm.n_hi) {
      long long o = 0, in = 0;
      for (size_t i = 0; i < cur.pts.size(); ++i) {
        o += cur.outer[i] == 1;
        in += cur.inner[i] == 1;
      }
      out.outer[k - prm.n_lo] = o;
      out.inner[k - prm.n_lo] = in;
      if (on_level) {
        SphereLevelView view{k, cur.pts, cur.outer, cur.inner};
        on_level(view);
      }
      if (k == prm.n_hi && o == 0) out.extinct = true;
    }
    if (k == prm.n_hi) break;
    if (cur.pts.empty()) {
      out.extinct = true;
      break;
    }

    // refine: candidates inside each surviving ball, tested against the
    // parent's carried straddlers at the child scale
    const double childScale = 0.5 * scale;
    ChartHash nethash;
    nethash.reset(&chart, std::max(lip * childScale, 1e-4));
    Level next;
    for (size_t i = 0; i < cur.pts.size(); ++i) {
      Rng rng = Rng::keyed({prm.est_seed, prm.def.seed, 3ull, static_cast<uint64_t>(k),
                            static_cast<uint64_t>(i)});
      for (int c = 0; c < prm.children_per_parent; ++c) {
        SpherePoint cand = sample_visual_ball(cur.pts[i], scale, rng);
        bool dead = false, outer = true, inner = true;
        for (const auto& ev : cur.carried[i]) {
          double d = visual_dist(cand, ev.y);
          if (d <= ev.r - kTrackDefl * childScale) {
            dead = true;
            break;
          }
          if (d <= ev.r - kCountMargin * childScale) outer = false;
          if (d <= ev.r + kCountMargin * childScale) inner = false;
        }
        if (dead) continue;
        HeisPoint hc = chart.to_heis(cand);
        bool sep = true;
        nethash.for_each_near(hc, lip * childScale, [&](int j) {
          if (sep && visual_dist(next.pts[j], cand) <= childScale) sep = false;
        });
        if (!sep) continue;
        nethash.insert(cand);
        next.pts.push_back(cand);
        next.outer.push_back(outer ? 1 : 0);
        next.inner.push_back(inner ? 1 : 0);
        std::vector<FlatEvent> keep;
        for (const auto& ev : cur.carried[i]) {
          double d = visual_dist(cand, ev.y);
          if (std::abs(d - ev.r) <= kStraddleW * childScale) keep.push_back(ev);
        }
        next.carried.push_back(std::move(keep));
      }
    }
    cur = std::move(next);
  }
  return out;
}

// ---- projective-line nets ----------------------------------------------------

long long p1_net_count(const SpherePoint& axis, const std::vector<CVec3>& images, double radius) {
  // Hermitian-orthonormal basis of {v : <v, axis> = 0}; coordinates are then
  // Fubini coordinates on the line and d_E is the chordal metric of P^1.
  const CVec3& x = axis.v;
  CVec3 ra{std::conj(x[0]), -std::conj(x[1]), -std::conj(x[2])};
  CVec3 e{cplx(1, 0), cplx(0, 0), cplx(0, 0)};
  if (std::abs(ra[1]) + std::abs(ra[2]) < 0.5) e = CVec3{cplx(0, 0), cplx(1, 0), cplx(0, 0)};
  CVec3 b1{ra[1] * e[2] - ra[2] * e[1], ra[2] * e[0] - ra[0] * e[2], ra[0] * e[1] - ra[1] * e[0]};
  double n1 = herm_norm(b1);
  for (auto& c : b1) c /= n1;
  CVec3 cra{std::conj(ra[0]), std::conj(ra[1]), std::conj(ra[2])};
  CVec3 cb1{std::conj(b1[0]), std::conj(b1[1]), std::conj(b1[2])};
  CVec3 b2{cra[1] * cb1[2] - cra[2] * cb1[1], cra[2] * cb1[0] - cra[0] * cb1[2],
           cra[0] * cb1[1] - cra[1] * cb1[0]};
  double n2 = herm_norm(b2);
  for (auto& c : b2) c /= n2;

  struct P1Pt {
    cplx z1, z2;
  };
  std::vector<P1Pt> pts;
  pts.reserve(images.size());
  for (const auto& w : images) {
    cplx z1 = herm_dot(w, b1), z2 = herm_dot(w, b2);
    double n = std::sqrt(std::norm(z1) + std::norm(z2));
    pts.push_back(P1Pt{z1 / n, z2 / n});
  }
  auto dE = [](const P1Pt& a, const P1Pt& b) {
    double w2 = 1.0 - std::norm(a.z1 * std::conj(b.z1) + a.z2 * std::conj(b.z2));
    return std::sqrt(std::max(0.0, w2));
  };

  if (radius > 0.2 || pts.size() < 400) {
    std::vector<size_t> kept;
    for (size_t i = 0; i < pts.size(); ++i) {
      bool ok = true;
      for (size_t j : kept)
        if (dE(pts[i], pts[j]) <= radius) {
          ok = false;
          break;
        }
      if (ok) kept.push_back(i);
    }
    return static_cast<long long>(kept.size());
  }

  // two-chart hash: chart A holds z = z1/z2 with |z| <= 1.5, chart B holds 1/z
  std::unordered_map<uint64_t, std::vector<int>> hashA, hashB;
  std::vector<cplx> zA(pts.size()), zB(pts.size());
  long long kept = 0;
  const double cell = radius;
  auto cellkey = [&](int chartid, const cplx& z) {
    return hash_key({static_cast<uint64_t>(chartid),
                     static_cast<uint64_t>(static_cast<int64_t>(std::floor(z.real() / cell))),
                     static_cast<uint64_t>(static_cast<int64_t>(std::floor(z.imag() / cell)))});
  };
  auto nearby = [&](const std::unordered_map<uint64_t, std::vector<int>>& h, int chartid,
                    const cplx& z, const P1Pt& q) {
    int64_t a0 = static_cast<int64_t>(std::floor((z.real() - 3.3 * radius) / cell));
    int64_t a1 = static_cast<int64_t>(std::floor((z.real() + 3.3 * radius) / cell));
    int64_t b0 = static_cast<int64_t>(std::floor((z.imag() - 3.3 * radius) / cell));
    int64_t b1 = static_cast<int64_t>(std::floor((z.imag() + 3.3 * radius) / cell));
    for (int64_t a = a0; a <= a1; ++a)
      for (int64_t b = b0; b <= b1; ++b) {
        auto it = h.find(hash_key({static_cast<uint64_t>(chartid), static_cast<uint64_t>(a),
                                   static_cast<uint64_t>(b)}));
        if (it == h.end()) continue;
        for (int idx : it->second)
          if (dE(q, pts[idx]) <= radius) return true;
      }
    return false;
  };
  for (size_t i = 0; i < pts.size(); ++i) {
    bool hasA = std::abs(pts[i].z2) > 1e-12 && std::abs(pts[i].z1 / pts[i].z2) <= 1.5;
    bool hasB = std::abs(pts[i].z1) > 1e-12 && std::abs(pts[i].z2 / pts[i].z1) <= 1.5;
    if (hasA) zA[i] = pts[i].z1 / pts[i].z2;
    if (hasB) zB[i] = pts[i].z2 / pts[i].z1;
    bool neighbor = false;
    if (hasA && nearby(hashA, 0, zA[i], pts[i])) neighbor = true;
    if (!neighbor && hasB && nearby(hashB, 1, zB[i], pts[i])) neighbor = true;
    if (neighbor) continue;
    ++kept;
    if (hasA) hashA[cellkey(0, zA[i])].push_back(static_cast<int>(i));
    if (hasB) hashB[cellkey(1, zB[i])].push_back(static_cast<int>(i));
  }
  return kept;
}

long long chart_box_count(const StereoChart& chart, const std::vector<SpherePoint>& pts, int n) {
  std::vector<HeisPoint> imgs;
  imgs.reserve(pts.size());
  for (const auto& p : pts) imgs.push_back(chart.to_heis(p));
  return count_boxes_of_points(imgs, n);
}

}  // namespace cutlab
