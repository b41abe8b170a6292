#include "cutlab/covers.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <cstdio>

namespace cutlab {

TwistedBoxIndex twisted_box_index(const HeisPoint& p, int n) {
  const double du = std::pow(2.0, -n);
  const double h = std::pow(4.0, -n);
  int64_t a = static_cast<int64_t>(std::floor(p.u.real() / du));
  int64_t b = static_cast<int64_t>(std::floor(p.u.imag() / du));
  cplx u0(a * du, b * du);
  double tau = p.s - std::imag(std::conj(u0) * (p.u - u0));
  int64_t c = static_cast<int64_t>(std::floor(tau / h));
  return TwistedBoxIndex{n, a, b, c};
}

HeisPoint twisted_box_corner(const TwistedBoxIndex& idx) {
  const double du = std::pow(2.0, -idx.n);
  const double h = std::pow(4.0, -idx.n);
  return HeisPoint(cplx(idx.a * du, idx.b * du), idx.c * h);
}

HeisPoint twisted_box_center(const TwistedBoxIndex& idx) {
  const double du = std::pow(2.0, -idx.n);
  const double h = std::pow(4.0, -idx.n);
  return heis_mul(twisted_box_corner(idx), HeisPoint(cplx(0.5 * du, 0.5 * du), 0.5 * h));
}

bool twisted_box_contains(const TwistedBoxIndex& idx, const HeisPoint& p) {
  TwistedBoxIndex got = twisted_box_index(p, idx.n);
  return got == idx;
}

long long count_boxes_of_points(const std::vector<HeisPoint>& pts, int n) {
  std::unordered_set<uint64_t> seen;
  seen.reserve(pts.size() * 2);
  long long collisions_guard = 0;
  for (const auto& p : pts) {
    TwistedBoxIndex idx = twisted_box_index(p, n);
    seen.insert(hash_key({static_cast<uint64_t>(idx.a), static_cast<uint64_t>(idx.b),
                          static_cast<uint64_t>(idx.c)}));
  }
  (void)collisions_guard;
  return static_cast<long long>(seen.size());
}

// ---- walker -----------------------------------------------------------------

namespace {

struct WEvent {
  cplx z;
  double t, r;
  double lo, hi;  // tau interval in the current column frame
  double sh;      // t + Im(conj(z)(u_mid - z))
  double khalf, ohalf, ihalf;  // s-halfwidths of kill/outer-fail/inner-fail sets
};

double pow4_of(double x) { return x <= 0.0 ? -1.0 : (x * x) * (x * x); }

// halfwidth of {q4 <= t4} around sh given the horizontal part m4
double halfwidth_of(double t4, double m4) {
  if (t4 < m4) return -1.0;
  return 0.5 * std::sqrt(t4 - m4);
}

using Runs = std::vector<std::pair<int64_t, int64_t>>;  // inclusive index runs

struct Ctx {
  const HeisCellStore* store;
  BoxWalkParams prm;
  double D;  // box diameter constant at level 0
  double prm2_gamma_hint = 1.0;  // intensity, for the gather-vs-defer estimate
  size_t cache_budget = 25000000;
  SandwichCounts out;
};

// tau interval of the influence region of event e in the frame of column
// (u0, level l): tau = t_e + Im(conj(z-u0) u_p) +- rho^2/2 over p with
// dist(p,e) <= rho and u_p in the column square. Also precomputes the
// center-test invariants so per-box tests avoid pow entirely.
void set_interval(WEvent& e, const cplx& u0, const cplx& u_mid, double du, double rho,
                  double margin_c, double kill_m) {
  cplx w = std::conj(e.z - u0);
  double cen = e.t + std::imag(w * u_mid);
  double half = 0.5 * rho * rho + std::sqrt(std::norm(w)) * 0.7071067811865476 * du;
  e.lo = cen - half;
  e.hi = cen + half;
  double m2 = std::norm(u_mid - e.z);
  double m4 = m2 * m2;
  e.sh = e.t + std::imag(std::conj(e.z) * (u_mid - e.z));
  e.khalf = halfwidth_of(pow4_of(e.r - kill_m), m4);
  e.ohalf = halfwidth_of(pow4_of(e.r - margin_c), m4);
  e.ihalf = halfwidth_of(pow4_of(e.r + margin_c), m4);
}

void gather_band(Ctx& ctx, int band, const cplx& u0, const cplx& u_mid, double du,
                 double tau_lo, double tau_hi, std::vector<HeisEvent>& out) {
  // raw band events whose influence region can reach the column square times
  // [tau_lo, tau_hi]; tau_cell of a relevant event equals
  //   tau_node(p) - Im(conj(U0-u0) u_p) - Im(conj(zeta) (u_p - U0)) +- rho^2/2
  // with affine corner terms evaluated exactly per cell column.
  const int L = heis_cell_level(band);
  const double DU = std::pow(2.0, -L);
  const double DT = std::pow(4.0, -L);
  const double lscale = std::pow(2.0, -band);
  const double rmax = 2.0 * lscale;
  const double hreach = rmax + (ctx.prm.margin + ctx.D) * lscale;
  int64_t A0 = static_cast<int64_t>(std::floor((u0.real() - hreach) / DU));
  int64_t A1 = static_cast<int64_t>(std::floor((u0.real() + du + hreach) / DU));
  int64_t B0 = static_cast<int64_t>(std::floor((u0.imag() - hreach) / DU));
  int64_t B1 = static_cast<int64_t>(std::floor((u0.imag() + du + hreach) / DU));
  for (int64_t A = A0; A <= A1; ++A)
    for (int64_t B = B0; B <= B1; ++B) {
      cplx U0(A * DU, B * DU);
      double ddx = std::max({u0.real() - (U0.real() + DU), 0.0, U0.real() - (u0.real() + du)});
      double ddy = std::max({u0.imag() - (U0.imag() + DU), 0.0, U0.imag() - (u0.imag() + du)});
      double dd = std::sqrt(ddx * ddx + ddy * ddy);
      if (dd > hreach) continue;
      // g(u_p) = Im(conj(U0-u0) u_p) over the column square corners (exact)
      cplx w = std::conj(U0 - u0);
      double g00 = std::imag(w * u0);
      double g10 = std::imag(w * (u0 + cplx(du, 0)));
      double g01 = std::imag(w * (u0 + cplx(0, du)));
      double g11 = std::imag(w * (u0 + cplx(du, du)));
      double gmin = std::min({g00, g10, g01, g11});
      double gmax = std::max({g00, g10, g01, g11});
      // residual: |Im(conj(zeta)(u_p - U0))| <= 1.5 DU (dd + du + 2.5 DU), plus rho^2/2
      double slack = 0.5 * hreach * hreach + 1.5 * DU * (dd + 1.5 * du + 2.5 * DU);
      int64_t C0 = static_cast<int64_t>(std::floor((tau_lo - gmax - slack) / DT));
      int64_t C1 = static_cast<int64_t>(std::floor((tau_hi - gmin + slack) / DT));
      for (int64_t C = C0; C <= C1; ++C) {
        for (const auto& ev : ctx.store->cell(band, A, B, C)) {
          double dx = std::max({u0.real() - ev.z.real(), 0.0, ev.z.real() - (u0.real() + du)});
          double dy = std::max({u0.imag() - ev.z.imag(), 0.0, ev.z.imag() - (u0.imag() + du)});
          double reach = ev.r + (ctx.prm.margin + ctx.D) * lscale;
          if (dx * dx + dy * dy > reach * reach) continue;
          out.push_back(ev);
        }
      }
    }
}

void walk_column(Ctx& ctx, int l, int64_t a, int64_t b, Runs cand, std::vector<WEvent> evs,
                 std::vector<HeisEvent> pending, bool have_pending) {
  const double du = std::pow(2.0, -l);
  const double h = std::pow(4.0, -l);
  const cplx u0(a * du, b * du);
  const cplx u_mid = u0 + cplx(0.5 * du, 0.5 * du);
  const double col_shear = std::imag(std::conj(u0) * (u_mid - u0));
  const double scale = du;
  const double C_m = ctx.prm.margin * scale;
  const double KILL = (ctx.D + 0.5 * ctx.prm.margin) * scale;
  const bool count_here = (l >= ctx.prm.n_lo && l <= ctx.prm.n_hi);
  if (cand.empty()) return;
  const HeisRegion& omg = ctx.prm.omega;
  const double om_m2 = std::norm(u_mid - omg.center.u);
  const double om_m4 = om_m2 * om_m2;
  const double om_sh = omg.center.s + std::imag(std::conj(omg.center.u) * (u_mid - omg.center.u));
  const double om_meet_r = omg.radius + ctx.D * scale;
  const double om_meet4 = (om_meet_r * om_meet_r) * (om_meet_r * om_meet_r);
  const double om_reach_r = omg.radius + 2.0 * ctx.D * scale;
  const double om_reach4 = (om_reach_r * om_reach_r) * (om_reach_r * om_reach_r);

  // Every event constraint is an interval in c-space: with
  // q4(c) = m4 + 4 (sc - sh)^2 and sc = (c + 1/2) h + col_shear, the set
  // {q4 <= T} is |sc - sh| <= sqrt(max(0, T - m4))/2. Counting and pruning
  // are interval operations; no per-box scans.
  auto to_crange = [&](double center_s, double half) {
    double lo = (center_s - half - col_shear) / h - 0.5;
    double hi = (center_s + half - col_shear) / h - 0.5;
    return std::pair<int64_t, int64_t>(static_cast<int64_t>(std::ceil(lo)),
                                       static_cast<int64_t>(std::floor(hi)));
  };
  Runs kills, outs, ins;
  kills.reserve(evs.size());
  if (count_here) {
    outs.reserve(evs.size());
    ins.reserve(evs.size());
  }
  for (const auto& e : evs) {
    if (e.khalf >= 0.0) {
      auto ko = to_crange(e.sh, e.khalf);
      if (ko.first <= ko.second) kills.push_back(ko);
    }
    if (!count_here) continue;
    if (e.ohalf >= 0.0) {
      auto oo = to_crange(e.sh, e.ohalf);
      if (oo.first <= oo.second) outs.push_back(oo);
    }
    if (e.ihalf >= 0.0) {
      auto io = to_crange(e.sh, e.ihalf);
      if (io.first <= io.second) ins.push_back(io);
    }
  }
  auto merge_runs = [](Runs& r) {
    if (r.empty()) return;
    std::sort(r.begin(), r.end());
    Runs out;
    out.push_back(r.front());
    for (size_t i = 1; i < r.size(); ++i) {
      if (r[i].first <= out.back().second + 1)
        out.back().second = std::max(out.back().second, r[i].second);
      else
        out.push_back(r[i]);
    }
    r = std::move(out);
  };
  merge_runs(kills);
  merge_runs(outs);
  merge_runs(ins);
  auto subtract = [](const Runs& base, const Runs& minus) {
    Runs out;
    for (auto [lo, hi] : base) {
      int64_t cur = lo;
      size_t j = static_cast<size_t>(
          std::lower_bound(minus.begin(), minus.end(), cur,
                           [](const std::pair<int64_t, int64_t>& m, int64_t v) {
                             return m.second < v;
                           }) -
          minus.begin());
      for (; j < minus.size() && minus[j].first <= hi; ++j) {
        if (minus[j].second < cur) continue;
        if (minus[j].first > cur) out.emplace_back(cur, minus[j].first - 1);
        cur = std::max(cur, minus[j].second + 1);
        if (cur > hi) break;
      }
      if (cur <= hi) out.emplace_back(cur, hi);
    }
    return out;
  };
  auto intersect_interval = [](const Runs& base, int64_t lo, int64_t hi) {
    Runs out;
    for (auto [a, b] : base) {
      int64_t x = std::max(a, lo), y = std::min(b, hi);
      if (x <= y) out.emplace_back(x, y);
    }
    return out;
  };
  auto length_of = [](const Runs& r) {
    long long n = 0;
    for (auto [a, b] : r) n += b - a + 1;
    return n;
  };

  for (const auto& run : cand) ctx.out.visited += run.second - run.first + 1;

  // omega membership is an interval too
  std::pair<int64_t, int64_t> om_meet{1, 0}, om_reach{1, 0};
  if (om_meet4 >= om_m4) {
    double half = 0.5 * std::sqrt(om_meet4 - om_m4);
    om_meet = to_crange(om_sh, half);
  }
  if (om_reach4 >= om_m4) {
    double half = 0.5 * std::sqrt(om_reach4 - om_m4);
    om_reach = to_crange(om_sh, half);
  }

  Runs survivors = subtract(intersect_interval(cand, om_reach.first, om_reach.second), kills);
  bool col_outer = false, col_inner = false;
  if (count_here) {
    Runs meet = intersect_interval(cand, om_meet.first, om_meet.second);
    long long o = length_of(subtract(meet, outs));
    long long in = length_of(subtract(meet, ins));
    ctx.out.outer[l - ctx.prm.n_lo] += o;
    ctx.out.inner[l - ctx.prm.n_lo] += in;
    col_outer = o > 0;
    col_inner = in > 0;
  }
  if (ctx.prm.want_projection && l == ctx.prm.n_hi) {
    if (col_outer) ++ctx.out.proj_outer;
    if (col_inner) ++ctx.out.proj_inner;
  }
  if (survivors.empty() || l >= ctx.prm.n_hi) return;

  long long surv_len = 0;
  for (const auto& run : survivors) surv_len += run.second - run.first + 1;
  double tlo = survivors.front().first * h, thi = (survivors.back().second + 1) * h;

  // band l+1 for the children: either received from the parent or, if the
  // parent deferred (fat span), gathered here over the post-kill survivors
  std::vector<HeisEvent> self_pending;
  if (!have_pending) {
    gather_band(ctx, l + 1, u0, u_mid, du, tlo, thi, self_pending);
  }
  const std::vector<HeisEvent>& fresh = have_pending ? pending : self_pending;

  // band l+2 for the grandchildren: gather now while the span is thin,
  // otherwise defer so the next level of kills shrinks the region first
  std::vector<HeisEvent> next_pending;
  bool next_have = false;
  if (l + 2 <= ctx.prm.n_hi && ctx.prm2_gamma_hint * double(surv_len) <= 150.0) {
    gather_band(ctx, l + 2, u0, u_mid, du, tlo, thi, next_pending);
    next_have = true;
  }
  ctx.store->trim(ctx.cache_budget);

  const double du2 = 0.5 * du;
  const double h2 = 0.25 * h;
  const double margin2 = (ctx.prm.margin + ctx.D) * du2;
  const double cm2 = ctx.prm.margin * du2;
  const double kill2 = (ctx.D + 0.5 * ctx.prm.margin) * du2;
  for (int dbit = 0; dbit < 4; ++dbit) {
    int64_t a2 = 2 * a + (dbit & 1), b2 = 2 * b + (dbit >> 1);
    cplx u02(a2 * du2, b2 * du2);
    cplx u_mid2 = u02 + cplx(0.5 * du2, 0.5 * du2);
    cplx w = std::conj(u02 - u0);
    double d00 = std::imag(w * u02);
    double d10 = std::imag(w * (u02 + cplx(du2, 0)));
    double d01 = std::imag(w * (u02 + cplx(0, du2)));
    double d11 = std::imag(w * (u02 + cplx(du2, du2)));
    double dmin = std::min({d00, d10, d01, d11});
    double dmax = std::max({d00, d10, d01, d11});
    Runs childCand;
    for (const auto& run : survivors) {
      double lo = run.first * h - dmax;
      double hi = (run.second + 1) * h - dmin;
      int64_t c0 = static_cast<int64_t>(std::floor(lo / h2)) - 1;
      int64_t c1 = static_cast<int64_t>(std::floor(hi / h2)) + 1;
      if (!childCand.empty() && c0 <= childCand.back().second + 1)
        childCand.back().second = std::max(childCand.back().second, c1);
      else
        childCand.emplace_back(c0, c1);
    }
    if (childCand.empty()) continue;
    double ct_lo = childCand.front().first * h2, ct_hi = (childCand.back().second + 1) * h2;
    std::vector<WEvent> childEvs;
    childEvs.reserve(evs.size() + fresh.size() / 2);
    auto add_child_event = [&](const cplx& z, double t, double r) {
      double dx = std::max({u02.real() - z.real(), 0.0, z.real() - (u02.real() + du2)});
      double dy = std::max({u02.imag() - z.imag(), 0.0, z.imag() - (u02.imag() + du2)});
      double reach = r + margin2;
      if (dx * dx + dy * dy > reach * reach) return;
      WEvent we;
      we.z = z;
      we.t = t;
      we.r = r;
      set_interval(we, u02, u_mid2, du2, reach, cm2, kill2);
      if (we.hi < ct_lo || we.lo > ct_hi) return;
      childEvs.push_back(we);
    };
    for (const auto& e : evs) add_child_event(e.z, e.t, e.r);
    for (const auto& e : fresh) add_child_event(e.z, e.t, e.r);
    // band l+2 raw events prefiltered horizontally for the child's subtree
    std::vector<HeisEvent> childPending;
    if (next_have && !next_pending.empty()) {
      childPending.reserve(next_pending.size() / 2);
      const double reach2 = (ctx.prm.margin + ctx.D) * 0.25 * du;
      for (const auto& e : next_pending) {
        double dx = std::max({u02.real() - e.z.real(), 0.0, e.z.real() - (u02.real() + du2)});
        double dy = std::max({u02.imag() - e.z.imag(), 0.0, e.z.imag() - (u02.imag() + du2)});
        double reach = e.r + reach2;
        if (dx * dx + dy * dy > reach * reach) continue;
        childPending.push_back(e);
      }
    }
    walk_column(ctx, l + 1, a2, b2, std::move(childCand), std::move(childEvs),
                std::move(childPending), next_have);
  }
}

}  // namespace

SandwichCounts count_surviving_boxes(const HeisCellStore& store, const BoxWalkParams& params) {
  Ctx ctx;
  ctx.store = &store;
  ctx.prm = params;
  ctx.D = box_diameter_bound(0);
  ctx.prm2_gamma_hint = store.def().gamma;
  ctx.out.n_lo = params.n_lo;
  ctx.out.n_hi = params.n_hi;
  ctx.out.inner.assign(params.n_hi - params.n_lo + 1, 0);
  ctx.out.outer.assign(params.n_hi - params.n_lo + 1, 0);

  const int l0 = 1;
  const double du = std::pow(2.0, -l0);
  const double h = std::pow(4.0, -l0);
  const HeisRegion& om = params.omega;
  double R = om.radius + 2.0 * ctx.D * du;
  int64_t A0 = static_cast<int64_t>(std::floor((om.center.u.real() - R) / du));
  int64_t A1 = static_cast<int64_t>(std::floor((om.center.u.real() + R) / du));
  int64_t B0 = static_cast<int64_t>(std::floor((om.center.u.imag() - R) / du));
  int64_t B1 = static_cast<int64_t>(std::floor((om.center.u.imag() + R) / du));
  for (int64_t A = A0; A <= A1; ++A)
    for (int64_t B = B0; B <= B1; ++B) {
      cplx u0(A * du, B * du);
      cplx u_mid = u0 + cplx(0.5 * du, 0.5 * du);
      double svar = 0.5 * R * R + std::abs(om.center.u) * R + std::abs(u0) * 1.5 * du;
      int64_t c0 = static_cast<int64_t>(std::floor((om.center.s - svar) / h));
      int64_t c1 = static_cast<int64_t>(std::floor((om.center.s + svar) / h));
      std::vector<HeisEvent> raw;
      gather_band(ctx, l0, u0, u_mid, du, c0 * h, (c1 + 1) * h, raw);
      std::vector<WEvent> evs;
      evs.reserve(raw.size());
      double cm = params.margin * du, km = (ctx.D + 0.5 * params.margin) * du;
      for (const auto& e : raw) {
        WEvent we;
        we.z = e.z;
        we.t = e.t;
        we.r = e.r;
        set_interval(we, u0, u_mid, du, e.r + (params.margin + ctx.D) * du, cm, km);
        evs.push_back(we);
      }
      walk_column(ctx, l0, A, B, Runs{{c0, c1}}, std::move(evs), {}, false);
    }
  return ctx.out;
}

std::pair<long long, long long> count_surviving_boxes_at(const HeisCellStore& store, int n,
                                                         const HeisRegion& omega) {
  BoxWalkParams p;
  p.n_lo = p.n_hi = n;
  p.omega = omega;
  SandwichCounts c = count_surviving_boxes(store, p);
  return {c.inner_at(n), c.outer_at(n)};
}

}  // namespace cutlab
