#include <cmath>

#include "cutlab/estimators.hpp"
#include "doctest.h"

using namespace cutlab;

namespace {
HeisRegion window2() { return HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}; }
HeisRegion omega1() { return HeisRegion{HeisPoint(cplx(0, 0), 0), 1.0}; }
}  // namespace

TEST_CASE("fit_dimension on exact data") {
  std::vector<std::pair<int, double>> pts;
  for (int n = 2; n <= 8; ++n) pts.emplace_back(n, std::pow(4.0, n));
  ScalingFit f = fit_dimension(pts);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.stderr_slope == doctest::Approx(0.0).epsilon(1e-9));

  pts.clear();
  for (int n = 2; n <= 8; ++n) pts.emplace_back(n, 4.0 * std::pow(8.0, n));
  f = fit_dimension(pts);
  CHECK(f.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(2.0).epsilon(1e-10));

  // alternating +-10% multiplicative noise perturbs the slope only slightly
  pts.clear();
  for (int n = 2; n <= 8; ++n)
    pts.emplace_back(n, std::pow(8.0, n) * (1.0 + ((n % 2) ? 0.1 : -0.1)));
  f = fit_dimension(pts);
  CHECK(std::abs(f.slope - 3.0) < 0.05);

  CHECK_THROWS(fit_dimension({{1, 2.0}, {2, 4.0}}));
  CHECK_THROWS(fit_dimension({{1, 2.0}, {2, 0.0}, {3, 8.0}}));
}

TEST_CASE("fiber_mass exact values") {
  // empty sample: X_n = beta_n * window length
  HeisProcessDef def{1.0, 99, 3, window2()};
  def.gamma = 1e-12;  // effectively no events
  HeisCellStore store(def);
  double m = fiber_mass(store, cplx(0, 0), 3, -0.5, 0.5);
  CHECK(m == doctest::Approx(beta_n_heis(1e-12, 3) * 1.0).epsilon(1e-9));

  // single ball at the origin removes [-1/2, 1/2] from the fiber u = 0
  ProcessSample s;
  s.gamma = 1.0;
  s.n_max = 3;
  s.heis_bands.resize(3);
  s.heis_bands[0].push_back(HeisEvent{cplx(0, 0), 0.0, 1.0});
  double x = fiber_mass(s, cplx(0, 0), 3, -1.0, 1.0);
  CHECK(x == doctest::Approx(8.0 * (2.0 - 1.0)).epsilon(1e-12));
  // fully covered window
  double x2 = fiber_mass(s, cplx(0, 0), 3, -0.4, 0.4);
  CHECK(x2 == 0.0);

  // agreement with brute-force t-sampling on random fibers
  HeisProcessDef def2{1.5, 424, 4, window2()};
  ProcessSample ps = sample_process_heis(def2);
  Rng rng(17);
  for (int trial = 0; trial < 25; ++trial) {
    cplx u(rng.uniform(-0.7, 0.7), rng.uniform(-0.7, 0.7));
    double exact = fiber_mass(ps, u, 4, -1.0, 1.0);
    const int G = 20000;
    long alive = 0;
    for (int g = 0; g < G; ++g) {
      double t = -1.0 + 2.0 * (g + 0.5) / G;
      if (sample_survives(ps, HeisPoint(u, t), 4)) ++alive;
    }
    double brute = beta_n_heis(1.5, 4) * 2.0 * alive / G;
    CHECK(std::abs(exact - brute) <= beta_n_heis(1.5, 4) * 2.0 * 30.0 / G + 1e-9);
  }
}

TEST_CASE("martingale z-statistic") {
  HeisProcessDef def{1.0, 31337, 5, window2()};
  double z = martingale_check_z(def, cplx(0.1, -0.2), 4, 400, -1.0, 1.0);
  CHECK(std::abs(z) < 4.0);
  // degenerate gamma: exactly zero
  HeisProcessDef dz{0.0, 1, 5, window2()};
  CHECK(martingale_check_z(dz, cplx(0, 0), 4, 100, -1.0, 1.0) == 0.0);
}

TEST_CASE("fiber_dim: full fiber has slope exactly 2") {
  HeisProcessDef def{1e-12, 3, 6, window2()};
  HeisCellStore store(def);
  ScalingFit f = fiber_dim(store, cplx(0.2, 0.1), 2, 6, -1.0, 1.0);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-9));  // 4^n * 2 cells exactly
}

TEST_CASE("fiber_dim with a single ball stays near 2 away from the hole") {
  // one ball removes an interval; cofinite fiber keeps slice dimension 2
  HeisProcessDef def{1e-12, 3, 6, window2()};
  HeisCellStore store(def);
  // exact counts computed through the complement logic
  ScalingFit f = fiber_dim(store, cplx(0.5, 0.0), 2, 6, -1.0, 1.0);
  CHECK(std::abs(f.slope - 2.0) < 0.1);
}

TEST_CASE("projection counts: empty sample covers the disk") {
  HeisProcessDef def{1e-12, 3, 5, window2()};
  HeisCellStore store(def);
  ProjectionCounts pc = projection_counts(store, 5, omega1(), 0.25, -1.0, 1.0);
  // area of the unit disk, within a boundary layer
  CHECK(pc.area_outer > 2.6);
  CHECK(pc.area_outer < 3.7);
  CHECK(pc.count_inner == pc.count_outer);
  for (double m : pc.field.mass) CHECK(m > 0.0);
  HolderModulus hm = holder_modulus(pc.field);
  CHECK(hm.flat);  // constant field
}

TEST_CASE("holder modulus of a smooth nonconstant field") {
  FiberMassField f;
  f.grid_step = 1.0 / 32;
  f.n = 6;
  for (int i = -16; i <= 16; ++i)
    for (int j = -16; j <= 16; ++j) {
      cplx u(i * f.grid_step, j * f.grid_step);
      if (std::abs(u) > 1.0) continue;
      f.us.push_back(u);
      f.mass.push_back(1.0 + u.real());  // Lipschitz: exponent ~ 1
    }
  HolderModulus hm = holder_modulus(f);
  CHECK(!hm.flat);
  CHECK(hm.exponent > 0.6);
  CHECK(hm.exponent < 1.4);
}

TEST_CASE("chain projection control: smooth image vs 2-dimensional chain") {
  Chain L(CVec3{cplx(1, 0), cplx(0.4, 0.2), cplx(std::sqrt(2.0), 0)});
  SpherePoint anchor = SpherePoint::from_chart(cplx(1, 0), cplx(0, 0));
  ChainControl cc = chain_projection_control(L, anchor, 3, 7);
  CHECK(cc.own_box_dim.slope > 1.7);
  CHECK(cc.own_box_dim.slope < 2.3);
  CHECK(cc.projection_dim.slope <= 1.2);
  CHECK(cc.projection_dim.slope > 0.5);
}
