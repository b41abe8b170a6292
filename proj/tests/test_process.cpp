#include <cmath>
#include <cstdio>
#include <fstream>

#include "cutlab/estimators.hpp"
#include "cutlab/process.hpp"
#include "doctest.h"

using namespace cutlab;

TEST_CASE("band weights and means") {
  // integral of r^-5 over [2^-k, 2^-k+1): (15/64) 16^k
  CHECK(band_weight(1) == doctest::Approx(15.0 / 4.0).epsilon(1e-12));
  // Koranyi ball radius 2 has H = 16; gamma=1, k=1 -> 60
  HeisRegion reg{HeisPoint(cplx(0, 0), 0), 2.0};
  CHECK(band_mean(1.0, heis_region_mass(reg), 1) == doctest::Approx(60.0).epsilon(1e-12));
  CHECK(band_mean(0.0, heis_region_mass(reg), 1) == 0.0);
  CHECK(band_mean(2.0, heis_region_mass(reg), 1) ==
        doctest::Approx(2.0 * band_mean(1.0, heis_region_mass(reg), 1)).epsilon(1e-12));
}

TEST_CASE("beta_n") {
  CHECK(beta_n_heis(1.0, 3) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(beta_n_heis(1.0, 0) == 1.0);
  CHECK(beta_n_heis(2.5, 2) == doctest::Approx(std::pow(2.0, 5.0)).epsilon(1e-12));
  CHECK(beta_n_sphere(1.0, 0) == 1.0);
  // log2(beta_n)/n increases monotonically toward gamma
  double prev = 0.0;
  for (int n = 6; n <= 14; ++n) {
    double ratio = std::log2(beta_n_sphere(1.0, n)) / n;
    CHECK(ratio > prev);
    CHECK(ratio < 1.0);
    prev = ratio;
  }
  CHECK(prev > 0.95);
}

TEST_CASE("radius inverse CDF matches the band law") {
  // KS test at the 99% level against F(r) = (a - r^-4)/(a-b)
  Rng rng(5);
  const int k = 3, N = 20000;
  std::vector<double> rs;
  for (int i = 0; i < N; ++i) rs.push_back(band_radius_from_u(k, rng.u01()));
  std::sort(rs.begin(), rs.end());
  double a = std::pow(16.0, k), b = a / 16.0;
  double dmax = 0.0;
  for (int i = 0; i < N; ++i) {
    CHECK(rs[i] >= std::pow(2.0, -k) - 1e-12);
    CHECK(rs[i] < std::pow(2.0, 1 - k) + 1e-12);
    double F = (a - std::pow(rs[i], -4.0)) / (a - b);
    dmax = std::max(dmax, std::max(std::abs(F - double(i) / N), std::abs(F - double(i + 1) / N)));
  }
  CHECK(dmax < 1.628 / std::sqrt(double(N)));
}

TEST_CASE("eager sampling: determinism, budget, counts") {
  HeisProcessDef def{1.0, 12345, 3, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
  ProcessSample s1 = sample_process_heis(def);
  ProcessSample s2 = sample_process_heis(def);
  REQUIRE(s1.heis_bands.size() == s2.heis_bands.size());
  save_sample(s1, "/tmp/cutlab_s1.bin");
  save_sample(s2, "/tmp/cutlab_s2.bin");
  std::ifstream f1("/tmp/cutlab_s1.bin", std::ios::binary), f2("/tmp/cutlab_s2.bin", std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
  std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
  CHECK(b1 == b2);  // bit-for-bit identical

  // round trip
  ProcessSample back = load_sample("/tmp/cutlab_s1.bin");
  CHECK(back.total_events() == s1.total_events());
  CHECK(back.gamma == s1.gamma);
  REQUIRE(!s1.heis_bands[2].empty());
  CHECK(back.heis_bands[2][0].r == s1.heis_bands[2][0].r);
  CHECK(back.heis_bands[2][0].z == s1.heis_bands[2][0].z);

  // budget rejection
  CHECK_THROWS(sample_process_heis(HeisProcessDef{1.0, 1, 12,
                                                  HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}}));
  // all radii respect their bands and the window holds all events
  for (int k = 1; k <= 3; ++k)
    for (const auto& e : s1.heis_bands[k - 1]) {
      CHECK(e.r >= std::pow(2.0, -k));
      CHECK(e.r < std::pow(2.0, 1 - k));
      CHECK(koranyi_dist(HeisPoint(e.z, e.t), def.window.center) <= def.window.radius + 1e-12);
    }
}

TEST_CASE("eager sample equals lazy cells on queries") {
  HeisProcessDef def{1.5, 777, 4, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
  ProcessSample eager = sample_process_heis(def);
  HeisCellStore store(def);
  Rng rng(9);
  for (int trial = 0; trial < 400; ++trial) {
    HeisPoint p(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-0.5, 0.5));
    int n = 1 + static_cast<int>(rng.u01() * 4);
    CHECK(sample_survives(eager, p, n) == heis_survives(store, p, n));
  }
  // fiber masses agree too (exact identical interval unions)
  for (int trial = 0; trial < 60; ++trial) {
    cplx u(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
    double a = fiber_mass(eager, u, 4, -1.0, 1.0);
    double b = fiber_mass(store, u, 4, -1.0, 1.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("survives: monotone nesting and event membership") {
  HeisProcessDef def{2.0, 31, 4, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
  ProcessSample s = sample_process_heis(def);
  // center of an event of band <= n is dead at that level
  for (int k = 1; k <= 4; ++k)
    for (size_t i = 0; i < std::min<size_t>(s.heis_bands[k - 1].size(), 10); ++i) {
      const auto& e = s.heis_bands[k - 1][i];
      CHECK(!sample_survives(s, HeisPoint(e.z, e.t), k));
    }
  // E_{n+1} subset of E_n
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    HeisPoint p(cplx(rng.uniform(-1, 1), rng.uniform(-1, 1)), rng.uniform(-0.5, 0.5));
    for (int n = 1; n < 4; ++n)
      if (sample_survives(s, p, n + 1)) CHECK(sample_survives(s, p, n));
  }
  // empty sample: everything survives, mu_n = beta_n
  ProcessSample empty;
  empty.gamma = 1.0;
  empty.n_max = 3;
  empty.heis_bands.resize(3);
  HeisPoint p0(cplx(0.1, 0.1), 0.0);
  CHECK(sample_survives(empty, p0, 3));
  CHECK(mu_n_density(empty, p0, 3) == doctest::Approx(8.0));
}

TEST_CASE("martingale normalization E mu_n = 1") {
  // empirical mean of mu_n over seeds within 3 sigma of 1
  const int T = 4000, n = 4;
  HeisPoint p(cplx(0.3, 0.2), -0.1);
  double beta = beta_n_heis(1.0, n);
  long alive = 0;
  for (int t = 0; t < T; ++t) {
    HeisProcessDef def{1.0, 500000ull + t, n, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
    HeisCellStore store(def);
    alive += heis_survives(store, p, n);
  }
  double mean_mu = beta * double(alive) / T;
  double psurv = 1.0 / beta;
  double se = beta * std::sqrt(psurv * (1 - psurv) / T);
  CHECK(std::abs(mean_mu - 1.0) < 3.0 * se);
}

TEST_CASE("spatial independence of band increments over separated points") {
  // conditional on B_n, survival of band n+1 at points separated by > 2^{1-n}
  // is independent; correlation over resamples within 3/sqrt(T)
  const int n = 3, T = 1500;
  HeisPoint p(cplx(-0.5, 0.0), 0.0), q(cplx(0.5, 0.0), 0.1);
  double sum_a = 0, sum_b = 0, sum_ab = 0;
  for (int t = 0; t < T; ++t) {
    HeisProcessDef def{1.0, 888, n + 1, HeisRegion{HeisPoint(cplx(0, 0), 0), 2.0}};
    def.stream_tag = hash_key({0xBEEFull, static_cast<uint64_t>(t)});
    HeisCellStore store(def);
    // survival against band n+1 only
    bool pa = true, qa = true;
    double rmax = std::pow(2.0, -n);
    store.for_each_near(n + 1, p, rmax, [&](const HeisEvent& e) {
      if (koranyi_dist(p, HeisPoint(e.z, e.t)) <= e.r) pa = false;
    });
    store.for_each_near(n + 1, q, rmax, [&](const HeisEvent& e) {
      if (koranyi_dist(q, HeisPoint(e.z, e.t)) <= e.r) qa = false;
    });
    sum_a += pa;
    sum_b += qa;
    sum_ab += pa && qa;
  }
  double ma = sum_a / T, mb = sum_b / T, mab = sum_ab / T;
  double cov = mab - ma * mb;
  double rho = cov / std::sqrt(ma * (1 - ma) * mb * (1 - mb));
  CHECK(std::abs(rho) <= 3.0 / std::sqrt(double(T)));
}

TEST_CASE("sphere eager bands") {
  SphereProcessDef def{1.0, 99, 3, 0};
  ProcessSample s = sample_process_sphere(def);
  CHECK(s.sphere_bands.size() == 3);
  // deterministic
  ProcessSample s2 = sample_process_sphere(def);
  CHECK(s.sphere_bands[2].size() == s2.sphere_bands[2].size());
  save_sample(s, "/tmp/cutlab_sph.bin");
  ProcessSample back = load_sample("/tmp/cutlab_sph.bin");
  CHECK(back.total_events() == s.total_events());
  REQUIRE(!back.sphere_bands[1].empty());
  CHECK(visual_dist(back.sphere_bands[1][0].y, s.sphere_bands[1][0].y) < 1e-9);
  // mean count sanity over a few seeds
  double want = band_mean(1.0, kSphereTotalMass, 3);
  double sum = 0;
  const int S = 60;
  for (int i = 0; i < S; ++i) {
    SphereProcessDef d2{1.0, 4000ull + i, 3, 0};
    sum += sphere_band_global(d2, 3).size();
  }
  CHECK(std::abs(sum / S - want) < 4.0 * std::sqrt(want / S));
  // mu_n on the sphere uses the lens-form beta
  SpherePoint far = SpherePoint::from_chart(cplx(-1, 0), cplx(0, 0));
  double mu = mu_n_density(s, far, 3);
  CHECK((mu == 0.0 || mu == doctest::Approx(beta_n_sphere(1.0, 3))));
}
