#include <cmath>

#include "cutlab/heis.hpp"
#include "cutlab/rng.hpp"
#include "doctest.h"

using namespace cutlab;

namespace {
constexpr double kTol = 1e-10;

HeisPoint random_point(Rng& rng, double box) {
  return HeisPoint(cplx(rng.uniform(-box, box), rng.uniform(-box, box)), rng.uniform(-box, box));
}
}  // namespace

TEST_CASE("group law") {
  HeisPoint p(cplx(1, 0), 0), q(cplx(0, 1), 0);
  HeisPoint r = heis_mul(p, q);
  CHECK(std::abs(r.u - cplx(1, 1)) < kTol);
  CHECK(r.s == doctest::Approx(1.0).epsilon(1e-12));

  // identity and inverse are exact
  HeisPoint a(cplx(0.3, -0.7), 2.25);
  HeisPoint e = heis_mul(HeisPoint(cplx(0, 0), 0), a);
  CHECK(e.u == a.u);
  CHECK(e.s == a.s);
  HeisPoint z = heis_mul(a, heis_inv(a));
  CHECK(z.u == cplx(0, 0));
  CHECK(z.s == 0.0);

  HeisPoint b(cplx(1, 1), 1);
  HeisPoint binv = heis_inv(b);
  CHECK(binv.u == cplx(-1, -1));
  CHECK(binv.s == -1.0);
  HeisPoint binvinv = heis_inv(binv);
  CHECK(binvinv.u == b.u);
  CHECK(binvinv.s == b.s);

  CHECK_THROWS(HeisPoint(cplx(std::nan(""), 0), 0));
}

TEST_CASE("group axioms on random triples") {
  Rng rng(42);
  for (int i = 0; i < 20000; ++i) {
    HeisPoint a = random_point(rng, 5), b = random_point(rng, 5), c = random_point(rng, 5);
    HeisPoint lhs = heis_mul(heis_mul(a, b), c);
    HeisPoint rhs = heis_mul(a, heis_mul(b, c));
    CHECK(std::abs(lhs.u - rhs.u) < 1e-12);
    CHECK(std::abs(lhs.s - rhs.s) < 1e-10);
  }
}

TEST_CASE("koranyi norm and distance") {
  CHECK(koranyi_norm(HeisPoint(cplx(1, 0), 0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(koranyi_norm(HeisPoint(cplx(0, 0), 1)) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(koranyi_norm(HeisPoint(cplx(1, 0), 1)) ==
        doctest::Approx(std::pow(5.0, 0.25)).epsilon(1e-12));
  CHECK(koranyi_norm(HeisPoint(cplx(0, 0), 0)) == 0.0);

  HeisPoint p(cplx(0.2, 0.4), -1.0);
  CHECK(koranyi_dist(p, p) == 0.0);
  CHECK(koranyi_dist(HeisPoint(cplx(0, 0), 0), HeisPoint(cplx(0, 0), 1)) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(koranyi_dist(HeisPoint(cplx(1, 0), 0), HeisPoint(cplx(0, 0), 0)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("left invariance") {
  Rng rng(7);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    HeisPoint g = random_point(rng, 10), p = random_point(rng, 10), q = random_point(rng, 10);
    double d0 = koranyi_dist(p, q);
    double d1 = koranyi_dist(heis_mul(g, p), heis_mul(g, q));
    worst = std::max(worst, std::abs(d1 - d0) / (1.0 + d0));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("fiber comparison d = sqrt(2) dE^{1/2}") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    cplx u(rng.uniform(-3, 3), rng.uniform(-3, 3));
    double s = rng.uniform(-3, 3), t = rng.uniform(-3, 3);
    double d = koranyi_dist(HeisPoint(u, s), HeisPoint(u, t));
    CHECK(d == doctest::Approx(std::sqrt(2.0) * std::sqrt(std::abs(s - t))).epsilon(1e-12));
  }
}

TEST_CASE("quotient isometry: inf over fibers attains |u-v|") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    cplx u(rng.uniform(-2, 2), rng.uniform(-2, 2));
    cplx v(rng.uniform(-2, 2), rng.uniform(-2, 2));
    // minimum over s-t of d((u,s),(v,t)) is |u-v|, attained at s-t = Im(conj(v) u)
    double smin = std::imag(std::conj(v) * u);
    double d = koranyi_dist(HeisPoint(u, smin), HeisPoint(v, 0.0));
    CHECK(d == doctest::Approx(std::abs(u - v)).epsilon(1e-10));
    double best = 1e100;
    for (int i = -100; i <= 100; ++i)
      best = std::min(best, koranyi_dist(HeisPoint(u, smin + i * 0.01), HeisPoint(v, 0.0)));
    CHECK(best >= std::abs(u - v) - 1e-12);
  }
}

TEST_CASE("vertical projection") {
  HeisPoint p(cplx(2, 3), 7);
  CHECK(vertical_project(p) == cplx(2, 3));
  CHECK(vertical_project(HeisPoint(cplx(0, 0), -5)) == cplx(0, 0));
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    HeisPoint q = random_point(rng, 2);
    double t = rng.uniform(-4, 4);
    CHECK(vertical_project(heis_mul(HeisPoint(cplx(0, 0), t), q)) == vertical_project(q));
  }
}

TEST_CASE("fiber_ball_interval") {
  auto iv = fiber_ball_interval(cplx(0, 0), KoranyiBall(HeisPoint(cplx(0, 0), 0), 1.0));
  REQUIRE(iv.has_value());
  CHECK(iv->center == doctest::Approx(0.0));
  CHECK(iv->half_length == doctest::Approx(0.5).epsilon(1e-12));

  auto gr = fiber_ball_interval(cplx(0, 0), KoranyiBall(HeisPoint(cplx(1, 0), 0), 1.0));
  REQUIRE(gr.has_value());
  CHECK(gr->half_length == doctest::Approx(0.0));

  CHECK(!fiber_ball_interval(cplx(2, 0), KoranyiBall(HeisPoint(cplx(0, 0), 0), 1.0)).has_value());

  auto hv = fiber_ball_interval(cplx(0.5, 0), KoranyiBall(HeisPoint(cplx(0, 0), 0), 1.0));
  REQUIRE(hv.has_value());
  CHECK(hv->half_length == doctest::Approx(std::sqrt(15.0) / 8.0).epsilon(1e-12));

  // endpoints sit on the sphere, interior points inside
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    HeisPoint c = random_point(rng, 1);
    double r = rng.uniform(0.05, 1.0);
    cplx u = c.u + std::polar(rng.uniform(0.0, r), rng.uniform(0.0, 6.28));
    auto f = fiber_ball_interval(u, KoranyiBall(c, r));
    REQUIRE(f.has_value());
    for (double sgn : {-1.0, 1.0}) {
      double d = koranyi_dist(HeisPoint(u, f->center + sgn * f->half_length), c);
      CHECK(d == doctest::Approx(r).epsilon(1e-9));
    }
    CHECK(koranyi_dist(HeisPoint(u, f->center), c) <= r + 1e-12);
  }
}

TEST_CASE("slice_ball_mass and Holder bound") {
  CHECK(slice_ball_mass(cplx(0, 0), 1.0) == doctest::Approx(1.0));
  CHECK(slice_ball_mass(cplx(0.3, 0.4), 0.5) == 0.0);
  CHECK(slice_ball_mass(cplx(0.5, 0), 0.5) == 0.0);  // tangency
  CHECK_THROWS(slice_ball_mass(cplx(0, 0), 1.5));

  // |m(u,r) - m(v,r)| <= C |u-v|^{1/2}; true constant <= 2 r^{3/2} <= 2
  Rng rng(17);
  double worst_ratio = 0.0;
  for (int i = 0; i < 200000; ++i) {
    double r = rng.uniform(0.05, 1.0);
    cplx u = std::polar(rng.uniform(0.0, 1.2 * r), rng.uniform(0.0, 6.29));
    cplx v = std::polar(rng.uniform(0.0, 1.2 * r), rng.uniform(0.0, 6.29));
    double diff = std::abs(slice_ball_mass(u, r) - slice_ball_mass(v, r));
    double du = std::abs(u - v);
    if (du > 1e-12) worst_ratio = std::max(worst_ratio, diff / std::sqrt(du));
  }
  CHECK(worst_ratio <= 2.0 + 1e-9);
  CHECK(worst_ratio > 0.5);
}

TEST_CASE("Haar normalization: MC volume of unit ball is pi^2/4") {
  Rng rng(23);
  const int N = 400000;
  long hits = 0;
  for (int i = 0; i < N; ++i) {
    double x = rng.uniform(-1, 1), y = rng.uniform(-1, 1), t = rng.uniform(-0.5, 0.5);
    double m2 = x * x + y * y;
    if (m2 * m2 + 4 * t * t <= 1.0) ++hits;
  }
  double vol = 4.0 * hits / N;
  double p = kKoranyiUnitBallLebVolume / 4.0;
  double se = 4.0 * std::sqrt(p * (1 - p) / N);
  CHECK(std::abs(vol - kKoranyiUnitBallLebVolume) < 3.0 * se);

  CHECK(heis_ball_haar(0.5) == doctest::Approx(0.0625));
}
