#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>

namespace cutlab {

using cplx = std::complex<double>;

// First Heisenberg group C x R with the twisted product and the Koranyi
// gauge ||(u,s)|| = (|u|^4 + 4 s^2)^{1/4}. All operations here are exact
// closed forms; tolerances appear only in tests.

struct HeisPoint {
  cplx u{0.0, 0.0};
  double s = 0.0;

  HeisPoint() = default;
  HeisPoint(cplx u_, double s_) : u(u_), s(s_) {
    if (!std::isfinite(u.real()) || !std::isfinite(u.imag()) || !std::isfinite(s))
      throw std::invalid_argument("HeisPoint: non-finite component");
  }
  HeisPoint(double x, double y, double s_) : HeisPoint(cplx(x, y), s_) {}
};

inline HeisPoint heis_mul(const HeisPoint& p, const HeisPoint& q) {
  return HeisPoint(p.u + q.u, p.s + q.s + std::imag(std::conj(p.u) * q.u));
}

inline HeisPoint heis_inv(const HeisPoint& p) { return HeisPoint(-p.u, -p.s); }

inline double koranyi_norm(const HeisPoint& p) {
  double m2 = std::norm(p.u);  // |u|^2
  return std::pow(m2 * m2 + 4.0 * p.s * p.s, 0.25);
}

inline double koranyi_dist(const HeisPoint& p, const HeisPoint& q) {
  return koranyi_norm(heis_mul(heis_inv(q), p));
}

inline cplx vertical_project(const HeisPoint& p) { return p.u; }

// Haar measure is Lebesgue / (pi^2/4), so that H(B(x,r)) = r^4 exactly.
inline constexpr double kKoranyiUnitBallLebVolume = 2.4674011002723396547;  // pi^2/4

inline double heis_ball_haar(double r) { return r * r * r * r; }

struct KoranyiBall {
  HeisPoint center;
  double radius;
  KoranyiBall(HeisPoint c, double r) : center(c), radius(r) {
    if (!(r > 0.0) || !(r <= 1.0))
      throw std::invalid_argument("KoranyiBall: radius must be in (0,1]");
  }
};

struct FiberInterval {
  double center;       // t*
  double half_length;  // h >= 0
};

// Intersection of the vertical line {u} x R with a Koranyi ball.
// Membership:  |u-z|^4 + 4 (t - t_i - Im(conj(z) u))^2 <= r^4.
inline std::optional<FiberInterval> fiber_ball_interval(cplx u, const KoranyiBall& b) {
  const cplx z = b.center.u;
  const double r = b.radius;
  const double a2 = std::norm(u - z);
  const double r2 = r * r;
  if (a2 > r2) return std::nullopt;  // |u-z| > r
  const double h = 0.5 * std::sqrt(std::max(0.0, r2 * r2 - a2 * a2));
  const double tc = b.center.s + std::imag(std::conj(z) * u);
  return FiberInterval{tc, h};
}

// Fiber measure of a ball centered on a fiber at horizontal offset u,
// with the convention c1 = 1 (eta_u = Lebesgue length on the fiber).
inline double slice_ball_mass(cplx u, double r) {
  if (!(r > 0.0) || !(r <= 1.0))
    throw std::invalid_argument("slice_ball_mass: r must be in (0,1]");
  const double a2 = std::norm(u);
  const double r2 = r * r;
  if (a2 > r2) return 0.0;
  return std::sqrt(std::max(0.0, r2 * r2 - a2 * a2));
}

}  // namespace cutlab
