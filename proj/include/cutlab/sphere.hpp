#pragma once

#include <array>
#include <complex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cutlab/heis.hpp"
#include "cutlab/rng.hpp"

namespace cutlab {

// Geometry of the visual 3-sphere S^3 = {q = 0} in P^2_C, where
// q(x) = |x0|^2 - |x1|^2 - |x2|^2 is the signature-(1,2) form. The visual
// metric is d(u,v) = sqrt(|<u,v>| / (||u|| ||v||)); it has Hausdorff
// dimension 4 and chains (projective lines cut by S^3) have dimension 2.

using CVec3 = std::array<cplx, 3>;

inline cplx herm_dot(const CVec3& u, const CVec3& v) {
  return u[0] * std::conj(v[0]) + u[1] * std::conj(v[1]) + u[2] * std::conj(v[2]);
}
inline cplx lorentz(const CVec3& u, const CVec3& v) {
  return u[0] * std::conj(v[0]) - u[1] * std::conj(v[1]) - u[2] * std::conj(v[2]);
}
inline double qform(const CVec3& u) { return std::real(lorentz(u, u)); }
inline double herm_norm(const CVec3& u) {
  return std::sqrt(std::norm(u[0]) + std::norm(u[1]) + std::norm(u[2]));
}
inline std::pair<cplx, cplx> forms(const CVec3& u, const CVec3& v) {
  return {herm_dot(u, v), lorentz(u, v)};
}

inline double wedge_norm(const CVec3& u, const CVec3& v) {
  double n2 = std::norm(u[0]) + std::norm(u[1]) + std::norm(u[2]);
  double m2 = std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]);
  double w2 = n2 * m2 - std::norm(herm_dot(u, v));
  return std::sqrt(std::max(0.0, w2));
}

inline double de_dist(const CVec3& u, const CVec3& v) {
  return wedge_norm(u, v) / (herm_norm(u) * herm_norm(v));
}

inline double visual_dist_raw(const CVec3& u, const CVec3& v) {
  return std::sqrt(std::abs(lorentz(u, v)) / (herm_norm(u) * herm_norm(v)));
}

// Canonical representative: unit Hermitian norm, first component of modulus
// above tolerance rotated to be real positive.
CVec3 canonicalize(const CVec3& v);

struct SpherePoint {
  CVec3 v;
  SpherePoint() : v{cplx(1, 0), cplx(1, 0), cplx(0, 0)} { v = canonicalize(v); }
  explicit SpherePoint(const CVec3& raw);
  // [1 : x1 : x2] with |x1|^2 + |x2|^2 = 1 (renormalized).
  static SpherePoint from_chart(cplx x1, cplx x2);
};

struct Chain {
  CVec3 w;  // q(w) < 0 strictly
  explicit Chain(const CVec3& raw);
};

inline double visual_dist(const SpherePoint& a, const SpherePoint& b) {
  return visual_dist_raw(a.v, b.v);
}

struct GroupElement {
  std::array<std::array<cplx, 3>, 3> m;
  // Validates g^H J g = J (J = diag(1,-1,-1)) and det g = 1 to 1e-10.
  explicit GroupElement(const std::array<std::array<cplx, 3>, 3>& mat);
  CVec3 apply_raw(const CVec3& x) const;
  GroupElement inverse() const;  // J g^H J for form isometries
  static GroupElement identity();
};

double form_defect(const std::array<std::array<cplx, 3>, 3>& m);  // ||g^H J g - J||_max

SpherePoint apply_group(const GroupElement& g, const SpherePoint& x);
Chain apply_group(const GroupElement& g, const Chain& L);

// pi_x(y) = x^perp  cap  y^perp, as a chain representative built from the
// plain (unconjugated) cross product c = x X y via
// kappa = (conj c0, -conj c1, -conj c2); then <kappa,x> = <kappa,y> = 0
// identically and q(kappa) < 0.
Chain radial_project(const SpherePoint& x, const SpherePoint& y);

inline double dist_to_chain(const SpherePoint& x, const Chain& L) {
  return std::abs(lorentz(x.v, L.w)) / (herm_norm(x.v) * herm_norm(L.w));
}

// Chart form of a chain: w ~ [1 : w1 : w2] with kappa^2 = |w1|^2+|w2|^2 > 1.
// Chains with w0 = 0 (the limiting family) get kappa2 = +inf and density 1/2;
// they are parametrized by y_theta = [0-chart] separately.
struct ChainChart {
  bool at_infinity = false;  // w0 == 0 family
  cplx w1, w2;
  double kappa2 = 0.0, upsilon2 = 0.0;
  double density() const { return at_infinity ? 0.5 : upsilon2 / (2.0 * kappa2); }
};

ChainChart chartify(const Chain& L, double tol = 1e-9);

SpherePoint chain_point(const ChainChart& c, double theta);

// d([1:1:0], y_theta)^2 = coef * |e^{i theta} - z|; requires w2 != 0.
struct ChainProfile {
  double coef;
  cplx z;
};
ChainProfile chain_dist_profile(const ChainChart& c);

// H^2 mass (Sum diam^2 convention) of a set of theta-arcs: density * total length.
double chain_measure_arcs(const ChainChart& c, const std::vector<std::pair<double, double>>& arcs);
inline double chain_total_mass(const ChainChart& c) {
  return c.density() * 6.283185307179586476925286766559;
}

// Arcs {theta : r1 <= d(x, y_theta) <= r2} for profile-form chains; exact
// circle-circle intersection angles.
std::vector<std::pair<double, double>> annulus_arcs(const ChainProfile& p, double r1, double r2);

// eta_L(A(x, r, delta)) with A = {y : r <= d(x,y) <= r+delta}. Exact.
// Preconditions per the annulus estimate: 0 < delta <= r <= r0.
inline constexpr double kAnnulusR0 = 0.35;
double chain_annulus_mass(const Chain& L, const SpherePoint& x, double r, double delta);

// Element of the compact stabilizer K of o=[1:0:0] (block-diag unitary)
// mapping x to [1:1:0]. K preserves d, d_E and the Lebesgue measure.
GroupElement k_rotation_to_base(const SpherePoint& x);

// SU(1,2) element mapping x to y (projectively), built by matching
// hyperbolic bases; exact form isometry up to roundoff.
GroupElement su_map_point(const SpherePoint& x, const SpherePoint& y);

// ---- Heisenberg stereographic chart -------------------------------------
// Standard chart: coordinates where q'(a) = 2 Re(conj(a0) a2) - |a1|^2 via
// the unitary basis f0=(e0+e2)/sqrt2, f1=e1, f2=(e0-e2)/sqrt2. The deleted
// point is x_std = [1:0:0]_q' and the origin image is [0:0:1]_q'.
struct StereoChart {
  GroupElement pre;  // SU(1,2) element applied before the standard chart
  explicit StereoChart(const GroupElement& g) : pre(g) {}
  static StereoChart standard();
  // anchored at x: composes su_map_point(x, x_std).
  static StereoChart at(const SpherePoint& x);

  SpherePoint from_heis(const HeisPoint& h) const;
  HeisPoint to_heis(const SpherePoint& p) const;  // throws if p is the anchor
  SpherePoint anchor() const;                     // the deleted point
};

// ---- measures and sampling ----------------------------------------------

// Area of disk(0,1) /\ disk(center at distance 1, radius rho); stable for
// small rho.
double lens_area_unit(double rho);

// f(r) = H(B(x,r)) with H normalized so lim f(r)/r^4 = 1; total mass 1/2.
double sphere_ball_volume(double r);
inline constexpr double kSphereTotalMass = 0.5;

SpherePoint sample_sphere_uniform(Rng& rng);
// exact uniform (w.r.t. H) point in a visual ball
SpherePoint sample_visual_ball(const SpherePoint& center, double r, Rng& rng);

}  // namespace cutlab
