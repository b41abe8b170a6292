#include "cutlab/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cutlab {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTol = 1e-10;

cplx det3(const std::array<std::array<cplx, 3>, 3>& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}
}  // namespace

CVec3 canonicalize(const CVec3& v) {
  double n = herm_norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::invalid_argument("zero or non-finite vector");
  CVec3 out{v[0] / n, v[1] / n, v[2] / n};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(out[i]) > 1e-9) {
      cplx phase = std::conj(out[i]) / std::abs(out[i]);
      for (auto& c : out) c *= phase;
      break;
    }
  }
  return out;
}

SpherePoint::SpherePoint(const CVec3& raw) {
  v = canonicalize(raw);
  if (std::abs(qform(v)) > kTol) throw std::invalid_argument("SpherePoint: q(v) != 0");
}

SpherePoint SpherePoint::from_chart(cplx x1, cplx x2) {
  double n = std::sqrt(std::norm(x1) + std::norm(x2));
  if (!(n > 0.0)) throw std::invalid_argument("from_chart: zero chart vector");
  return SpherePoint(CVec3{cplx(1, 0), x1 / n, x2 / n});
}

Chain::Chain(const CVec3& raw) {
  w = canonicalize(raw);
  if (!(qform(w) < 0.0)) throw std::invalid_argument("Chain: q(w) must be negative");
}

double form_defect(const std::array<std::array<cplx, 3>, 3>& m) {
  // (g^H J g)_{ij} = sum_k conj(m[k][i]) J_k m[k][j]
  const double J[3] = {1.0, -1.0, -1.0};
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      cplx s = 0.0;
      for (int k = 0; k < 3; ++k) s += std::conj(m[k][i]) * J[k] * m[k][j];
      cplx want = (i == j) ? cplx(J[i], 0.0) : cplx(0.0, 0.0);
      worst = std::max(worst, std::abs(s - want));
    }
  return worst;
}

GroupElement::GroupElement(const std::array<std::array<cplx, 3>, 3>& mat) : m(mat) {
  if (form_defect(m) > kTol) throw std::invalid_argument("GroupElement: g^H J g != J");
  if (std::abs(det3(m) - cplx(1, 0)) > kTol)
    throw std::invalid_argument("GroupElement: det != 1");
}

CVec3 GroupElement::apply_raw(const CVec3& x) const {
  CVec3 y{};
  for (int i = 0; i < 3; ++i) {
    cplx s = 0.0;
    for (int j = 0; j < 3; ++j) s += m[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

GroupElement GroupElement::inverse() const {
  // g^{-1} = J g^H J for isometries of <.,.>
  const double J[3] = {1.0, -1.0, -1.0};
  std::array<std::array<cplx, 3>, 3> inv{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) inv[i][j] = J[i] * std::conj(m[j][i]) * J[j];
  return GroupElement(inv);
}

GroupElement GroupElement::identity() {
  std::array<std::array<cplx, 3>, 3> id{};
  for (int i = 0; i < 3; ++i) id[i][i] = 1.0;
  return GroupElement(id);
}

SpherePoint apply_group(const GroupElement& g, const SpherePoint& x) {
  return SpherePoint(g.apply_raw(x.v));
}
Chain apply_group(const GroupElement& g, const Chain& L) { return Chain(g.apply_raw(L.w)); }

Chain radial_project(const SpherePoint& x, const SpherePoint& y) {
  const CVec3 &a = x.v, &b = y.v;
  CVec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  double cn = std::sqrt(std::norm(c[0]) + std::norm(c[1]) + std::norm(c[2]));
  if (cn < 1e-12) throw std::invalid_argument("radial_project: x and y projectively equal");
  return Chain(CVec3{std::conj(c[0]), -std::conj(c[1]), -std::conj(c[2])});
}

ChainChart chartify(const Chain& L, double tol) {
  ChainChart c;
  const CVec3& w = L.w;  // already unit-norm
  if (std::abs(w[0]) < tol) {
    c.at_infinity = true;
    double n = std::sqrt(std::norm(w[1]) + std::norm(w[2]));
    c.w1 = w[1] / n;
    c.w2 = w[2] / n;
    c.kappa2 = std::numeric_limits<double>::infinity();
    c.upsilon2 = std::numeric_limits<double>::infinity();
    return c;
  }
  c.w1 = w[1] / w[0];
  c.w2 = w[2] / w[0];
  c.kappa2 = std::norm(c.w1) + std::norm(c.w2);
  c.upsilon2 = c.kappa2 - 1.0;
  if (!(c.upsilon2 > 0.0)) throw std::invalid_argument("chartify: kappa^2 <= 1 (not a chain)");
  return c;
}

SpherePoint chain_point(const ChainChart& c, double theta) {
  cplx e = std::polar(1.0, theta);
  if (c.at_infinity) {
    // y_theta = [1 : e^{i theta} a1 : e^{i theta} a2], (a1,a2) unit, Herm-orthogonal to (w1,w2)
    cplx a1 = -std::conj(c.w2), a2 = std::conj(c.w1);
    return SpherePoint(CVec3{cplx(1, 0), e * a1, e * a2});
  }
  double up = std::sqrt(c.upsilon2);
  cplx y1 = c.w1 + up * e * (-std::conj(c.w2));
  cplx y2 = c.w2 + up * e * std::conj(c.w1);
  return SpherePoint(CVec3{cplx(c.kappa2, 0.0), y1, y2});
}

ChainProfile chain_dist_profile(const ChainChart& c) {
  if (c.at_infinity) {
    if (std::abs(c.w2) < 1e-12)
      throw std::invalid_argument("chain_dist_profile: w2 = 0 (emptiness shortcut family)");
    // d^2 = |1 - e a1|/2 with a1 = -conj(w2), so coef = |w2|/2, z = 1/a1
    double coef = std::abs(c.w2) / 2.0;
    return {coef, std::conj(-1.0 / c.w2)};
  }
  if (std::abs(c.w2) < 1e-12)
    throw std::invalid_argument("chain_dist_profile: w2 = 0 (emptiness shortcut family)");
  double up = std::sqrt(c.upsilon2);
  double coef = std::abs(c.w2) * up / (2.0 * c.kappa2);
  cplx z = (c.w1 - c.kappa2) / (std::conj(c.w2) * up);
  return {coef, z};
}

double chain_measure_arcs(const ChainChart& c,
                          const std::vector<std::pair<double, double>>& arcs) {
  double len = 0.0;
  for (const auto& [a, b] : arcs) len += std::max(0.0, b - a);
  return c.density() * len;
}

std::vector<std::pair<double, double>> annulus_arcs(const ChainProfile& p, double r1, double r2) {
  // {theta : rho1 <= |e^{i theta} - z| <= rho2}, rho_i = r_i^2 / coef.
  // |e^{i th} - z|^2 = 1 + R^2 - 2 R cos(th - arg z), monotone in cos.
  std::vector<std::pair<double, double>> arcs;
  if (!(r2 > 0.0) || r2 < r1) return arcs;
  double rho1 = (r1 <= 0.0) ? 0.0 : r1 * r1 / p.coef;
  double rho2 = r2 * r2 / p.coef;
  double R = std::abs(p.z);
  if (R < 1e-300) {
    if (rho1 <= 1.0 && 1.0 <= rho2) arcs.emplace_back(0.0, 2.0 * kPi);
    return arcs;
  }
  double hi = (1.0 + R * R - rho1 * rho1) / (2.0 * R);
  double lo = (1.0 + R * R - rho2 * rho2) / (2.0 * R);
  if (lo > 1.0 || hi < -1.0) return arcs;
  bool hi_clamped = hi >= 1.0, lo_clamped = lo <= -1.0;
  double phi_lo = hi_clamped ? 0.0 : std::acos(std::clamp(hi, -1.0, 1.0));
  double phi_hi = lo_clamped ? kPi : std::acos(std::clamp(lo, -1.0, 1.0));
  if (!(phi_hi > phi_lo)) return arcs;
  double base = std::arg(p.z);
  if (hi_clamped && lo_clamped) {
    arcs.emplace_back(0.0, 2.0 * kPi);
  } else if (hi_clamped) {
    arcs.emplace_back(base - phi_hi, base + phi_hi);
  } else if (lo_clamped) {
    arcs.emplace_back(base + phi_lo, base + 2.0 * kPi - phi_lo);
  } else {
    arcs.emplace_back(base + phi_lo, base + phi_hi);
    arcs.emplace_back(base - phi_hi, base - phi_lo);
  }
  return arcs;
}

GroupElement k_rotation_to_base(const SpherePoint& x) {
  // want g = diag(1, U), det U = 1, U (x1,x2)^T = (|x0-scaled| phase...) mapping
  // x = [x0 : x1 : x2] (|x1|^2+|x2|^2 = |x0|^2) to [1:1:0].
  // First scale so x0 real positive: canonical rep has that when x0 != 0.
  CVec3 v = x.v;
  if (std::abs(v[0]) < 1e-12) throw std::invalid_argument("k_rotation_to_base: x0 = 0");
  cplx phase = std::conj(v[0]) / std::abs(v[0]);
  for (auto& c : v) c *= phase;
  double s = std::abs(v[0]);
  cplx a = v[1] / s, b = v[2] / s;  // |a|^2+|b|^2 = 1
  // U0 = [[conj a, conj b], [-b, a]] is unitary, det = 1? det = conj(a) a + conj(b) b = 1. yes.
  // U0 (a, b)^T = (1, 0)^T.
  std::array<std::array<cplx, 3>, 3> g{};
  g[0][0] = 1.0;
  g[1][1] = std::conj(a);
  g[1][2] = std::conj(b);
  g[2][1] = -b;
  g[2][2] = a;
  return GroupElement(g);
}

GroupElement su_map_point(const SpherePoint& x, const SpherePoint& y) {
  // Build Lorentz-orthonormal-ish triples (v0, v1, v2) and (w0, w1, w2) with
  // Gram [[0,1,0],[1,0,0],[0,0,-1]], v0 ~ x, w0 ~ y; g = W V^{-1}.
  auto build = [](const CVec3& nullvec) {
    std::array<CVec3, 3> basis;
    basis[0] = nullvec;
    // partner null vector: pick among fixed sphere points the farthest
    const CVec3 cands[3] = {CVec3{cplx(1, 0), cplx(-1, 0), cplx(0, 0)},
                            CVec3{cplx(1, 0), cplx(0, 0), cplx(-1, 0)},
                            CVec3{cplx(1, 0), cplx(0, 1), cplx(0, 0)}};
    const CVec3* best = &cands[0];
    double bestv = 0.0;
    for (const auto& c : cands) {
      double v = std::abs(lorentz(c, nullvec));
      if (v > bestv) {
        bestv = v;
        best = &c;
      }
    }
    CVec3 v1 = *best;
    cplx d = lorentz(v1, nullvec);
    for (auto& c : v1) c /= d;  // <v1, v0> = 1
    // v2 = z - <z,v1> v0 - <z,v0> v1, then normalize to q = -1
    CVec3 z{cplx(0, 0), cplx(1, 0), cplx(0, 0)};
    cplx z1 = lorentz(z, basis[0]), z0 = lorentz(z, v1);
    CVec3 v2;
    for (int i = 0; i < 3; ++i) v2[i] = z[i] - z0 * basis[0][i] - z1 * v1[i];
    double qq = qform(v2);
    if (qq > -1e-12) {
      // z happened to be degenerate; retry with e2
      CVec3 z2{cplx(0, 0), cplx(0, 0), cplx(1, 0)};
      z1 = lorentz(z2, basis[0]);
      z0 = lorentz(z2, v1);
      for (int i = 0; i < 3; ++i) v2[i] = z2[i] - z0 * basis[0][i] - z1 * v1[i];
      qq = qform(v2);
    }
    double nn = std::sqrt(-qq);
    for (auto& c : v2) c /= nn;
    basis[1] = v1;
    basis[2] = v2;
    return basis;
  };
  auto V = build(x.v);
  auto W = build(y.v);
  // g = W * V^{-1}; with matching Grams, V^{-1} = G0^{-1} V^* J ... build directly:
  // For any u: u = sum_i alpha_i V_i with alpha from Gram solves. G0 = [[0,1,0],[1,0,0],[0,0,-1]]
  // alpha0 = <u, V1>, alpha1 = <u, V0>, alpha2 = -<u, V2>. Then g u = sum alpha_i W_i.
  std::array<std::array<cplx, 3>, 3> g{};
  // columns of g = image of e_j
  for (int j = 0; j < 3; ++j) {
    CVec3 e{cplx(0, 0), cplx(0, 0), cplx(0, 0)};
    e[j] = 1.0;
    cplx a0 = lorentz(e, V[1]);
    cplx a1 = lorentz(e, V[0]);
    cplx a2 = -lorentz(e, V[2]);
    for (int i = 0; i < 3; ++i) g[i][j] = a0 * W[0][i] + a1 * W[1][i] + a2 * W[2][i];
  }
  // unimodular normalization: divide by cube root of det
  cplx d = det3(g);
  cplx croot = std::polar(std::pow(std::abs(d), 1.0 / 3.0), std::arg(d) / 3.0);
  for (auto& row : g)
    for (auto& c : row) c /= croot;
  return GroupElement(g);
}

double chain_annulus_mass(const Chain& L, const SpherePoint& x, double r, double delta) {
  if (!(delta > 0.0) || !(delta <= r) || !(r <= kAnnulusR0))
    throw std::invalid_argument("chain_annulus_mass: need 0 < delta <= r <= r0");
  GroupElement g = k_rotation_to_base(x);
  Chain Lr = apply_group(g, L);
  ChainChart c = chartify(Lr);
  if (std::abs(c.w2) < 1e-12) {
    // w2 = 0 after rotating x to [1:1:0]: y1 is constant along the chain, so
    // d(x, y_theta) is constant; the annulus holds all of the chain or none.
    double d0sq;
    if (c.at_infinity) {
      d0sq = 0.5;  // <x, y_theta> = 1, norms sqrt2 each
    } else {
      d0sq = std::abs(cplx(c.kappa2, 0.0) - std::conj(c.w1)) / (2.0 * c.kappa2);
    }
    double d0 = std::sqrt(d0sq);
    return (r <= d0 && d0 <= r + delta) ? chain_total_mass(c) : 0.0;
  }
  ChainProfile p = chain_dist_profile(c);
  auto arcs = annulus_arcs(p, r, r + delta);
  return chain_measure_arcs(c, arcs);
}

// ---- stereographic chart --------------------------------------------------

namespace {
const double kInvSqrt2 = 0.70710678118654752440;
// original coords of the q'-basis
const CVec3 kF0{cplx(kInvSqrt2, 0), cplx(0, 0), cplx(kInvSqrt2, 0)};
const CVec3 kF1{cplx(0, 0), cplx(1, 0), cplx(0, 0)};
const CVec3 kF2{cplx(kInvSqrt2, 0), cplx(0, 0), cplx(-kInvSqrt2, 0)};

CVec3 qprime_to_orig(const CVec3& a) {
  CVec3 out;
  for (int i = 0; i < 3; ++i) out[i] = a[0] * kF0[i] + a[1] * kF1[i] + a[2] * kF2[i];
  return out;
}
CVec3 orig_to_qprime(const CVec3& v) {
  // F unitary: inverse = conjugate transpose; columns of F are f0,f1,f2
  CVec3 out;
  out[0] = std::conj(kF0[0]) * v[0] + std::conj(kF0[1]) * v[1] + std::conj(kF0[2]) * v[2];
  out[1] = std::conj(kF1[0]) * v[0] + std::conj(kF1[1]) * v[1] + std::conj(kF1[2]) * v[2];
  out[2] = std::conj(kF2[0]) * v[0] + std::conj(kF2[1]) * v[1] + std::conj(kF2[2]) * v[2];
  return out;
}
}  // namespace

StereoChart StereoChart::standard() { return StereoChart(GroupElement::identity()); }

StereoChart StereoChart::at(const SpherePoint& x) {
  SpherePoint x_std(qprime_to_orig(CVec3{cplx(1, 0), cplx(0, 0), cplx(0, 0)}));
  return StereoChart(su_map_point(x, x_std));
}

SpherePoint StereoChart::from_heis(const HeisPoint& h) const {
  CVec3 a{cplx(0.5 * std::norm(h.u), h.s), std::conj(h.u), cplx(1, 0)};
  CVec3 orig = qprime_to_orig(a);
  return SpherePoint(pre.inverse().apply_raw(orig));
}

HeisPoint StereoChart::to_heis(const SpherePoint& p) const {
  CVec3 a = orig_to_qprime(pre.apply_raw(p.v));
  if (std::abs(a[2]) < 1e-9 * herm_norm(a))
    throw std::invalid_argument("to_heis: point is the chart anchor");
  cplx a0 = a[0] / a[2], a1 = a[1] / a[2];
  return HeisPoint(std::conj(a1), std::imag(a0));
}

SpherePoint StereoChart::anchor() const {
  CVec3 orig = qprime_to_orig(CVec3{cplx(1, 0), cplx(0, 0), cplx(0, 0)});
  return SpherePoint(pre.inverse().apply_raw(orig));
}

// ---- measures and sampling ------------------------------------------------

double lens_area_unit(double rho) {
  if (rho <= 0.0) return 0.0;
  if (rho >= 2.0) return kPi;  // second disk swallows the unit disk
  // standard two-circle intersection, centers at distance 1, radii 1 and rho;
  // acos(1 - rho^2/2) written as 2 asin(rho/2) for stability at small rho
  double alpha = 2.0 * std::asin(std::min(1.0, 0.5 * rho));
  double beta = std::acos(std::min(1.0, 0.5 * rho));
  double tri = 0.5 * rho * std::sqrt(std::max(0.0, 4.0 - rho * rho));
  return alpha + rho * rho * beta - tri;
}

double sphere_ball_volume(double r) {
  if (r <= 0.0) return 0.0;
  return kSphereTotalMass * lens_area_unit(2.0 * r * r) / kPi;
}

SpherePoint sample_sphere_uniform(Rng& rng) {
  double g[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& x : g) {
      x = rng.normal();
      n2 += x * x;
    }
  } while (n2 < 1e-200);
  double inv = 1.0 / std::sqrt(n2);
  return SpherePoint::from_chart(cplx(g[0], g[1]) * inv, cplx(g[2], g[3]) * inv);
}

SpherePoint sample_visual_ball(const SpherePoint& center, double r, Rng& rng) {
  // In the frame where center = [1:1:0], the ball is {y : |1 - y1| <= 2 r^2}
  // and uniform-on-S3 means y1 uniform on the unit disk, phase of y2 uniform.
  GroupElement g = k_rotation_to_base(center);
  GroupElement ginv = g.inverse();
  double rho = std::min(2.0, 2.0 * r * r);
  double xlo = 1.0 - rho, xr = std::min(1.0, rho);
  for (int it = 0; it < 100000; ++it) {
    double xx = rng.uniform(std::max(-1.0, xlo), 1.0);
    double yy = rng.uniform(-xr, xr);
    cplx y1(xx, yy);
    if (std::norm(y1) > 1.0) continue;
    if (std::norm(y1 - 1.0) > rho * rho) continue;
    double rem = std::sqrt(std::max(0.0, 1.0 - std::norm(y1)));
    cplx y2 = std::polar(rem, rng.uniform(0.0, 2.0 * kPi));
    return SpherePoint(ginv.apply_raw(SpherePoint::from_chart(y1, y2).v));
  }
  throw std::runtime_error("sample_visual_ball: rejection failed");
}

}  // namespace cutlab
