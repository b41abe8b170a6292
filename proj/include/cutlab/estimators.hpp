#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cutlab/covers.hpp"
#include "cutlab/intervals.hpp"
#include "cutlab/process.hpp"
#include "cutlab/sphere_refine.hpp"

namespace cutlab {

// Dimension and projection statistics: log-log fits of cell counts, exact
// vertical fiber masses X_n(u), martingale diagnostics, projection counts,
// Euclidean-metric dimension estimates and the sphere-side estimators.

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int n_lo = 0, n_hi = 0;
  std::vector<std::pair<int, double>> points;  // (n, log2 N)
};

// OLS of log2(N) against n; throws on fewer than 3 positive counts.
ScalingFit fit_dimension(const std::vector<std::pair<int, double>>& counts);

struct FiberMassField {
  int n = 0;
  double grid_step = 0.0;
  std::vector<cplx> us;
  std::vector<double> mass;  // X_n(u), exact
};

// ---- Heisenberg estimators --------------------------------------------------

// Exact X_n(u) = beta_n * Leb(window \ union of removal intervals); the
// interval union is exact, there is no sampling error.
double fiber_mass(const HeisCellStore& store, cplx u, int n, double win_lo, double win_hi);
double fiber_mass(const ProcessSample& s, cplx u, int n, double win_lo, double win_hi);

// conditional band-(n+1) resampling z-statistic for E(X_{n+1} | B_n) = X_n
double martingale_check_z(const HeisProcessDef& def, cplx u, int n, int trials, double win_lo,
                          double win_hi);

struct HeisBoxDim {
  ScalingFit inner, outer;
  bool extinct = false;
};
HeisBoxDim heis_box_dim(const HeisCellStore& store, int n_lo, int n_hi, const HeisRegion& omega);

struct ProjectionCounts {
  long long count_outer = 0, count_inner = 0;
  double area_outer = 0.0, area_inner = 0.0;
  FiberMassField field;
};
// surviving 2^-n u-squares of the vertical projection (sandwich via the box
// walker), plus the exact fiber-mass field on a coarser grid
ProjectionCounts projection_counts(const HeisCellStore& store, int n, const HeisRegion& omega,
                                   double field_step, double win_lo, double win_hi);

// Heisenberg dimension of the slice E cap L_u from exact dyadic 4^-n interval
// counts (a 4^-n t-interval is a fiber ball of radius ~ 2^-n).
ScalingFit fiber_dim(const HeisCellStore& store, cplx u, int n_lo, int n_hi, double win_lo,
                     double win_hi);

struct EuclidDim {
  ScalingFit headline;                // measure scaling in Euclidean balls
  std::vector<ScalingFit> brackets;   // cube-count sandwich variants
  bool extinct = false;
};
EuclidDim euclid_box_dim(const HeisCellStore& store, int n_lo, int n_hi, const HeisRegion& omega,
                         uint64_t est_seed);

struct HolderModulus {
  bool flat = false;
  double exponent = 0.0;
  long long pairs = 0;
};
HolderModulus holder_modulus(const FiberMassField& field);

// ---- sphere estimators --------------------------------------------------------

struct SphereDims {
  ScalingFit inner, outer;  // chart twisted-box counts per level
  bool extinct = false;
};
SphereDims sphere_box_dim(const SphereRefineParams& prm, const SpherePoint& chart_anchor);

struct SphereProjection {
  ScalingFit fit;          // log2 of projected-image net counts
  double image_area = 0.0; // count * 4^{-n_hi} at the top level
  double area_prev = 0.0;  // same at n_hi - 1 (stability diagnostic)
  bool extinct = false;
};
SphereProjection sphere_radial_projection_dim(const SphereRefineParams& prm,
                                              const SpherePoint& anchor);

// negative control: a bare chain as input set (no cut-out)
struct ChainControl {
  ScalingFit own_box_dim;    // visual net counts of the chain itself
  ScalingFit projection_dim; // net counts of its radial projection
};
ChainControl chain_projection_control(const Chain& L, const SpherePoint& anchor, int n_lo,
                                      int n_hi);

}  // namespace cutlab
