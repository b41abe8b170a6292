#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cutlab/covers.hpp"
#include "cutlab/process.hpp"
#include "cutlab/sphere.hpp"

namespace cutlab {

// Adaptive tracking of the sphere cut-out: a hierarchy of greedy 2^-k nets of
// the (conservatively) surviving region of an observation ball V. Band-k
// events are sampled lazily inside balls around the level-(k-1) net points,
// with ownership dedup so the union is a faithful Poisson realization; only
// straddling events are carried between levels. Net points carry outer/inner
// flags (margin 2 * 2^-k on radii), giving sandwich-style net counts.

struct SphereRefineParams {
  SphereProcessDef def;           // gamma, seed, n_max >= n_hi
  SpherePoint omega_center;      // observation ball V
  double omega_radius = 0.35;
  int n_lo = 3, n_hi = 6;
  int children_per_parent = 48;
  uint64_t est_seed = 1;          // refinement candidate stream
};

struct SphereLevelView {
  int level;
  const std::vector<SpherePoint>& pts;    // track-alive net points
  const std::vector<uint8_t>& outer;      // outer flag per point
  const std::vector<uint8_t>& inner;
};

struct SphereRefineCounts {
  int n_lo, n_hi;
  std::vector<long long> outer, inner;  // per level in [n_lo, n_hi]
  bool extinct = false;                 // no outer-alive point at n_hi
};

// Runs the refinement; on_level is called once per level in [n_lo, n_hi]
// (views are only valid during the call).
SphereRefineCounts sphere_refine(const SphereRefineParams& prm,
                                 const std::function<void(const SphereLevelView&)>& on_level);

// greedy radius-net count of points on a projective line (d_E metric),
// hash-accelerated through the two affine charts of P^1
long long p1_net_count(const SpherePoint& axis, const std::vector<CVec3>& images, double radius);

// count of distinct level-n twisted boxes of stereographic chart images
long long chart_box_count(const StereoChart& chart, const std::vector<SpherePoint>& pts, int n);

}  // namespace cutlab
