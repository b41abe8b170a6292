#pragma once

#include <cstdint>
#include <vector>

#include "cutlab/heis.hpp"
#include "cutlab/process.hpp"

namespace cutlab {

// Left-translated ("twisted") dyadic tiling of the Heisenberg group: the
// level-n box of index (a,b,c) is p0 * ([0,2^-n)^2 x [0,4^-n)) with
// p0 = ((a+ib) 2^-n, c 4^-n). The family partitions C x R at every level and
// each box has Koranyi diameter <= 40^{1/4} 2^-n; a Euclidean cell of the
// same shape would have diameter ~ sqrt(size) away from the center axis.

struct TwistedBoxIndex {
  int n;
  int64_t a, b, c;
  bool operator==(const TwistedBoxIndex&) const = default;
};

TwistedBoxIndex twisted_box_index(const HeisPoint& p, int n);
HeisPoint twisted_box_corner(const TwistedBoxIndex& idx);   // p0
HeisPoint twisted_box_center(const TwistedBoxIndex& idx);   // p0 * (2^{-n-1}(1+i), 4^{-n}/2)
bool twisted_box_contains(const TwistedBoxIndex& idx, const HeisPoint& p);

inline double box_diameter_bound(int n) {
  return 2.5148668593658707531 * std::pow(2.0, -n);  // 40^{1/4} 2^-n
}

// first-fit greedy maximal radius-separated subset in input order
struct Net {
  std::vector<size_t> kept;  // indices into the input list
  double radius;
};

template <class DistFn>
Net greedy_net(size_t n_points, double radius, DistFn&& dist) {
  Net net{{}, radius};
  for (size_t i = 0; i < n_points; ++i) {
    bool ok = true;
    for (size_t j : net.kept)
      if (dist(i, j) <= radius) {
        ok = false;
        break;
      }
    if (ok) net.kept.push_back(i);
  }
  return net;
}

// number of distinct level-n boxes containing at least one of the points
long long count_boxes_of_points(const std::vector<HeisPoint>& pts, int n);

// ---- sandwich counting over the lazy process -------------------------------

struct BoxWalkParams {
  int n_lo = 4;
  int n_hi = 8;
  double margin = box_diameter_bound(0);  // count margin C (per level: C 2^-n)
  HeisRegion omega;                       // counting region
  bool want_projection = false;           // accumulate projected u-cells at n_hi
};

struct SandwichCounts {
  int n_lo = 0, n_hi = 0;
  std::vector<long long> inner, outer;  // boxes meeting omega passing each test
  long long proj_outer = 0, proj_inner = 0;
  long long visited = 0;

  long long inner_at(int n) const { return inner[n - n_lo]; }
  long long outer_at(int n) const { return outer[n - n_lo]; }
};

// Enumerates, depth first over u-columns, all level-n boxes that can meet the
// surviving set; counts per level n in [n_lo, n_hi]:
//   outer: center survives all radii deflated by margin*2^-n  (>= #boxes meeting E_n)
//   inner: center survives all radii inflated by margin*2^-n  (<= #boxes meeting E_n)
// A subtree is pruned only when an event covers the whole box under every
// deflation a deeper level could use.
SandwichCounts count_surviving_boxes(const HeisCellStore& store, const BoxWalkParams& params);

// spec-shaped convenience: single level n
std::pair<long long, long long> count_surviving_boxes_at(const HeisCellStore& store, int n,
                                                         const HeisRegion& omega);

}  // namespace cutlab
