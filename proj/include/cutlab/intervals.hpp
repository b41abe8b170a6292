#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace cutlab {

// 1-D interval bookkeeping for exact fiber masses: union of closed removal
// intervals, clipped to a window, and exact counting of dyadic cells that
// meet the (open) complement.

using Interval = std::pair<double, double>;

// Sorts + merges in place; returns total covered length inside [lo,hi].
inline double covered_length(std::vector<Interval>& iv, double lo, double hi) {
  if (iv.empty() || hi <= lo) return 0.0;
  std::sort(iv.begin(), iv.end());
  double total = 0.0, curL = 0.0, curR = -1.0;
  bool open = false;
  for (const auto& [a0, b0] : iv) {
    double a = std::max(a0, lo), b = std::min(b0, hi);
    if (b <= a) continue;
    if (!open) {
      curL = a; curR = b; open = true;
    } else if (a <= curR) {
      curR = std::max(curR, b);
    } else {
      total += curR - curL;
      curL = a; curR = b;
    }
  }
  if (open) total += curR - curL;
  return total;
}

// Open gaps of [lo,hi] \ union(iv); iv must be sorted+merged (as left by
// covered_length). Degenerate gaps are dropped.
inline std::vector<Interval> complement_gaps(const std::vector<Interval>& merged,
                                             double lo, double hi) {
  std::vector<Interval> gaps;
  double cursor = lo;
  for (const auto& [a0, b0] : merged) {
    double a = std::max(a0, lo), b = std::min(b0, hi);
    if (b <= a) continue;
    if (a > cursor) gaps.emplace_back(cursor, a);
    cursor = std::max(cursor, b);
    if (cursor >= hi) break;
  }
  if (cursor < hi) gaps.emplace_back(cursor, hi);
  return gaps;
}

// Number of half-open lattice cells [j*h, (j+1)*h) meeting at least one of
// the open gaps. Gaps must be disjoint and sorted.
inline long long cells_meeting_gaps(const std::vector<Interval>& gaps, double h) {
  long long count = 0;
  long long last = INT64_MIN;
  for (const auto& [g0, g1] : gaps) {
    if (g1 <= g0) continue;
    long long j0 = static_cast<long long>(std::floor(g0 / h));
    long long j1 = static_cast<long long>(std::ceil(g1 / h)) - 1;
    if (j1 < j0) j1 = j0;
    if (j0 <= last) j0 = last + 1;
    if (j1 >= j0) {
      count += j1 - j0 + 1;
      last = j1;
    }
  }
  return count;
}

}  // namespace cutlab
