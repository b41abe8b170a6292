#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cutlab/heis.hpp"
#include "cutlab/rng.hpp"
#include "cutlab/sphere.hpp"

namespace cutlab {

// Poisson cut-out process with intensity gamma * H (x) dr/r^5 on (0,1],
// radii grouped in dyadic bands k = 1..n_max with r in [2^-k, 2^-k+1).
// Events are generated from (seed, space, band, cell)-keyed substreams so
// that any spatial subset can be produced lazily, deterministically and
// schedule-independently; an eager ProcessSample is the concatenation of
// all cells of each band over the sampling window.

inline double band_weight(int k) {
  // integral of r^-5 dr over [2^-k, 2^-k+1) = (15/64) 16^k
  return (15.0 / 64.0) * std::pow(16.0, k);
}

inline double band_mean(double gamma, double region_mass, int k) {
  return gamma * region_mass * band_weight(k);
}

// inverse CDF of the r^-5 law restricted to band k
inline double band_radius_from_u(int k, double u) {
  double a = std::pow(16.0, k);        // (2^-k)^-4
  double b = a / 16.0;                 // (2^-k+1)^-4
  return std::pow(a - u * (a - b), -0.25);
}

double beta_n_heis(double gamma, int n);    // exactly 2^(gamma n)
double beta_n_sphere(double gamma, int n);  // quadrature of the lens form

// ---- Heisenberg process ---------------------------------------------------

struct HeisRegion {
  HeisPoint center{cplx(0, 0), 0.0};
  double radius = 1.0;  // Koranyi ball
};
inline double heis_region_mass(const HeisRegion& r) { return heis_ball_haar(r.radius); }

struct HeisEvent {
  cplx z;
  double t;
  double r;
};

struct HeisProcessDef {
  double gamma = 1.0;
  uint64_t seed = 1;
  int n_max = 8;
  HeisRegion window;  // sampling window (holds all events)
  uint64_t stream_tag = 0;  // extra key component (0 = the base realization)
};

// Generation cells for band k are twisted boxes at level max(k-2, 0); all
// events of one cell come from one keyed substream.
int heis_cell_level(int k);

struct CellKey {
  int32_t k;
  int64_t a, b, c;
  bool operator==(const CellKey&) const = default;
};
struct CellKeyHash {
  size_t operator()(const CellKey& key) const {
    return hash_key({static_cast<uint64_t>(key.k), static_cast<uint64_t>(key.a),
                     static_cast<uint64_t>(key.b), static_cast<uint64_t>(key.c)});
  }
};

class HeisCellStore {
 public:
  explicit HeisCellStore(const HeisProcessDef& def) : def_(def) {}
  const HeisProcessDef& def() const { return def_; }

  // events of band k whose generation cell is (A,B,C) at level heis_cell_level(k)
  const std::vector<HeisEvent>& cell(int k, int64_t A, int64_t B, int64_t C) const;

  // visit every event of band k with center possibly within Koranyi distance
  // rho of p (superset; callers re-test distances)
  void for_each_near(int k, const HeisPoint& p, double rho,
                     const std::function<void(const HeisEvent&)>& fn) const;

  // visit every event of band k with |z - u| <= hr and t within [tlo, thi]
  // inflated by the vertical reach of such balls (for fiber queries)
  void for_each_near_fiber(int k, cplx u, double hr, double tlo, double thi,
                           const std::function<void(const HeisEvent&)>& fn) const;

  // enumerate generation cells (A,B,C) of band k intersecting the horizontal
  // square [ulo,uhi]^2-ish box and tau range; used by the box walker
  void for_each_cell_in(int k, double ulo_re, double uhi_re, double ulo_im, double uhi_im,
                        double s_lo, double s_hi,
                        const std::function<void(const std::vector<HeisEvent>&)>& fn) const;

  size_t cached_events() const { return cached_events_; }
  void trim(size_t max_events) const;

 private:
  HeisProcessDef def_;
  mutable std::unordered_map<CellKey, std::vector<HeisEvent>, CellKeyHash> cache_;
  mutable size_t cached_events_ = 0;
};

bool heis_survives(const HeisCellStore& store, const HeisPoint& p, int n);
double heis_mu_n(const HeisCellStore& store, const HeisPoint& p, int n);

// ---- Sphere process (eager part) -----------------------------------------

struct SphereEvent {
  SpherePoint y;
  double r;
};

struct SphereProcessDef {
  double gamma = 1.0;
  uint64_t seed = 1;
  int n_max = 6;
  uint64_t stream_tag = 0;
  // window is always the whole sphere: every ball of radius <= 1 can touch
  // any observation region (the visual diameter is 1)
};

std::vector<SphereEvent> sphere_band_global(const SphereProcessDef& def, int k);

bool sphere_survives(const std::vector<std::vector<SphereEvent>>& bands, const SpherePoint& p,
                     int n);

// ---- eager sample + serialization -----------------------------------------

enum class SpaceTag : uint8_t { Heis = 0, Sphere = 1 };

struct ProcessSample {
  SpaceTag space = SpaceTag::Heis;
  double gamma = 1.0;
  uint64_t seed = 1;
  int n_max = 5;
  HeisRegion window;                                // heis only
  std::vector<std::vector<HeisEvent>> heis_bands;   // 1-based band index k-1
  std::vector<std::vector<SphereEvent>> sphere_bands;

  size_t total_events() const;
};

double expected_event_count_heis(double gamma, const HeisRegion& window, int n_max);
double expected_event_count_sphere(double gamma, int n_max);

// Throws if the expected event count exceeds budget_events.
ProcessSample sample_process_heis(const HeisProcessDef& def, double budget_events = 2.5e7);
ProcessSample sample_process_sphere(const SphereProcessDef& def, double budget_events = 2.5e7);

bool sample_survives(const ProcessSample& s, const HeisPoint& p, int n);
bool sample_survives(const ProcessSample& s, const SpherePoint& p, int n);
double mu_n_density(const ProcessSample& s, const HeisPoint& p, int n);
double mu_n_density(const ProcessSample& s, const SpherePoint& p, int n);

// versioned header (JSON line) + per-band little-endian f64 arrays
void save_sample(const ProcessSample& s, const std::string& path);
ProcessSample load_sample(const std::string& path);

}  // namespace cutlab
