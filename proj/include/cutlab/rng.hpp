#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>

namespace cutlab {

// Deterministic 64-bit RNG: xoshiro256++ seeded through splitmix64.
// All distributions are hand-rolled so that streams are identical across
// platforms and compilers. Substreams are derived by hashing key tuples,
// which makes parallel generation schedule-independent.

inline uint64_t splitmix64_next(uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Fold an arbitrary key tuple into one 64-bit stream id.
inline uint64_t hash_key(std::initializer_list<uint64_t> parts) {
  uint64_t h = 0x2545f4914f6cdd1dull;
  for (uint64_t p : parts) {
    uint64_t x = p ^ (h * 0x9e3779b97f4a7c15ull);
    h ^= splitmix64_next(x) + 0x9e3779b9ull + (h << 6) + (h >> 2);
  }
  return h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t x = seed;
    for (auto& w : s_) w = splitmix64_next(x);
  }
  static Rng keyed(std::initializer_list<uint64_t> parts) {
    return Rng(hash_key(parts));
  }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in (0,1)
  double u01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  // Box-Muller; second variate cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = u01(), u2 = u01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(th);
    have_cached_ = true;
    return r * std::cos(th);
  }

  // Knuth product method, chunked so the running product never underflows.
  long poisson(double lambda) {
    long total = 0;
    while (lambda > 32.0) {
      total += poisson_small(32.0);
      lambda -= 32.0;
    }
    return total + poisson_small(lambda);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  long poisson_small(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= u01();
    } while (p > limit);
    return k - 1;
  }

  uint64_t s_[4];
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace cutlab
