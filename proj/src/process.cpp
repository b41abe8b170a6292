#include "cutlab/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace cutlab {

namespace {

double simpson(const std::function<double(double)>& f, double a, double m, double b, double fa,
               double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& f, double a, double m, double b, double fa,
             double fm, double fb, double whole, double eps, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, lm, m, fa, flm, fm);
  double right = simpson(f, m, rm, b, fm, frm, fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * eps)
    return left + right + (left + right - whole) / 15.0;
  return adapt(f, a, lm, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
         adapt(f, m, rm, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double eps) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  return adapt(f, a, m, b, fa, fm, fb, simpson(f, a, m, b, fa, fm, fb), eps, 48);
}

uint64_t u64(int64_t v) { return static_cast<uint64_t>(v); }

}  // namespace

double beta_n_heis(double gamma, int n) {
  if (n <= 0) return 1.0;
  return std::pow(2.0, gamma * n);
}

double beta_n_sphere(double gamma, int n) {
  if (n <= 0) return 1.0;
  double a = std::pow(2.0, -n);
  // substitute r = e^x so the near-0 1/r tail integrates smoothly
  auto g = [](double x) {
    double r = std::exp(x);
    return sphere_ball_volume(r) / std::pow(r, 4.0);
  };
  double integral = integrate(g, std::log(a), 0.0, 1e-12 * n);
  return std::exp(gamma * integral);
}

// ---- Heisenberg cells -------------------------------------------------------

int heis_cell_level(int k) { return std::max(k - 2, 0); }

namespace {

void generate_heis_cell(const HeisProcessDef& def, int k, int64_t A, int64_t B, int64_t C,
                        std::vector<HeisEvent>& out) {
  const int L = heis_cell_level(k);
  const double du = std::pow(2.0, -L);
  const double dt = std::pow(4.0, -L);
  const cplx u0(A * du, B * du);
  const double leb = du * du * dt;
  const double lambda = def.gamma * band_weight(k) * (leb / kKoranyiUnitBallLebVolume);
  Rng rng = Rng::keyed({def.seed, def.stream_tag, 0ull, u64(k), u64(A), u64(B), u64(C)});
  long n = rng.poisson(lambda);
  out.reserve(out.size() + n);
  for (long i = 0; i < n; ++i) {
    cplx u = u0 + cplx(rng.u01() * du, rng.u01() * du);
    double tau = (C + rng.u01()) * dt;
    double s = tau + std::imag(std::conj(u0) * (u - u0));
    double r = band_radius_from_u(k, rng.u01());
    HeisPoint p(u, s);
    if (koranyi_dist(p, def.window.center) <= def.window.radius)
      out.push_back(HeisEvent{u, s, r});
  }
}

}  // namespace

const std::vector<HeisEvent>& HeisCellStore::cell(int k, int64_t A, int64_t B, int64_t C) const {
  CellKey key{k, A, B, C};
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  std::vector<HeisEvent> ev;
  generate_heis_cell(def_, k, A, B, C, ev);
  cached_events_ += ev.size();
  return cache_.emplace(key, std::move(ev)).first->second;
}

void HeisCellStore::trim(size_t max_events) const {
  if (cached_events_ > max_events) {
    cache_.clear();
    cached_events_ = 0;
  }
}

void HeisCellStore::for_each_near(int k, const HeisPoint& p, double rho,
                                  const std::function<void(const HeisEvent&)>& fn) const {
  const int L = heis_cell_level(k);
  const double du = std::pow(2.0, -L);
  const double dt = std::pow(4.0, -L);
  int64_t A0 = static_cast<int64_t>(std::floor((p.u.real() - rho) / du));
  int64_t A1 = static_cast<int64_t>(std::floor((p.u.real() + rho) / du));
  int64_t B0 = static_cast<int64_t>(std::floor((p.u.imag() - rho) / du));
  int64_t B1 = static_cast<int64_t>(std::floor((p.u.imag() + rho) / du));
  for (int64_t A = A0; A <= A1; ++A)
    for (int64_t B = B0; B <= B1; ++B) {
      cplx u0(A * du, B * du);
      double dd = std::abs(p.u - u0);
      double center = p.s + std::imag(std::conj(p.u - u0) * p.u);
      double half = 0.5 * rho * rho + dd * rho;
      int64_t C0 = static_cast<int64_t>(std::floor((center - half) / dt));
      int64_t C1 = static_cast<int64_t>(std::floor((center + half) / dt));
      for (int64_t C = C0; C <= C1; ++C)
        for (const auto& e : cell(k, A, B, C)) fn(e);
    }
}

void HeisCellStore::for_each_near_fiber(int k, cplx u, double hr, double tlo, double thi,
                                        const std::function<void(const HeisEvent&)>& fn) const {
  const int L = heis_cell_level(k);
  const double du = std::pow(2.0, -L);
  const double dt = std::pow(4.0, -L);
  const double rmax = std::pow(2.0, 1 - k);
  const double h = 0.5 * rmax * rmax;  // max half-length of a fiber interval
  int64_t A0 = static_cast<int64_t>(std::floor((u.real() - hr) / du));
  int64_t A1 = static_cast<int64_t>(std::floor((u.real() + hr) / du));
  int64_t B0 = static_cast<int64_t>(std::floor((u.imag() - hr) / du));
  int64_t B1 = static_cast<int64_t>(std::floor((u.imag() + hr) / du));
  for (int64_t A = A0; A <= A1; ++A)
    for (int64_t B = B0; B <= B1; ++B) {
      cplx u0(A * du, B * du);
      // event t_e = t* - Im(conj(z) u), |Im(conj(z) u)| <= |z - u| |u| <= hr |u|
      double slack = h + hr * std::abs(u) + std::abs(u0) * 1.5 * du;
      int64_t C0 = static_cast<int64_t>(std::floor((tlo - slack) / dt));
      int64_t C1 = static_cast<int64_t>(std::floor((thi + slack) / dt));
      for (int64_t C = C0; C <= C1; ++C)
        for (const auto& e : cell(k, A, B, C)) fn(e);
    }
}

void HeisCellStore::for_each_cell_in(
    int k, double ulo_re, double uhi_re, double ulo_im, double uhi_im, double s_lo, double s_hi,
    const std::function<void(const std::vector<HeisEvent>&)>& fn) const {
  const int L = heis_cell_level(k);
  const double du = std::pow(2.0, -L);
  const double dt = std::pow(4.0, -L);
  int64_t A0 = static_cast<int64_t>(std::floor(ulo_re / du));
  int64_t A1 = static_cast<int64_t>(std::floor(uhi_re / du));
  int64_t B0 = static_cast<int64_t>(std::floor(ulo_im / du));
  int64_t B1 = static_cast<int64_t>(std::floor(uhi_im / du));
  for (int64_t A = A0; A <= A1; ++A)
    for (int64_t B = B0; B <= B1; ++B) {
      cplx u0(A * du, B * du);
      double shear = std::abs(u0) * 1.5 * du;
      int64_t C0 = static_cast<int64_t>(std::floor((s_lo - shear) / dt));
      int64_t C1 = static_cast<int64_t>(std::floor((s_hi + shear) / dt));
      for (int64_t C = C0; C <= C1; ++C) fn(cell(k, A, B, C));
    }
}

bool heis_survives(const HeisCellStore& store, const HeisPoint& p, int n) {
  for (int k = 1; k <= n; ++k) {
    bool dead = false;
    double rmax = std::pow(2.0, 1 - k);
    store.for_each_near(k, p, rmax, [&](const HeisEvent& e) {
      if (dead) return;
      if (koranyi_dist(p, HeisPoint(e.z, e.t)) <= e.r) dead = true;
    });
    if (dead) return false;
  }
  return true;
}

double heis_mu_n(const HeisCellStore& store, const HeisPoint& p, int n) {
  return heis_survives(store, p, n) ? beta_n_heis(store.def().gamma, n) : 0.0;
}

// ---- sphere global bands ----------------------------------------------------

std::vector<SphereEvent> sphere_band_global(const SphereProcessDef& def, int k) {
  Rng rng = Rng::keyed({def.seed, def.stream_tag, 1ull, u64(k)});
  double lambda = def.gamma * kSphereTotalMass * band_weight(k);
  long n = rng.poisson(lambda);
  std::vector<SphereEvent> out;
  out.reserve(n);
  for (long i = 0; i < n; ++i) {
    SpherePoint y = sample_sphere_uniform(rng);
    double r = band_radius_from_u(k, rng.u01());
    out.push_back(SphereEvent{y, r});
  }
  return out;
}

bool sphere_survives(const std::vector<std::vector<SphereEvent>>& bands, const SpherePoint& p,
                     int n) {
  for (int k = 1; k <= n && k <= static_cast<int>(bands.size()); ++k)
    for (const auto& e : bands[k - 1])
      if (visual_dist(p, e.y) <= e.r) return false;
  return true;
}

// ---- eager sample ------------------------------------------------------------

size_t ProcessSample::total_events() const {
  size_t n = 0;
  for (const auto& b : heis_bands) n += b.size();
  for (const auto& b : sphere_bands) n += b.size();
  return n;
}

double expected_event_count_heis(double gamma, const HeisRegion& window, int n_max) {
  double total = 0.0;
  for (int k = 1; k <= n_max; ++k) total += band_mean(gamma, heis_region_mass(window), k);
  return total;
}

double expected_event_count_sphere(double gamma, int n_max) {
  double total = 0.0;
  for (int k = 1; k <= n_max; ++k) total += band_mean(gamma, kSphereTotalMass, k);
  return total;
}

ProcessSample sample_process_heis(const HeisProcessDef& def, double budget_events) {
  if (!(def.gamma > 0.0))
    throw std::invalid_argument("sample_process: gamma must be positive");
  if (def.n_max > 20) throw std::invalid_argument("sample_process: n_max > 20");
  double expect = expected_event_count_heis(def.gamma, def.window, def.n_max);
  if (expect > budget_events)
    throw std::invalid_argument("sample_process: expected event count " + std::to_string(expect) +
                                " exceeds budget " + std::to_string(budget_events));
  ProcessSample s;
  s.space = SpaceTag::Heis;
  s.gamma = def.gamma;
  s.seed = def.seed;
  s.n_max = def.n_max;
  s.window = def.window;
  s.heis_bands.resize(def.n_max);
  const double R = def.window.radius;
  const cplx uc = def.window.center.u;
  const double sc = def.window.center.s;
  for (int k = 1; k <= def.n_max; ++k) {
    const int L = heis_cell_level(k);
    const double du = std::pow(2.0, -L);
    int64_t A0 = static_cast<int64_t>(std::floor((uc.real() - R) / du));
    int64_t A1 = static_cast<int64_t>(std::floor((uc.real() + R) / du));
    int64_t B0 = static_cast<int64_t>(std::floor((uc.imag() - R) / du));
    int64_t B1 = static_cast<int64_t>(std::floor((uc.imag() + R) / du));
    const double dt = std::pow(4.0, -L);
    auto& band = s.heis_bands[k - 1];
    for (int64_t A = A0; A <= A1; ++A)
      for (int64_t B = B0; B <= B1; ++B) {
        cplx u0(A * du, B * du);
        double svar = 0.5 * R * R + std::abs(uc) * R + std::abs(u0) * 1.5 * du;
        int64_t C0 = static_cast<int64_t>(std::floor((sc - svar) / dt));
        int64_t C1 = static_cast<int64_t>(std::floor((sc + svar) / dt));
        for (int64_t C = C0; C <= C1; ++C) generate_heis_cell(def, k, A, B, C, band);
      }
  }
  return s;
}

ProcessSample sample_process_sphere(const SphereProcessDef& def, double budget_events) {
  if (!(def.gamma > 0.0))
    throw std::invalid_argument("sample_process: gamma must be positive");
  if (def.n_max > 20) throw std::invalid_argument("sample_process: n_max > 20");
  double expect = expected_event_count_sphere(def.gamma, def.n_max);
  if (expect > budget_events)
    throw std::invalid_argument("sample_process: expected event count " + std::to_string(expect) +
                                " exceeds budget " + std::to_string(budget_events));
  ProcessSample s;
  s.space = SpaceTag::Sphere;
  s.gamma = def.gamma;
  s.seed = def.seed;
  s.n_max = def.n_max;
  for (int k = 1; k <= def.n_max; ++k) s.sphere_bands.push_back(sphere_band_global(def, k));
  return s;
}

bool sample_survives(const ProcessSample& s, const HeisPoint& p, int n) {
  for (int k = 1; k <= n && k <= static_cast<int>(s.heis_bands.size()); ++k)
    for (const auto& e : s.heis_bands[k - 1])
      if (koranyi_dist(p, HeisPoint(e.z, e.t)) <= e.r) return false;
  return true;
}

bool sample_survives(const ProcessSample& s, const SpherePoint& p, int n) {
  return sphere_survives(s.sphere_bands, p, n);
}

double mu_n_density(const ProcessSample& s, const HeisPoint& p, int n) {
  return sample_survives(s, p, n) ? beta_n_heis(s.gamma, n) : 0.0;
}

double mu_n_density(const ProcessSample& s, const SpherePoint& p, int n) {
  return sample_survives(s, p, n) ? beta_n_sphere(s.gamma, n) : 0.0;
}

// ---- serialization -----------------------------------------------------------

namespace {
void put_f64(std::string& buf, double v) {
  // little-endian IEEE 754
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}
void put_u64(std::string& buf, uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
double get_f64(const char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}
uint64_t get_u64(const char* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return bits;
}
}  // namespace

void save_sample(const ProcessSample& s, const std::string& path) {
  nlohmann::json hdr;
  hdr["format"] = "cutout-lab-sample";
  hdr["version"] = 1;
  hdr["space"] = (s.space == SpaceTag::Heis) ? "heis" : "sphere";
  hdr["gamma"] = s.gamma;
  hdr["seed"] = s.seed;
  hdr["n_max"] = s.n_max;
  if (s.space == SpaceTag::Heis) {
    hdr["window"] = {s.window.center.u.real(), s.window.center.u.imag(), s.window.center.s,
                     s.window.radius};
  }
  std::string body;
  if (s.space == SpaceTag::Heis) {
    for (const auto& band : s.heis_bands) {
      put_u64(body, band.size());
      for (const auto& e : band) {
        put_f64(body, e.z.real());
        put_f64(body, e.z.imag());
        put_f64(body, e.t);
        put_f64(body, e.r);
      }
    }
  } else {
    for (const auto& band : s.sphere_bands) {
      put_u64(body, band.size());
      for (const auto& e : band) {
        for (int i = 0; i < 3; ++i) {
          put_f64(body, e.y.v[i].real());
          put_f64(body, e.y.v[i].imag());
        }
        put_f64(body, e.r);
      }
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("save_sample: cannot open " + path);
  out << hdr.dump() << "\n";
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
}

ProcessSample load_sample(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_sample: cannot open " + path);
  std::string header;
  std::getline(in, header);
  nlohmann::json hdr = nlohmann::json::parse(header);
  if (hdr.at("format") != "cutout-lab-sample" || hdr.at("version") != 1)
    throw std::runtime_error("load_sample: unknown format/version");
  ProcessSample s;
  s.gamma = hdr.at("gamma").get<double>();
  s.seed = hdr.at("seed").get<uint64_t>();
  s.n_max = hdr.at("n_max").get<int>();
  std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const char* p = rest.data();
  const char* end = p + rest.size();
  auto need = [&](size_t n) {
    if (p + n > end) throw std::runtime_error("load_sample: truncated file");
  };
  if (hdr.at("space") == "heis") {
    s.space = SpaceTag::Heis;
    auto w = hdr.at("window");
    s.window.center = HeisPoint(cplx(w[0].get<double>(), w[1].get<double>()), w[2].get<double>());
    s.window.radius = w[3].get<double>();
    for (int k = 1; k <= s.n_max; ++k) {
      need(8);
      uint64_t n = get_u64(p);
      p += 8;
      std::vector<HeisEvent> band;
      band.reserve(n);
      for (uint64_t i = 0; i < n; ++i) {
        need(32);
        band.push_back(HeisEvent{cplx(get_f64(p), get_f64(p + 8)), get_f64(p + 16), get_f64(p + 24)});
        p += 32;
      }
      s.heis_bands.push_back(std::move(band));
    }
  } else {
    s.space = SpaceTag::Sphere;
    for (int k = 1; k <= s.n_max; ++k) {
      need(8);
      uint64_t n = get_u64(p);
      p += 8;
      std::vector<SphereEvent> band;
      band.reserve(n);
      for (uint64_t i = 0; i < n; ++i) {
        need(56);
        CVec3 v{cplx(get_f64(p), get_f64(p + 8)), cplx(get_f64(p + 16), get_f64(p + 24)),
                cplx(get_f64(p + 32), get_f64(p + 40))};
        band.push_back(SphereEvent{SpherePoint(v), get_f64(p + 48)});
        p += 56;
      }
      s.sphere_bands.push_back(std::move(band));
    }
  }
  return s;
}

}  // namespace cutlab
