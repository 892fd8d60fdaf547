#include "tvlab/runtime.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tvlab {

namespace {

int read_thread_cap() {
#ifdef _OPENMP
  int cap = omp_get_max_threads();
#else
  int cap = 1;
#endif
  if (const char* env = std::getenv("TRANSVERSAL_LAB_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1 && requested < cap) cap = requested;
  }
  return cap;
}

std::atomic<bool> g_parallel{true};

}  // namespace

int max_threads() {
  static const int cap = read_thread_cap();
  return parallel_enabled() ? cap : 1;
}

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool on) { g_parallel.store(on, std::memory_order_relaxed); }

namespace {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xd1b54a32d192ed03ULL);
  return splitmix64(s);
}

Rng::Rng(uint64_t seed) {
  uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
}

uint64_t Rng::next() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::uniform(double a, double b) { return a + (b - a) * uniform(); }

int Rng::uniform_int(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }

double Rng::normal() {
  // Marsaglia polar without caching the spare, so draws stay stateless.
  for (;;) {
    const double u = uniform(-1.0, 1.0);
    const double v = uniform(-1.0, 1.0);
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

Vec Rng::unit_vec(int d) {
  for (;;) {
    Vec v(static_cast<size_t>(d));
    for (double& x : v) x = normal();
    const double n = norm(v);
    if (n > 1e-12) return scaled(v, 1.0 / n);
  }
}

Vec Rng::in_box(const Vec& lo, const Vec& hi) {
  Vec v(lo.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = uniform(lo[i], hi[i]);
  return v;
}

}  // namespace tvlab
