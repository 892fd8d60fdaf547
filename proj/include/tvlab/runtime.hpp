#pragma once

#include <cstdint>

#include "tvlab/geom.hpp"

namespace tvlab {

// Worker cap for OpenMP regions. Honors the TRANSVERSAL_LAB_THREADS
// environment variable (read once); otherwise the OpenMP default.
int max_threads();

// Run-time switch between the OpenMP kernels and the serial reference path.
// The two must produce identical results; tests assert this.
bool parallel_enabled();
void set_parallel(bool on);

struct SerialGuard {
  explicit SerialGuard(bool serial = true) : prev_(parallel_enabled()) {
    set_parallel(!serial);
  }
  ~SerialGuard() { set_parallel(prev_); }

 private:
  bool prev_;
};

// Stream derivation so that independent tasks (restarts, trials, subsets)
// get decorrelated deterministic seeds.
uint64_t mix_seed(uint64_t seed, uint64_t stream);

// xoshiro256** with splitmix64 seeding. Hand-rolled so that documents are
// byte-identical across platforms and thread counts.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();
  double uniform();                        // [0, 1)
  double uniform(double a, double b);      // [a, b)
  int uniform_int(int n);                  // [0, n)
  double normal();
  Vec unit_vec(int d);
  Vec in_box(const Vec& lo, const Vec& hi);

 private:
  uint64_t s_[4];
};

}  // namespace tvlab
