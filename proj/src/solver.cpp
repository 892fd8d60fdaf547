#include "tvlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>

#include "tvlab/detail/descent.hpp"
#include "tvlab/runtime.hpp"

namespace tvlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenalty = 1e9;
constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// allocation-free distance kernels
// ---------------------------------------------------------------------------

inline double point_member_signed(const NearBall& b, const double* x, size_t d) {
  double best = kInf;
  for (const ClosedBall& p : b.parts) {
    double s = 0.0;
    const double* c = p.center.data();
    for (size_t i = 0; i < d; ++i) {
      const double t = x[i] - c[i];
      s += t * t;
    }
    best = std::min(best, std::sqrt(s) - p.radius);
  }
  return best;
}

inline double point_family_signed(const Family& f, const double* x, size_t d) {
  double worst = -kInf;
  for (const NearBall& b : f.members()) worst = std::max(worst, point_member_signed(b, x, d));
  return worst;
}

double family_scale(const Family& f) {
  double lo = kInf, hi = -kInf, rmax = 0.0;
  for (const NearBall& b : f.members())
    for (const ClosedBall& p : b.parts) {
      for (double c : p.center) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      rmax = std::max(rmax, p.radius);
    }
  return std::max(1.0, (hi - lo) + 2.0 * rmax);
}

double flat_family_signed(const Family& f, const KFlat& flat) {
  double worst = -kInf;
  for (const NearBall& b : f.members()) worst = std::max(worst, member_flat_signed(b, flat));
  return worst;
}

// ---------------------------------------------------------------------------
// chart: params = [anchor | v_1 | ... | v_k], retraction by Gram-Schmidt
// ---------------------------------------------------------------------------

struct Chart {
  int d = 0;
  int k = 0;
  int dims() const { return d * (k + 1); }
};

std::optional<KFlat> decode_chart(const Chart& ch, const Vec& params) {
  KFlat f;
  f.anchor.assign(params.begin(), params.begin() + ch.d);
  f.basis.reserve(static_cast<size_t>(ch.k));
  for (int j = 0; j < ch.k; ++j) {
    Vec v(params.begin() + ch.d * (j + 1), params.begin() + ch.d * (j + 2));
    for (const Vec& q : f.basis) axpy(v, -dot(v, q), q);
    const double n = norm(v);
    if (n < 1e-7) return std::nullopt;  // collapsed direction set
    f.basis.push_back(scaled(v, 1.0 / n));
  }
  for (const Vec& q : f.basis) axpy(f.anchor, -dot(f.anchor, q), q);
  return f;
}

Vec encode_chart(const Chart& ch, const KFlat& f) {
  Vec params;
  params.reserve(static_cast<size_t>(ch.dims()));
  params.insert(params.end(), f.anchor.begin(), f.anchor.end());
  for (const Vec& v : f.basis) params.insert(params.end(), v.begin(), v.end());
  return params;
}

// ---------------------------------------------------------------------------
// derivative-free local descent: Nelder-Mead followed by compass polish
// ---------------------------------------------------------------------------

// local descent helpers live in tvlab/detail/descent.hpp
using detail::Objective;
using detail::LocalResult;
using detail::nelder_mead;
using detail::compass_polish;

// ---------------------------------------------------------------------------
// certified convex solve for k = 0 over plain balls (ellipsoid method).
// The objective max_i (||x - c_i|| - r_i) has subgradients of norm <= 1 and
// its minimizer lies in the convex hull of the centers, which gives both the
// initial ellipsoid and the volumetric optimality gap.
// ---------------------------------------------------------------------------

struct BallsObjective {
  const std::vector<ClosedBall>* balls;
  double operator()(const Vec& x) const {
    double worst = -kInf;
    for (const ClosedBall& b : *balls) worst = std::max(worst, dist(x, b.center) - b.radius);
    return worst;
  }
};

FlatFit make_point_fit(Vec x, double value, double lb, bool certified) {
  FlatFit fit;
  fit.flat = KFlat{std::move(x), {}};
  fit.signed_value = value;
  fit.value = std::max(0.0, value);
  fit.lower_bound = lb;
  fit.certified = certified;
  return fit;
}

}  // namespace

FlatFit solve_k0_convex(const std::vector<ClosedBall>& balls, const SolveOptions& opts) {
  if (balls.empty()) throw InvalidOptions("solve_k0_convex on an empty set");
  const int d = static_cast<int>(balls.front().center.size());
  const BallsObjective fn{&balls};

  if (balls.size() == 1)
    return make_point_fit(balls.front().center, -balls.front().radius, -balls.front().radius, true);

  if (d == 1) {
    double lo = -kInf, hi = kInf;
    for (const ClosedBall& b : balls) {
      lo = std::max(lo, b.center[0] - b.radius);
      hi = std::min(hi, b.center[0] + b.radius);
    }
    const double x = 0.5 * (lo + hi), v = 0.5 * (lo - hi);
    return make_point_fit(Vec{x}, v, v, true);
  }

  Vec z = zeros(d);
  for (const ClosedBall& b : balls) axpy(z, 1.0 / static_cast<double>(balls.size()), b.center);
  double radius0 = 0.0;
  for (const ClosedBall& b : balls) radius0 = std::max(radius0, dist(z, b.center));
  if (radius0 < 1e-300) {
    const double v = fn(z);
    return make_point_fit(std::move(z), v, v, true);
  }

  const double eps_goal = std::max(1e-12, std::min(opts.tol_feas * 0.1, 1e-9 * (1.0 + radius0)));
  const double dd = static_cast<double>(d);
  const double decay = 1.0 / (2.0 * dd * (dd + 1.0));
  int iters = static_cast<int>(std::ceil(std::log(2.0 * radius0 / eps_goal) / decay)) + 8 * d;
  iters = std::min(iters, 200000);

  // Factored ellipsoid E = { z + B u : ||u|| <= 1 }. Updating B directly
  // keeps B B^T positive definite for the whole run.
  std::vector<double> B(static_cast<size_t>(d) * d, 0.0);
  for (int i = 0; i < d; ++i) B[static_cast<size_t>(i) * d + i] = radius0;

  Vec best_x = z;
  double best = fn(z);
  bool interior_opt = false;
  Vec g(static_cast<size_t>(d)), btg(static_cast<size_t>(d)), bp(static_cast<size_t>(d));
  int done = 0;
  const double shrink = dd / std::sqrt(dd * dd - 1.0);
  const double coef = 1.0 - std::sqrt((dd - 1.0) / (dd + 1.0));

  for (int it = 0; it < iters; ++it, ++done) {
    size_t arg = 0;
    double worst = -kInf;
    for (size_t i = 0; i < balls.size(); ++i) {
      const double v = dist(z, balls[i].center) - balls[i].radius;
      if (v > worst) {
        worst = v;
        arg = i;
      }
    }
    if (worst < best) {
      best = worst;
      best_x = z;
    }
    const double nz = dist(z, balls[arg].center);
    if (nz == 0.0) {  // sitting on the active center: global minimum
      interior_opt = true;
      break;
    }
    for (int i = 0; i < d; ++i)
      g[static_cast<size_t>(i)] = (z[static_cast<size_t>(i)] - balls[arg].center[static_cast<size_t>(i)]) / nz;

    double gamma2 = 0.0;
    for (int j = 0; j < d; ++j) {
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += B[static_cast<size_t>(i) * d + j] * g[static_cast<size_t>(i)];
      btg[static_cast<size_t>(j)] = s;
      gamma2 += s * s;
    }
    const double gamma = std::sqrt(gamma2);
    if (!(gamma > 1e-300) || !std::isfinite(gamma)) break;  // collapsed ellipsoid

    for (int j = 0; j < d; ++j) btg[static_cast<size_t>(j)] /= gamma;  // p = B^T g / ||B^T g||
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += B[static_cast<size_t>(i) * d + j] * btg[static_cast<size_t>(j)];
      bp[static_cast<size_t>(i)] = s;
    }
    for (int i = 0; i < d; ++i) z[static_cast<size_t>(i)] -= bp[static_cast<size_t>(i)] / (dd + 1.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        B[static_cast<size_t>(i) * d + j] =
            shrink * (B[static_cast<size_t>(i) * d + j] - coef * bp[static_cast<size_t>(i)] * btg[static_cast<size_t>(j)]);
  }

  const double gap =
      interior_opt ? 0.0 : 2.0 * radius0 * std::exp(-static_cast<double>(done) * decay);
  const double lb = best - gap - 1e-12 * (1.0 + std::abs(best));

  // Polish only sharpens the incumbent; the volumetric bound stays valid.
  LocalResult polished = compass_polish([&fn](const Vec& x) { return fn(x); }, best_x, best,
                                        0.25 * radius0, 1e-13 * (1.0 + radius0));
  return make_point_fit(std::move(polished.x), polished.fx, lb, true);
}

namespace {

// ---------------------------------------------------------------------------
// multistart descent over the chart
// ---------------------------------------------------------------------------

std::vector<int> nth_combination(int n, int k, uint64_t& state) {
  // Deterministic random k-subset of [0, n).
  std::vector<int> pool(static_cast<size_t>(n));
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    state = mix_seed(state, static_cast<uint64_t>(i) + 0x51ULL);
    const size_t j = static_cast<size_t>(state % pool.size());
    out.push_back(pool[j]);
    pool.erase(pool.begin() + static_cast<ptrdiff_t>(j));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void enumerate_combinations(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> idx(static_cast<size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  for (;;) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
    if (i < 0) break;
    ++idx[static_cast<size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
  }
}

double binomial_capped(int n, int k, double cap) {
  double v = 1.0;
  for (int i = 0; i < k; ++i) {
    v *= static_cast<double>(n - i) / static_cast<double>(i + 1);
    if (v > cap) return cap + 1.0;
  }
  return v;
}

// k-flat through the core centers of a member subset, padded with random
// directions when the affine span is too low-dimensional.
KFlat seed_flat_from_subset(const Family& f, const std::vector<int>& subset, int k, Rng& rng) {
  std::vector<Vec> pts;
  pts.reserve(subset.size());
  for (int i : subset) pts.push_back(f[static_cast<size_t>(i)].core().center);
  KFlat base = flat_through_points(pts);
  const int d = f.dim();
  int guard = 0;
  while (base.flat_dim() < k && guard++ < 64) {
    Vec v = rng.unit_vec(d);
    for (const Vec& q : base.basis) axpy(v, -dot(v, q), q);
    const double n = norm(v);
    if (n < 1e-6) continue;
    base.basis.push_back(scaled(v, 1.0 / n));
  }
  while (base.flat_dim() > k) base.basis.pop_back();
  Vec anchor = base.anchor;
  for (const Vec& q : base.basis) axpy(anchor, -dot(anchor, q), q);
  base.anchor = std::move(anchor);
  return base;
}

FlatFit multistart_descent(const Family& f, int k, const SolveOptions& opts);

std::vector<KFlat> collect_seeds(const Family& f, int k, const SolveOptions& opts) {
  const int n = static_cast<int>(f.size());
  const int d = f.dim();
  std::vector<KFlat> seeds;
  Rng rng(mix_seed(opts.seed, 0x5eedULL));

  // Flats through (k+1)-subsets of core centers.
  const int take = std::min(k + 1, n);
  if (binomial_capped(n, take, 48.0) <= 48.0) {
    enumerate_combinations(n, take, [&](const std::vector<int>& subset) {
      seeds.push_back(seed_flat_from_subset(f, subset, k, rng));
    });
  } else {
    uint64_t state = mix_seed(opts.seed, 0xc0ffeeULL);
    for (int s = 0; s < 48; ++s)
      seeds.push_back(seed_flat_from_subset(f, nth_combination(n, take, state), k, rng));
  }

  // Hierarchical anchor: a flat through the (k-1)-dimensional optimum can
  // only do at least as well, which keeps the value monotone in k.
  if (k >= 1 && n <= 64) {
    SolveOptions light = opts;
    light.restarts = std::max(4, opts.restarts / 4);
    light.max_iters = std::max(100, opts.max_iters / 2);
    light.method = SolveMethod::kAuto;
    light.seed = mix_seed(opts.seed, 0xba5eULL);
    const FlatFit base = min_max_flat(f, k - 1, light);
    for (int extra = 0; extra < 4; ++extra) {
      KFlat g = base.flat;
      int guard = 0;
      while (g.flat_dim() < k && guard++ < 64) {
        Vec v = rng.unit_vec(d);
        for (const Vec& q : g.basis) axpy(v, -dot(v, q), q);
        const double nn = norm(v);
        if (nn < 1e-6) continue;
        g.basis.push_back(scaled(v, 1.0 / nn));
      }
      Vec anchor = g.anchor;
      for (const Vec& q : g.basis) axpy(anchor, -dot(anchor, q), q);
      g.anchor = std::move(anchor);
      seeds.push_back(std::move(g));
    }
  }

  // A few fully random flats for coverage.
  for (int s = 0; s < std::max(4, opts.restarts / 4); ++s) {
    const int pick = rng.uniform_int(n);
    Vec anchor = f[static_cast<size_t>(pick)].core().center;
    const double scale = family_scale(f);
    for (double& c : anchor) c += 0.1 * scale * rng.normal();
    std::vector<Vec> dirs;
    for (int j = 0; j < k; ++j) dirs.push_back(rng.unit_vec(d));
    try {
      seeds.push_back(canonicalize_flat(anchor, dirs));
    } catch (const InvalidFlat&) {
      continue;
    }
  }
  return seeds;
}

FlatFit multistart_descent(const Family& f, int k, const SolveOptions& opts) {
  const int d = f.dim();
  const Chart ch{d, k};
  const double scale = family_scale(f);

  const Objective fn = [&](const Vec& params) -> double {
    const std::optional<KFlat> flat = decode_chart(ch, params);
    if (!flat) return kPenalty;
    return flat_family_signed(f, *flat);
  };

  std::vector<KFlat> seeds = collect_seeds(f, k, opts);
  const int restarts = std::max(static_cast<int>(seeds.size()), opts.restarts);
  std::vector<FlatFit> results(static_cast<size_t>(restarts));

  const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(opts.seed, static_cast<uint64_t>(r) + 17));
    Vec x0;
    if (r < static_cast<int>(seeds.size())) {
      x0 = encode_chart(ch, seeds[static_cast<size_t>(r)]);
      if (r >= opts.restarts / 2)  // jitter the later seed copies
        for (double& c : x0) c += 0.02 * scale * rng.normal();
    } else {
      x0 = encode_chart(ch, seeds[static_cast<size_t>(r % seeds.size())]);
      for (double& c : x0) c += 0.05 * scale * rng.normal();
    }

    LocalResult lr = nelder_mead(fn, x0, 0.1 * scale, opts.max_iters * ch.dims());
    lr = compass_polish(fn, std::move(lr.x), lr.fx, 0.02 * scale, 1e-13 * scale);

    FlatFit fit;
    const std::optional<KFlat> flat = decode_chart(ch, lr.x);
    if (flat) {
      fit.flat = *flat;
      fit.signed_value = lr.fx;
    } else {
      fit.flat = seeds[static_cast<size_t>(r % seeds.size())];
      fit.signed_value = flat_family_signed(f, fit.flat);
    }
    fit.value = std::max(0.0, fit.signed_value);
    fit.lower_bound = -kInf;
    fit.certified = false;
    results[static_cast<size_t>(r)] = std::move(fit);
  }

  size_t arg = 0;
  for (size_t i = 1; i < results.size(); ++i)
    if (fit_better(results[i], results[arg])) arg = i;
  return results[arg];
}

FlatFit solve_k0(const Family& f, const SolveOptions& opts) {
  bool single_part = true;
  for (const NearBall& b : f.members())
    if (b.parts.size() != 1) single_part = false;

  if (single_part) {
    std::vector<ClosedBall> balls;
    balls.reserve(f.size());
    for (const NearBall& b : f.members()) balls.push_back(b.parts.front());
    return solve_k0_convex(balls, opts);
  }

  // Unions of balls make the k = 0 objective a max of min-distances, which
  // is no longer convex; fall back to seeded local descent (uncertified).
  const int d = f.dim();
  const Objective fn = [&](const Vec& x) { return point_family_signed(f, x.data(), x.size()); };
  const double scale = family_scale(f);

  std::vector<Vec> starts;
  for (const NearBall& b : f.members())
    for (const ClosedBall& p : b.parts) {
      starts.push_back(p.center);
      if (starts.size() >= 64) break;
    }

  FlatFit best;
  best.signed_value = kInf;
  const int restarts = std::max<int>(static_cast<int>(starts.size()), opts.restarts);
  std::vector<LocalResult> results(static_cast<size_t>(restarts));
  const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(opts.seed, static_cast<uint64_t>(r) + 313));
    Vec x0 = starts[static_cast<size_t>(r % starts.size())];
    if (r >= static_cast<int>(starts.size()))
      for (double& c : x0) c += 0.2 * scale * rng.normal();
    LocalResult lr = nelder_mead(fn, x0, 0.1 * scale, opts.max_iters * d);
    results[static_cast<size_t>(r)] =
        compass_polish(fn, std::move(lr.x), lr.fx, 0.02 * scale, 1e-13 * scale);
  }
  size_t arg = 0;
  for (size_t i = 1; i < results.size(); ++i) {
    if (results[i].fx < results[arg].fx - 1e-12) arg = i;
  }
  best = make_point_fit(results[arg].x, results[arg].fx, -kInf, false);
  return best;
}

// ---------------------------------------------------------------------------
// grid oracle
// ---------------------------------------------------------------------------

struct GridBest {
  double value = kInf;
  long index = -1;
};

inline void grid_merge(GridBest& acc, const GridBest& v) {
  if (v.value < acc.value - 0.0 || (v.value == acc.value && v.index < acc.index)) {
    if (v.value < acc.value || (v.value == acc.value && (acc.index < 0 || v.index < acc.index)))
      acc = v;
  }
}

FlatFit grid_oracle_k0(const Family& f, const SolveOptions& opts) {
  const int d = f.dim();
  Vec lo(static_cast<size_t>(d), kInf), hi(static_cast<size_t>(d), -kInf);
  double rmax = 0.0;
  for (const NearBall& b : f.members())
    for (const ClosedBall& p : b.parts) {
      for (int i = 0; i < d; ++i) {
        lo[static_cast<size_t>(i)] = std::min(lo[static_cast<size_t>(i)], p.center[static_cast<size_t>(i)]);
        hi[static_cast<size_t>(i)] = std::max(hi[static_cast<size_t>(i)], p.center[static_cast<size_t>(i)]);
      }
      rmax = std::max(rmax, p.radius);
    }
  for (int i = 0; i < d; ++i) {
    lo[static_cast<size_t>(i)] -= rmax;
    hi[static_cast<size_t>(i)] += rmax;
  }

  double step = opts.grid_step;
  Vec blo = lo, bhi = hi;
  Vec best_x = lo;
  double best_v = kInf;

  for (int level = 0; level < 40 && step > 1e-10; ++level) {
    std::vector<long> counts(static_cast<size_t>(d));
    long total = 1;
    for (int i = 0; i < d; ++i) {
      counts[static_cast<size_t>(i)] =
          std::max<long>(1, std::lround(std::floor((bhi[static_cast<size_t>(i)] - blo[static_cast<size_t>(i)]) / step)) + 1);
      total *= counts[static_cast<size_t>(i)];
    }
    if (total > 200000000L) throw InvalidOptions("grid oracle: cell budget exceeded");

    GridBest global;
    const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel num_threads(max_threads()) if (par)
    {
      GridBest local;
      Vec x(static_cast<size_t>(d));
#pragma omp for schedule(static) nowait
      for (long cell = 0; cell < total; ++cell) {
        long rem = cell;
        for (int i = 0; i < d; ++i) {
          const long ci = rem % counts[static_cast<size_t>(i)];
          rem /= counts[static_cast<size_t>(i)];
          x[static_cast<size_t>(i)] = blo[static_cast<size_t>(i)] + step * static_cast<double>(ci);
        }
        const double v = point_family_signed(f, x.data(), x.size());
        if (v < local.value || (v == local.value && cell < local.index)) local = {v, cell};
      }
#pragma omp critical
      grid_merge(global, local);
    }

    Vec x(static_cast<size_t>(d));
    long rem = global.index;
    for (int i = 0; i < d; ++i) {
      const long ci = rem % counts[static_cast<size_t>(i)];
      rem /= counts[static_cast<size_t>(i)];
      x[static_cast<size_t>(i)] = blo[static_cast<size_t>(i)] + step * static_cast<double>(ci);
    }
    if (global.value < best_v) {
      best_v = global.value;
      best_x = x;
    }
    for (int i = 0; i < d; ++i) {
      blo[static_cast<size_t>(i)] = best_x[static_cast<size_t>(i)] - step;
      bhi[static_cast<size_t>(i)] = best_x[static_cast<size_t>(i)] + step;
    }
    step /= 4.0;
  }
  return make_point_fit(std::move(best_x), best_v, -kInf, false);
}

// Multilevel beam over flat parameters for k >= 1 (lines in R^2/R^3 and
// planes in R^3): offsets live in the orthogonal complement of the direction.
struct FlatParam {
  Vec angles;   // direction chart
  Vec offsets;  // coordinates in the complement basis
};

struct ParamSpace {
  int d = 0, k = 0;
  int n_angles = 0, n_offsets = 0;
  double rho_max = 0.0;

  // Orthonormal frame (direction basis + complement) from the angle chart.
  void frame(const Vec& angles, std::vector<Vec>& basis, std::vector<Vec>& comp) const {
    basis.clear();
    comp.clear();
    if (d == 2 && k == 1) {
      basis.push_back({std::cos(angles[0]), std::sin(angles[0])});
      comp.push_back({-std::sin(angles[0]), std::cos(angles[0])});
    } else if (d == 3 && k == 1) {
      const double sf = std::sin(angles[0]), cf = std::cos(angles[0]);
      const double sp = std::sin(angles[1]), cp = std::cos(angles[1]);
      const Vec u{sf * cp, sf * sp, cf};
      Vec e1{cf * cp, cf * sp, -sf};
      Vec e2{-sp, cp, 0.0};
      basis.push_back(u);
      comp.push_back(std::move(e1));
      comp.push_back(std::move(e2));
    } else if (d == 3 && k == 2) {
      const double sf = std::sin(angles[0]), cf = std::cos(angles[0]);
      const double sp = std::sin(angles[1]), cp = std::cos(angles[1]);
      const Vec nrm{sf * cp, sf * sp, cf};
      basis.push_back({cf * cp, cf * sp, -sf});
      basis.push_back({-sp, cp, 0.0});
      comp.push_back(nrm);
    }
  }

  KFlat flat_at(const FlatParam& p) const {
    std::vector<Vec> basis, comp;
    frame(p.angles, basis, comp);
    Vec anchor = zeros(d);
    for (int i = 0; i < n_offsets; ++i) axpy(anchor, p.offsets[static_cast<size_t>(i)], comp[static_cast<size_t>(i)]);
    return KFlat{std::move(anchor), std::move(basis)};
  }
};

FlatFit grid_oracle_flats(const Family& f, int k, const SolveOptions& opts) {
  const int d = f.dim();
  ParamSpace sp;
  sp.d = d;
  sp.k = k;
  sp.n_angles = (d == 2) ? 1 : 2;
  sp.n_offsets = d - k;
  double cmax = 0.0, rmax = 0.0;
  for (const NearBall& b : f.members())
    for (const ClosedBall& p : b.parts) {
      cmax = std::max(cmax, norm(p.center));
      rmax = std::max(rmax, p.radius);
    }
  sp.rho_max = cmax + rmax + 1.0;

  const auto value_of = [&](const FlatParam& p) { return flat_family_signed(f, sp.flat_at(p)); };

  // Level 0: full coarse grid; later levels refine a beam of the best cells.
  const double a0 = std::max(opts.grid_step, 0.08);
  const double o0 = std::max(opts.grid_step * sp.rho_max, 0.05 * sp.rho_max);

  struct Cell {
    FlatParam p;
    double value;
  };
  std::vector<Cell> beam;

  std::vector<FlatParam> grid;
  const int na = static_cast<int>(std::ceil(kPi / a0));
  std::vector<double> angle_ticks;
  for (int i = 0; i < na; ++i) angle_ticks.push_back(kPi * static_cast<double>(i) / na);
  const int no = static_cast<int>(std::ceil(2.0 * sp.rho_max / o0)) + 1;
  std::vector<double> off_ticks;
  for (int i = 0; i < no; ++i) off_ticks.push_back(-sp.rho_max + o0 * static_cast<double>(i));

  const auto push_param = [&](const Vec& angles, const Vec& offsets) {
    grid.push_back(FlatParam{angles, offsets});
  };
  if (sp.n_angles == 1) {
    for (double a : angle_ticks)
      for (double x : off_ticks) push_param({a}, {x});
  } else if (sp.n_offsets == 1) {
    for (double a : angle_ticks)
      for (double b : angle_ticks)
        for (double x : off_ticks) push_param({a, b}, {x});
  } else {
    for (double a : angle_ticks)
      for (double b : angle_ticks)
        for (double x : off_ticks)
          for (double y : off_ticks) push_param({a, b}, {x, y});
  }

  std::vector<double> values(grid.size());
  const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
  for (long i = 0; i < static_cast<long>(grid.size()); ++i)
    values[static_cast<size_t>(i)] = value_of(grid[static_cast<size_t>(i)]);

  std::vector<size_t> order(grid.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  const size_t beam_width = std::min<size_t>(grid.size(), 128);
  for (size_t i = 0; i < beam_width; ++i) beam.push_back({grid[order[i]], values[order[i]]});

  double astep = a0 / 2.0, ostep = o0 / 2.0;
  for (int level = 0; level < 48 && (astep > 1e-10 || ostep > 1e-10); ++level) {
    std::vector<Cell> next;
    next.reserve(beam.size() * 9);
    for (const Cell& c : beam) {
      for (int da = -1; da <= 1; ++da)
        for (int db = (sp.n_angles == 2 ? -1 : 0); db <= (sp.n_angles == 2 ? 1 : 0); ++db)
          for (int dx = -1; dx <= 1; ++dx)
            for (int dy = (sp.n_offsets == 2 ? -1 : 0); dy <= (sp.n_offsets == 2 ? 1 : 0); ++dy) {
              FlatParam p = c.p;
              p.angles[0] += da * astep;
              if (sp.n_angles == 2) p.angles[1] += db * astep;
              p.offsets[0] += dx * ostep;
              if (sp.n_offsets == 2) p.offsets[1] += dy * ostep;
              next.push_back({std::move(p), 0.0});
            }
    }
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
    for (long i = 0; i < static_cast<long>(next.size()); ++i)
      next[static_cast<size_t>(i)].value = value_of(next[static_cast<size_t>(i)].p);

    std::stable_sort(next.begin(), next.end(),
                     [](const Cell& a, const Cell& b) { return a.value < b.value; });
    const size_t keep = std::min<size_t>(next.size(), level < 6 ? 96 : 24);
    beam.assign(next.begin(), next.begin() + static_cast<ptrdiff_t>(keep));
    astep /= 2.0;
    ostep /= 2.0;
  }

  const Cell& best = beam.front();
  FlatFit fit;
  fit.flat = sp.flat_at(best.p);
  fit.signed_value = best.value;
  fit.value = std::max(0.0, best.value);
  fit.lower_bound = -kInf;
  fit.certified = false;
  return fit;
}

}  // namespace

FlatFit grid_oracle(const Family& f, int k, const SolveOptions& opts) {
  if (f.empty()) throw InvalidOptions("grid oracle on an empty family");
  const int d = f.dim();
  if (d > 3 || f.size() > 8) throw InvalidOptions("grid oracle restricted to d <= 3 and |f| <= 8");
  if (k == 0) return grid_oracle_k0(f, opts);
  if ((d == 2 && k == 1) || (d == 3 && (k == 1 || k == 2))) return grid_oracle_flats(f, k, opts);
  throw InvalidOptions("grid oracle: unsupported (d, k) chart");
}

bool fit_better(const FlatFit& a, const FlatFit& b) {
  if (a.signed_value < b.signed_value - 1e-12) return true;
  if (a.signed_value > b.signed_value + 1e-12) return false;
  return flat_compare(a.flat, b.flat) < 0;
}

FlatFit min_max_flat(const Family& f, int k, const SolveOptions& opts) {
  if (f.empty()) throw InvalidOptions("min_max_flat on an empty family");
  const int d = f.dim();
  if (k < 0 || k > d - 1) throw InvalidOptions("k out of range");

  switch (opts.method) {
    case SolveMethod::kConvexK0:
      if (k != 0) throw InvalidOptions("convex_k0 method requires k = 0");
      return solve_k0(f, opts);
    case SolveMethod::kGridOracle:
      return grid_oracle(f, k, opts);
    case SolveMethod::kMultistartDescent:
      return k == 0 ? solve_k0(f, opts) : multistart_descent(f, k, opts);
    case SolveMethod::kAuto:
      break;
  }
  return k == 0 ? solve_k0(f, opts) : multistart_descent(f, k, opts);
}

TransversalResult exists_transversal(const Family& f, int k, const SolveOptions& opts) {
  TransversalResult r;
  r.best = min_max_flat(f, k, opts);
  r.yes = r.best.value <= opts.tol_feas;
  r.certified_no = !r.yes && r.best.certified && r.best.lower_bound > opts.tol_feas;
  return r;
}

namespace {

double member_residual(const NearBall& b, const KFlat& flat) {
  return b.open_flag ? member_flat_signed(b, flat) : member_flat_dist(b, flat);
}

bool member_ok(const NearBall& b, const KFlat& flat, double tol) {
  return b.open_flag ? member_flat_signed(b, flat) < -kTolGeo : member_flat_dist(b, flat) <= tol;
}

TransversalCertificate build_certificate(const Family& f, int k, const std::vector<KFlat>& flats,
                                         const std::vector<int>& assignment, bool certified) {
  TransversalCertificate cert;
  cert.k = k;
  cert.flats = flats;
  cert.assignment = assignment;
  cert.residuals.resize(f.size());
  for (size_t i = 0; i < f.size(); ++i)
    cert.residuals[i] = member_residual(f[i], flats[static_cast<size_t>(assignment[i])]);
  cert.certified = certified;
  return cert;
}

// Restricted-growth strings enumerate set partitions into at most m blocks
// without duplicates.
void enumerate_partitions(int n, int m, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> rgs(static_cast<size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      visit(rgs);
      return;
    }
    for (int b = 0; b < std::min(used + 1, m); ++b) {
      rgs[static_cast<size_t>(i)] = b;
      rec(i + 1, std::max(used, b + 1));
    }
  };
  rec(0, 0);
}

}  // namespace

PierceResult pierce_with_m_flats(const Family& f, int k, int m, const SolveOptions& opts) {
  if (m < 1) throw InvalidOptions("need m >= 1 flats");
  if (f.empty()) throw InvalidOptions("pierce_with_m_flats on an empty family");
  PierceResult res;

  // Collapse exact duplicate members; they are pierced identically.
  std::vector<int> rep_of(f.size());
  std::vector<int> distinct;
  for (size_t i = 0; i < f.size(); ++i) {
    int found = -1;
    for (int j : distinct) {
      const NearBall& a = f[i];
      const NearBall& b = f[static_cast<size_t>(j)];
      if (a.parts.size() != b.parts.size() || a.core_index != b.core_index ||
          a.open_flag != b.open_flag)
        continue;
      bool same = true;
      for (size_t p = 0; p < a.parts.size() && same; ++p)
        same = a.parts[p].radius == b.parts[p].radius && a.parts[p].center == b.parts[p].center;
      if (same) {
        found = j;
        break;
      }
    }
    if (found < 0) {
      found = static_cast<int>(i);
      distinct.push_back(found);
    }
    rep_of[i] = found;
  }
  Family df = f.subfamily(distinct);
  std::vector<int> pos_of(f.size());
  for (size_t i = 0; i < f.size(); ++i)
    pos_of[i] = static_cast<int>(std::find(distinct.begin(), distinct.end(), rep_of[i]) - distinct.begin());

  const int n = static_cast<int>(df.size());

  if (n <= 10 && m <= 3) {
    res.exhaustive = true;
    double best_over_partitions = kInf;
    std::vector<KFlat> best_flats;
    std::vector<int> best_blocks;
    bool best_certified = false;

    std::vector<std::vector<int>> partitions;
    enumerate_partitions(n, m, [&](const std::vector<int>& rgs) { partitions.push_back(rgs); });

    std::vector<double> part_value(partitions.size(), kInf);
    std::vector<std::vector<KFlat>> part_flats(partitions.size());
    std::vector<char> part_cert(partitions.size(), 0);

    const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
    for (long pi = 0; pi < static_cast<long>(partitions.size()); ++pi) {
      const std::vector<int>& rgs = partitions[static_cast<size_t>(pi)];
      const int blocks = 1 + *std::max_element(rgs.begin(), rgs.end());
      double worst = -kInf;
      bool cert = true;
      std::vector<KFlat> flats;
      SolveOptions sub = opts;
      sub.parallel = false;  // already parallel across partitions
      for (int b = 0; b < blocks; ++b) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
          if (rgs[static_cast<size_t>(i)] == b) idx.push_back(i);
        sub.seed = mix_seed(opts.seed, static_cast<uint64_t>(pi) * 31 + static_cast<uint64_t>(b));
        const FlatFit fit = min_max_flat(df.subfamily(idx), k, sub);
        flats.push_back(fit.flat);
        worst = std::max(worst, fit.value);
        cert = cert && fit.certified;
        if (worst > opts.tol_feas && !cert) break;  // cannot improve this partition
      }
      part_value[static_cast<size_t>(pi)] = worst;
      part_flats[static_cast<size_t>(pi)] = std::move(flats);
      part_cert[static_cast<size_t>(pi)] = cert ? 1 : 0;
    }

    for (size_t pi = 0; pi < partitions.size(); ++pi) {
      if (part_value[pi] < best_over_partitions) {
        best_over_partitions = part_value[pi];
        best_flats = part_flats[pi];
        best_blocks = partitions[pi];
        best_certified = part_cert[pi] != 0;
      }
    }

    res.best_residual = best_over_partitions;
    // Strict-piercing check for open members decides actual success.
    std::vector<int> assignment(f.size());
    for (size_t i = 0; i < f.size(); ++i)
      assignment[i] = best_blocks[static_cast<size_t>(pos_of[i])];
    bool all_ok = best_over_partitions <= opts.tol_feas;
    for (size_t i = 0; i < f.size() && all_ok; ++i)
      all_ok = member_ok(f[i], best_flats[static_cast<size_t>(assignment[i])], opts.tol_feas);
    if (all_ok) {
      res.success = true;
      res.cert = build_certificate(f, k, best_flats, assignment, best_certified && k == 0);
    }
    return res;
  }

  // Alternating assign/refit from multistart seeding.
  const int tries = std::max(4, opts.restarts / 4);
  double best_overall = kInf;
  std::vector<KFlat> best_flats;
  std::vector<int> best_assignment;

  for (int t = 0; t < tries; ++t) {
    Rng rng(mix_seed(opts.seed, 7000 + static_cast<uint64_t>(t)));
    uint64_t state = mix_seed(opts.seed, 9000 + static_cast<uint64_t>(t));
    std::vector<KFlat> flats;
    for (int j = 0; j < m; ++j) {
      const std::vector<int> subset =
          nth_combination(n, std::min(k + 1, n), state);
      flats.push_back(seed_flat_from_subset(df, subset, k, rng));
    }

    std::vector<int> assign(static_cast<size_t>(n), 0), prev;
    SolveOptions sub = opts;
    sub.restarts = std::max(6, opts.restarts / 4);
    for (int round = 0; round < 40; ++round) {
      for (int i = 0; i < n; ++i) {
        double bestd = kInf;
        int arg = 0;
        for (int j = 0; j < m; ++j) {
          const double dd = member_flat_dist(df[static_cast<size_t>(i)], flats[static_cast<size_t>(j)]);
          if (dd < bestd - 1e-15) {
            bestd = dd;
            arg = j;
          }
        }
        assign[static_cast<size_t>(i)] = arg;
      }
      if (assign == prev) break;
      prev = assign;
      for (int j = 0; j < m; ++j) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
          if (assign[static_cast<size_t>(i)] == j) idx.push_back(i);
        if (idx.empty()) {
          // revive the empty flat at the worst-served member
          int worst_i = 0;
          double worst_d = -kInf;
          for (int i = 0; i < n; ++i) {
            const double dd =
                member_flat_dist(df[static_cast<size_t>(i)], flats[static_cast<size_t>(assign[static_cast<size_t>(i)])]);
            if (dd > worst_d) {
              worst_d = dd;
              worst_i = i;
            }
          }
          flats[static_cast<size_t>(j)] = seed_flat_from_subset(df, {worst_i}, k, rng);
          continue;
        }
        sub.seed = mix_seed(opts.seed, 11000 + static_cast<uint64_t>(t) * 101 + static_cast<uint64_t>(j));
        flats[static_cast<size_t>(j)] = min_max_flat(df.subfamily(idx), k, sub).flat;
      }
    }

    double worst = -kInf;
    for (int i = 0; i < n; ++i)
      worst = std::max(worst, member_flat_dist(df[static_cast<size_t>(i)], flats[static_cast<size_t>(assign[static_cast<size_t>(i)])]));
    if (worst < best_overall) {
      best_overall = worst;
      best_flats = flats;
      best_assignment = assign;
    }
  }

  res.best_residual = best_overall;
  if (best_overall <= opts.tol_feas) {
    std::vector<int> assignment(f.size());
    for (size_t i = 0; i < f.size(); ++i)
      assignment[i] = best_assignment[static_cast<size_t>(pos_of[i])];
    bool all_ok = true;
    for (size_t i = 0; i < f.size() && all_ok; ++i)
      all_ok = member_ok(f[i], best_flats[static_cast<size_t>(assignment[i])], opts.tol_feas);
    if (all_ok) {
      res.success = true;
      res.cert = build_certificate(f, k, best_flats, assignment, false);
    }
  }
  return res;
}

GreedyPiercing greedy_piercing_upper(const Family& f, int k, const SolveOptions& opts) {
  if (f.empty()) throw InvalidOptions("greedy piercing on an empty family");
  GreedyPiercing gp;
  const int n = static_cast<int>(f.size());
  std::vector<int> remaining(static_cast<size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<int> assignment(f.size(), -1);
  std::vector<KFlat> flats;

  int round = 0;
  while (!remaining.empty()) {
    const Family sub = f.subfamily(remaining);
    SolveOptions so = opts;
    so.seed = mix_seed(opts.seed, 5000 + static_cast<uint64_t>(round));

    std::vector<KFlat> candidates;
    candidates.push_back(min_max_flat(sub, k, so).flat);

    Rng rng(mix_seed(opts.seed, 6000 + static_cast<uint64_t>(round)));
    uint64_t state = mix_seed(opts.seed, 6500 + static_cast<uint64_t>(round));
    const int take = std::min(k + 1, static_cast<int>(remaining.size()));
    const int n_rem = static_cast<int>(remaining.size());
    if (binomial_capped(n_rem, take, 48.0) <= 48.0) {
      enumerate_combinations(n_rem, take, [&](const std::vector<int>& subset) {
        candidates.push_back(seed_flat_from_subset(sub, subset, k, rng));
      });
    } else {
      for (int s = 0; s < 48; ++s)
        candidates.push_back(seed_flat_from_subset(sub, nth_combination(n_rem, take, state), k, rng));
    }
    candidates.push_back(seed_flat_from_subset(sub, {0}, k, rng));

    const auto pierced_by = [&](const KFlat& flat) {
      std::vector<int> hit;
      for (size_t i = 0; i < remaining.size(); ++i)
        if (pierces(flat, f[static_cast<size_t>(remaining[i])])) hit.push_back(static_cast<int>(i));
      return hit;
    };

    size_t best_c = 0;
    std::vector<int> best_hit = pierced_by(candidates[0]);
    for (size_t c = 1; c < candidates.size(); ++c) {
      std::vector<int> hit = pierced_by(candidates[c]);
      if (hit.size() > best_hit.size()) {
        best_hit = std::move(hit);
        best_c = c;
      }
    }
    KFlat chosen = candidates[best_c];

    if (best_hit.empty()) {  // a flat through a core always pierces that member
      chosen = seed_flat_from_subset(sub, {0}, k, rng);
      best_hit = pierced_by(chosen);
      if (best_hit.empty()) best_hit.push_back(0);
    } else if (best_hit.size() < remaining.size()) {
      // local improvement: refit on the pierced cluster
      so.seed = mix_seed(opts.seed, 6900 + static_cast<uint64_t>(round));
      std::vector<int> cluster;
      for (int i : best_hit) cluster.push_back(remaining[static_cast<size_t>(i)]);
      const FlatFit refit = min_max_flat(f.subfamily(cluster), k, so);
      const std::vector<int> rehit = pierced_by(refit.flat);
      if (rehit.size() >= best_hit.size()) {
        chosen = refit.flat;
        best_hit = rehit;
      }
    }

    const int flat_idx = static_cast<int>(flats.size());
    flats.push_back(chosen);
    std::vector<int> next_remaining;
    size_t h = 0;
    for (size_t i = 0; i < remaining.size(); ++i) {
      if (h < best_hit.size() && static_cast<int>(i) == best_hit[h]) {
        assignment[static_cast<size_t>(remaining[i])] = flat_idx;
        ++h;
      } else {
        next_remaining.push_back(remaining[i]);
      }
    }
    remaining = std::move(next_remaining);
    ++round;
  }

  gp.m = static_cast<int>(flats.size());
  gp.cert = build_certificate(f, k, flats, assignment, false);
  return gp;
}

namespace {

// Exact best offset for a fixed line direction in the plane. Members project
// to intervals (unions of intervals for multi-part members); the 1-D minimax
// optimum is attained at an interval endpoint or a midpoint between the
// extreme constraints, all of which are enumerated.
double sweep_offset_value(const Family& f, double theta, double* best_rho) {
  const double nx = -std::sin(theta), ny = std::cos(theta);
  double lo_max = -kInf, hi_min = kInf;
  bool multi = false;
  for (const NearBall& b : f.members()) {
    if (b.parts.size() > 1) multi = true;
    double mlo = kInf, mhi = -kInf;
    for (const ClosedBall& p : b.parts) {
      const double c = nx * p.center[0] + ny * p.center[1];
      mlo = std::min(mlo, c - p.radius);
      mhi = std::max(mhi, c + p.radius);
    }
    lo_max = std::max(lo_max, mlo);
    hi_min = std::min(hi_min, mhi);
  }

  if (!multi) {
    // classic corridor: optimum halves the worst gap
    double l = -kInf, h = kInf;
    for (const NearBall& b : f.members()) {
      const ClosedBall& p = b.parts.front();
      const double c = nx * p.center[0] + ny * p.center[1];
      l = std::max(l, c - p.radius);
      h = std::min(h, c + p.radius);
    }
    if (best_rho) *best_rho = 0.5 * (l + h);
    return 0.5 * (l - h);
  }

  std::vector<double> cands;
  size_t total_parts = 0;
  for (const NearBall& b : f.members()) total_parts += b.parts.size();
  if (total_parts > 512) throw InvalidOptions("sweep oracle: too many parts");
  for (const NearBall& b : f.members())
    for (const ClosedBall& p : b.parts) {
      const double c = nx * p.center[0] + ny * p.center[1];
      cands.push_back(c - p.radius);
      cands.push_back(c);
      cands.push_back(c + p.radius);
    }
  std::sort(cands.begin(), cands.end());
  std::vector<double> points = cands;
  for (size_t i = 0; i + 1 < cands.size(); ++i) points.push_back(0.5 * (cands[i] + cands[i + 1]));

  double best = kInf, arg = 0.0;
  for (double rho : points) {
    double worst = -kInf;
    for (const NearBall& b : f.members()) {
      double mbest = kInf;
      for (const ClosedBall& p : b.parts) {
        const double c = nx * p.center[0] + ny * p.center[1];
        mbest = std::min(mbest, std::abs(c - rho) - p.radius);
      }
      worst = std::max(worst, mbest);
    }
    if (worst < best) {
      best = worst;
      arg = rho;
    }
  }
  if (best_rho) *best_rho = arg;
  return best;
}

}  // namespace

SweepResult line_sweep_oracle(const Family& f, double theta_step) {
  if (f.empty() || f.dim() != 2) throw InvalidOptions("sweep oracle needs a planar family");
  const long steps = std::lround(std::ceil(kPi / theta_step));

  std::vector<double> vals(static_cast<size_t>(steps));
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
  for (long i = 0; i < steps; ++i)
    vals[static_cast<size_t>(i)] =
        sweep_offset_value(f, kPi * static_cast<double>(i) / static_cast<double>(steps), nullptr);

  long best_i = 0;
  for (long i = 1; i < steps; ++i)
    if (vals[static_cast<size_t>(i)] < vals[static_cast<size_t>(best_i)]) best_i = i;

  // bracket refinement on the exact-offset profile around the best angle
  double a = kPi * static_cast<double>(best_i - 1) / static_cast<double>(steps);
  double b = kPi * static_cast<double>(best_i + 1) / static_cast<double>(steps);
  for (int it = 0; it < 200 && (b - a) > 1e-14; ++it) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (sweep_offset_value(f, m1, nullptr) <= sweep_offset_value(f, m2, nullptr))
      b = m2;
    else
      a = m1;
  }
  const double theta = 0.5 * (a + b);
  SweepResult r;
  r.theta = theta;
  r.signed_value = sweep_offset_value(f, theta, &r.offset);
  const Vec dir{std::cos(theta), std::sin(theta)};
  const Vec nrm{-std::sin(theta), std::cos(theta)};
  r.flat = KFlat{scaled(nrm, r.offset), {dir}};
  return r;
}

}  // namespace tvlab
