#include "tvlab/independence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "tvlab/detail/descent.hpp"
#include "tvlab/runtime.hpp"

namespace tvlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void enumerate_subsets(int n, int k, const std::function<void(const std::vector<int>&)>& visit) {
  if (k > n) return;
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

SubsetEvidence solve_subset(const Family& f, const std::vector<int>& subset, int k,
                            const SolveOptions& opts, uint64_t stream) {
  SolveOptions so = opts;
  so.parallel = false;
  so.seed = mix_seed(opts.seed, stream);
  const FlatFit fit = min_max_flat(f.subfamily(subset), k, so);
  SubsetEvidence ev;
  ev.subset = subset;
  ev.best_value = fit.value;
  ev.best_flat = fit.flat;
  ev.certified = fit.certified;
  return ev;
}

}  // namespace

IndependenceOutcome is_k_independent(const Family& f, int k, const SolveOptions& opts,
                                     double tol_indep) {
  if (f.empty()) throw InvalidOptions("independence of an empty family");
  if (tol_indep <= opts.tol_feas) throw InvalidOptions("tol_indep must exceed tol_feas");
  const int n = static_cast<int>(f.size());
  IndependenceOutcome out;
  out.witness.k = k;
  out.witness.tol_indep = tol_indep;
  out.witness.member_indices.resize(static_cast<size_t>(n));
  std::iota(out.witness.member_indices.begin(), out.witness.member_indices.end(), 0);

  // Small families carry the affine side condition: no (n-2)-flat through all.
  if (n < k + 2) {
    out.witness.affine_checked = true;
    if (n == 1) {
      out.independent = true;
      out.witness.certified = true;
      return out;
    }
    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    const SubsetEvidence ev = solve_subset(f, all, n - 2, opts, 0xaffULL);
    if (ev.best_value <= opts.tol_feas) {
      out.independent = false;
      out.violating_subset = all;
      out.violating_flat = ev.best_flat;
      return out;
    }
    out.witness.evidence.push_back(ev);
    out.witness.certified = ev.certified && ev.best_value > tol_indep;
    out.independent = ev.best_value > tol_indep;
    return out;
  }

  // k = 0 reduces to exact pairwise disjointness of the ball unions.
  if (k == 0) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double gap = member_pair_gap(f[static_cast<size_t>(i)], f[static_cast<size_t>(j)]);
        const bool open_pair =
            f[static_cast<size_t>(i)].open_flag && f[static_cast<size_t>(j)].open_flag;
        const bool meet = open_pair ? gap < -kTolGeo : gap <= kTolGeo;
        SubsetEvidence ev;
        ev.subset = {i, j};
        ev.best_value = std::max(0.0, gap / 2.0);
        ev.certified = true;
        if (meet) {
          // witness point: midpoint of the closest part pair
          double best = kInf;
          Vec mid;
          for (const ClosedBall& p : f[static_cast<size_t>(i)].parts)
            for (const ClosedBall& q : f[static_cast<size_t>(j)].parts) {
              const double g = dist(p.center, q.center) - p.radius - q.radius;
              if (g < best) {
                best = g;
                mid = scaled(add(p.center, q.center), 0.5);
                if (dist(p.center, q.center) > 1e-12) {
                  const Vec dir = scaled(sub(q.center, p.center), 1.0 / dist(p.center, q.center));
                  mid = add(p.center, scaled(dir, p.radius + g / 2.0));
                }
              }
            }
          out.independent = false;
          out.violating_subset = ev.subset;
          out.violating_flat = KFlat{mid, {}};
          return out;
        }
        out.witness.evidence.push_back(std::move(ev));
      }
    out.independent = true;
    out.witness.certified = true;
    return out;
  }

  std::vector<std::vector<int>> subsets;
  enumerate_subsets(n, k + 2, [&](const std::vector<int>& s) { subsets.push_back(s); });

  std::vector<SubsetEvidence> evidence(subsets.size());
  const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
  for (long i = 0; i < static_cast<long>(subsets.size()); ++i)
    evidence[static_cast<size_t>(i)] =
        solve_subset(f, subsets[static_cast<size_t>(i)], k, opts, static_cast<uint64_t>(i));

  for (SubsetEvidence& ev : evidence) {
    if (ev.best_value <= opts.tol_feas) {
      out.independent = false;
      out.violating_subset = ev.subset;
      out.violating_flat = ev.best_flat;
      return out;
    }
  }
  out.independent = true;
  for (const SubsetEvidence& ev : evidence) out.independent = out.independent && ev.best_value > tol_indep;
  out.witness.evidence = std::move(evidence);
  out.witness.certified = false;  // k >= 1 infeasibility stays heuristic
  return out;
}

GreedySubsequenceResult greedy_independent_subsequence(const Family& seq, int k, int target_len,
                                                       const SolveOptions& opts, double tol_indep) {
  if (target_len < k + 2) throw InvalidOptions("target length below k + 2");
  if (tol_indep <= opts.tol_feas) throw InvalidOptions("tol_indep must exceed tol_feas");
  GreedySubsequenceResult res;
  res.witness.k = k;
  res.witness.tol_indep = tol_indep;

  const int n = static_cast<int>(seq.size());
  for (int cand = 0; cand < n && static_cast<int>(res.accepted.size()) < target_len; ++cand) {
    if (static_cast<int>(res.accepted.size()) < k + 1) {
      res.accepted.push_back(cand);  // the first k+1 are accepted unconditionally
      continue;
    }

    std::vector<std::vector<int>> tuples;
    enumerate_subsets(static_cast<int>(res.accepted.size()), k + 1,
                      [&](const std::vector<int>& s) { tuples.push_back(s); });

    std::vector<SubsetEvidence> evidence(tuples.size());
    std::vector<char> blocked(tuples.size(), 0);
    const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
    for (long t = 0; t < static_cast<long>(tuples.size()); ++t) {
      std::vector<int> subset;
      for (int pos : tuples[static_cast<size_t>(t)])
        subset.push_back(res.accepted[static_cast<size_t>(pos)]);
      subset.push_back(cand);
      std::sort(subset.begin(), subset.end());
      evidence[static_cast<size_t>(t)] = solve_subset(
          seq, subset, k, opts, static_cast<uint64_t>(cand) * 1009 + static_cast<uint64_t>(t));
      if (evidence[static_cast<size_t>(t)].best_value <= tol_indep)
        blocked[static_cast<size_t>(t)] = 1;
    }

    if (std::none_of(blocked.begin(), blocked.end(), [](char c) { return c != 0; })) {
      res.accepted.push_back(cand);
      for (SubsetEvidence& ev : evidence) res.witness.evidence.push_back(std::move(ev));
    }
  }

  res.witness.member_indices = res.accepted;
  res.reached_target = static_cast<int>(res.accepted.size()) >= target_len;
  return res;
}

Family orthogonal_project_family(const Family& f) {
  if (f.empty()) throw InvalidOptions("projecting an empty family");
  const int d = f.dim();
  if (d < 2) throw DimensionMismatch("orthogonal projection needs d >= 2");
  std::vector<NearBall> members;
  members.reserve(f.size());
  for (const NearBall& b : f.members()) {
    NearBall nb;
    nb.core_index = b.core_index;
    nb.open_flag = b.open_flag;
    for (const ClosedBall& p : b.parts) {
      Vec c(p.center.begin(), p.center.end() - 1);
      nb.parts.push_back({std::move(c), p.radius});
    }
    members.push_back(std::move(nb));
  }
  Family out(std::move(members));
  // Dropping a coordinate only shrinks center distances, so K cannot grow.
  if (out.constant() > f.constant() + 1e-9)
    throw PreconditionViolated("projected constant exceeded the original");
  return out;
}

namespace {

// Householder frame mapping `axis` to -e_d; columns give tangent coordinates.
struct AxisFrame {
  std::vector<Vec> cols;  // d columns; cols[d-1] = -axis direction target

  Vec to_frame(const Vec& x) const {
    Vec y(cols.size());
    for (size_t i = 0; i < cols.size(); ++i) y[i] = dot(cols[i], x);
    return y;
  }
};

AxisFrame make_frame(const Vec& axis) {
  const int d = static_cast<int>(axis.size());
  const Vec u = normalized(axis);
  AxisFrame fr;
  // Build an orthonormal basis whose last vector is u (so frame coordinate
  // d-1 measures the axis component).
  std::vector<Vec> basis{u};
  for (int i = 0; i < d && static_cast<int>(basis.size()) < d; ++i) {
    Vec v = unit_axis(d, i);
    for (const Vec& q : basis) axpy(v, -dot(v, q), q);
    const double n = norm(v);
    if (n > 1e-8) basis.push_back(scaled(v, 1.0 / n));
  }
  fr.cols.assign(basis.begin() + 1, basis.end());
  fr.cols.push_back(u);
  return fr;
}

}  // namespace

Family central_project_family(const Family& f, const Cone& apex_cone) {
  if (f.empty()) throw InvalidOptions("projecting an empty family");
  const int d = f.dim();
  if (d < 2) throw DimensionMismatch("central projection needs d >= 2");
  if (static_cast<int>(apex_cone.axis.size()) != d)
    throw DimensionMismatch("cone axis dimension mismatch");

  const AxisFrame fr = make_frame(apex_cone.axis);
  constexpr double kSlack = 1e-9;

  std::vector<NearBall> members;
  members.reserve(f.size());
  for (const NearBall& b : f.members()) {
    const NearBallStats s = nearball_stats(b);
    const double nx = norm(s.center);
    if (nx <= 0.0) throw PreconditionViolated("member centered at the apex");
    const double beta = cone_angle(apex_cone, s.center);
    if (s.r_esc >= nx) throw PreconditionViolated("escribed ball surrounds the apex");
    const double zeta_esc = std::asin(s.r_esc / nx);
    if (beta + zeta_esc > kPi / 4.0 + kTolGeo)
      throw PreconditionViolated("escribed ball leaves the pi/4 cone");

    const double zeta_in = std::asin(s.r_in / nx);
    const double cos_beta = std::cos(beta);
    // Claim-4 extremes of ||y y'||: the image of a concentric ball has its
    // boundary between sin(zeta)/cos(beta) and sqrt(2) sin(zeta)/cos(beta)
    // from the projected center.
    const double rho_in = std::sin(zeta_in) / cos_beta * (1.0 - kSlack);
    const double rho_out = std::sqrt(2.0) * std::sin(zeta_esc) / cos_beta * (1.0 + kSlack);

    // Projected core center in tangent coordinates: frame, then scale the
    // axis component to -1 and drop it.
    Vec fc = fr.to_frame(s.center);
    const double axis_comp = fc[static_cast<size_t>(d - 1)];
    if (axis_comp <= 0.0) throw PreconditionViolated("member behind the apex");
    Vec y(static_cast<size_t>(d - 1));
    for (int i = 0; i < d - 1; ++i) y[static_cast<size_t>(i)] = fc[static_cast<size_t>(i)] / axis_comp;

    NearBall nb;
    nb.open_flag = b.open_flag;
    nb.parts.push_back({y, rho_in});
    nb.parts.push_back({y, rho_out});
    nb.core_index = 0;
    members.push_back(std::move(nb));
  }
  Family out(std::move(members));
  if (out.constant() > std::sqrt(2.0) * f.constant() * (1.0 + 1e-6))
    throw PreconditionViolated("projected constant exceeded sqrt(2) K");
  return out;
}

Epsilon0Result epsilon0_for_tuple(const Family& tuple, int k, const Vec& axis,
                                  const SolveOptions& opts) {
  if (k < 1) throw InvalidOptions("epsilon0 needs k >= 1");
  const Vec u = normalized(axis);

  // Feasibility first: does any k-flat pierce the whole tuple?
  SolveOptions so = opts;
  const FlatFit feas = min_max_flat(tuple, k, so);
  Epsilon0Result res;
  if (feas.value > opts.tol_feas) {
    res.no_transversal = true;
    res.raw_estimate = kPi / 2.0;
    res.eps0 = kPi / 4.0;
    res.witness_flat = feas.flat;
    return res;
  }

  // Penalized angle minimization over piercing flats: multi-start simplex
  // descent on the chart with a growing feasibility weight.
  const int d = tuple.dim();
  const auto decode = [&](const Vec& params) -> std::optional<KFlat> {
    KFlat fl;
    fl.anchor.assign(params.begin(), params.begin() + d);
    for (int j = 0; j < k; ++j) {
      Vec v(params.begin() + d * (j + 1), params.begin() + d * (j + 2));
      for (const Vec& q : fl.basis) axpy(v, -dot(v, q), q);
      const double n = norm(v);
      if (n < 1e-7) return std::nullopt;
      fl.basis.push_back(scaled(v, 1.0 / n));
    }
    for (const Vec& q : fl.basis) axpy(fl.anchor, -dot(fl.anchor, q), q);
    return fl;
  };
  const auto encode = [&](const KFlat& fl) {
    Vec params;
    params.insert(params.end(), fl.anchor.begin(), fl.anchor.end());
    for (const Vec& v : fl.basis) params.insert(params.end(), v.begin(), v.end());
    return params;
  };
  const auto violation = [&](const KFlat& fl) {
    double worst = -kInf;
    for (const NearBall& m : tuple.members()) worst = std::max(worst, member_flat_signed(m, fl));
    return std::max(0.0, worst);
  };

  double best_angle = flat_axis_angle(feas.flat, u);
  KFlat best_flat = feas.flat;

  // extra feasible seeds from re-seeded solves
  std::vector<KFlat> seeds{feas.flat};
  for (int sdx = 1; sdx <= 3; ++sdx) {
    SolveOptions so = opts;
    so.seed = mix_seed(opts.seed, 0xe50ULL + static_cast<uint64_t>(sdx));
    const FlatFit alt = min_max_flat(tuple, k, so);
    if (alt.value <= opts.tol_feas) seeds.push_back(alt.flat);
  }

  for (const KFlat& seed : seeds) {
    Vec params = encode(seed);
    for (int stage = 0; stage < 5; ++stage) {
      const double weight = 10.0 * std::pow(10.0, stage);
      const detail::Objective fn = [&](const Vec& p) -> double {
        const std::optional<KFlat> fl = decode(p);
        if (!fl) return 1e9;
        return flat_axis_angle(*fl, u) + weight * violation(*fl);
      };
      detail::LocalResult lr = detail::nelder_mead(fn, params, 0.15, 2000);
      lr = detail::compass_polish(fn, std::move(lr.x), lr.fx, 0.05, 1e-12);
      params = std::move(lr.x);
    }
    const std::optional<KFlat> fl = decode(params);
    if (!fl) continue;
    if (violation(*fl) <= opts.tol_feas) {
      const double ang = flat_axis_angle(*fl, u);
      if (ang < best_angle) {
        best_angle = ang;
        best_flat = *fl;
      }
    }
  }

  if (best_angle <= kTolGeo)
    throw TupleHasAxisParallelTransversal("a piercing flat is parallel to the axis");
  res.raw_estimate = best_angle;
  res.eps0 = 0.5 * best_angle;
  res.witness_flat = best_flat;
  return res;
}

// ---------------------------------------------------------------------------
// Monte-Carlo claim verifiers
// ---------------------------------------------------------------------------

namespace {

struct SampledNearBall {
  NearBall ball;
  NearBallStats stats;
};

// A near-ball with prescribed core (x_B, r_in) and escribed radius r_esc:
// the core plus a far part realizing r_esc plus a few filler parts.
SampledNearBall sample_member(Rng& rng, const Vec& x_b, double r_in, double r_esc, int d) {
  NearBall b;
  b.parts.push_back({x_b, r_in});
  b.core_index = 0;
  if (r_esc > r_in * (1.0 + 1e-12)) {
    const double r_far = std::min(r_in, 0.25 * (r_esc - r_in) + 1e-300);
    Vec far = x_b;
    axpy(far, r_esc - r_far, rng.unit_vec(d));
    b.parts.push_back({std::move(far), r_far});
    const int fillers = rng.uniform_int(3);
    for (int i = 0; i < fillers; ++i) {
      const double rad = rng.uniform(0.1, 0.5) * r_in;
      const double off = rng.uniform(0.0, r_esc - rad);
      Vec c = x_b;
      axpy(c, off, rng.unit_vec(d));
      b.parts.push_back({std::move(c), rad});
    }
  }
  SampledNearBall s{std::move(b), {}};
  s.stats = nearball_stats(s.ball);
  return s;
}

Vec vector_at_angle(Rng& rng, const Vec& axis, double angle, int d) {
  // unit vector making exactly `angle` with axis
  Vec perp = rng.unit_vec(d);
  axpy(perp, -dot(perp, axis), axis);
  const double n = norm(perp);
  if (n < 1e-12) return vector_at_angle(rng, axis, angle, d);
  Vec v = scaled(axis, std::cos(angle));
  axpy(v, std::sin(angle) / n, perp);
  return normalized(v);
}

// Point of the sphere B(c, r) where the line through the origin is tangent:
// the image boundary of the ball under central projection is exactly the
// image of this silhouette circle.
Vec silhouette_point(Rng& rng, const Vec& c, double r, int d) {
  const double nc = norm(c);
  const Vec u = scaled(c, 1.0 / nc);
  Vec w;
  double nw = 0.0;
  do {
    w = rng.unit_vec(d);
    axpy(w, -dot(w, u), u);
    nw = norm(w);
  } while (nw < 1e-9);
  w = scaled(w, 1.0 / nw);
  const double sz = r / nc;
  const double cz = std::sqrt(std::max(0.0, 1.0 - sz * sz));
  Vec p = scaled(u, cz);
  axpy(p, sz, w);
  return scaled(p, nc * cz);  // on the sphere, with 0p tangent to it
}

}  // namespace

ClaimReport verify_claim_cone(double K, double D, double eps1, int trials, uint64_t seed, int dim,
                              double premise_scale) {
  if (K <= 0.0 || D < 0.0 || eps1 <= 0.0) throw InvalidOptions("need K > 0, D >= 0, eps1 > 0");
  ClaimReport rep;
  rep.claim = "cone";
  rep.trials = trials;
  rep.bound = eps1;
  rep.premise_ok = premise_scale <= 1.0;
  rep.params = {{"K", K}, {"D", D}, {"eps1", eps1}, {"premise_scale", premise_scale}};

  const double eps_prime = eps1 / (1.0 + (kPi / 2.0) * (K + D)) * premise_scale;
  rep.params["eps_prime"] = eps_prime;
  const Vec axis = unit_axis(dim, dim - 1);
  const Cone big{axis, eps1};

  std::vector<double> max_angle(static_cast<size_t>(trials), 0.0);
  std::vector<char> violated(static_cast<size_t>(trials), 0);
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(t)));
    double alpha, nx, r_in;
    if (t == 0) {
      // extremal corner: drives the negative control to a guaranteed escape
      alpha = eps_prime * 0.999;
      nx = 1.0 / eps_prime;
      r_in = 0.999 * nx * std::sin(alpha);
    } else {
      alpha = eps_prime * rng.uniform(1e-3, 0.999);
      nx = (1.0 / eps_prime) * (1.0 + 10.0 * rng.uniform());
      r_in = rng.uniform(1e-6, 0.999) * nx * std::sin(alpha);
    }
    const Vec x_b = scaled(vector_at_angle(rng, axis, alpha, dim), nx);
    const double r_esc = r_in * (1.0 + rng.uniform() * (K - 1.0));
    const SampledNearBall m = sample_member(rng, x_b, r_in, r_esc, dim);

    double worst = 0.0;
    bool bad = false;
    const int samples = 32;
    for (int s = 0; s < samples; ++s) {
      const size_t pi = static_cast<size_t>(rng.uniform_int(static_cast<int>(m.ball.parts.size())));
      const ClosedBall& part = m.ball.parts[pi];
      Vec x = part.center;
      axpy(x, part.radius, rng.unit_vec(dim));               // boundary of the part
      if (t == 0) {
        // push straight to the inflated extreme, perpendicular to x_b
        Vec perp = rng.unit_vec(dim);
        axpy(perp, -dot(perp, normalized(x_b)), normalized(x_b));
        if (norm(perp) > 1e-12) {
          x = x_b;
          axpy(x, (m.stats.r_esc + D) / norm(perp), perp);
        }
      } else {
        axpy(x, D * rng.uniform(), rng.unit_vec(dim));       // inside the D-inflation
      }
      const double ang = cone_angle(big, x);
      worst = std::max(worst, ang);
      if (!cone_contains(big, x)) bad = true;
    }
    max_angle[static_cast<size_t>(t)] = worst;
    violated[static_cast<size_t>(t)] = bad ? 1 : 0;
  }

  for (int t = 0; t < trials; ++t) {
    rep.max_observed = std::max(rep.max_observed, max_angle[static_cast<size_t>(t)]);
    rep.violations += violated[static_cast<size_t>(t)] ? 1 : 0;
  }
  return rep;
}

ClaimReport verify_claim_wide_cone(double K, double alpha, int trials, uint64_t seed, int dim) {
  if (K <= 0.0 || alpha <= 0.0) throw InvalidOptions("need K > 0 and alpha > 0");
  ClaimReport rep;
  rep.claim = "wide-cone";
  rep.trials = trials;
  rep.bound = alpha * (1.0 + kPi * K / 2.0);
  rep.premise_ok = rep.bound < kPi / 4.0;
  rep.params = {{"K", K}, {"alpha", alpha}, {"aperture_bound", rep.bound}};

  const Vec axis = unit_axis(dim, dim - 1);  // the ray direction u_l
  const Cone quarter{axis, kPi / 4.0};

  std::vector<double> max_aperture(static_cast<size_t>(trials), 0.0);
  std::vector<char> violated(static_cast<size_t>(trials), 0);
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(t) + 0x31deULL));
    const double beta = (t == 0) ? alpha * 0.9999 : alpha * rng.uniform(1e-3, 0.9999);
    const double nx = rng.uniform(0.1, 100.0);
    // core disjoint from the ray: r_in below the center's ray distance
    const double ray_dist = nx * std::sin(beta);
    if (ray_dist <= 0.0) continue;
    const double r_in = (t == 0 ? 0.9999 : rng.uniform(1e-3, 0.9999)) * ray_dist;
    const double r_esc = (t == 0 ? K * r_in : r_in * (1.0 + rng.uniform() * (K - 1.0)));
    const Vec x_b = scaled(vector_at_angle(rng, axis, beta, dim), nx);

    // analytic worst aperture over the escribed ball
    const double gamma = std::asin(std::min(1.0, r_esc / nx));
    const double worst = beta + gamma;
    // sampled boundary points of the escribed ball
    double sampled = 0.0;
    bool bad = worst > kPi / 4.0 + 1e-12;
    for (int s = 0; s < 32; ++s) {
      Vec p = x_b;
      axpy(p, r_esc, rng.unit_vec(dim));
      sampled = std::max(sampled, cone_angle(quarter, p));
      if (!cone_contains(quarter, p)) bad = true;
    }
    max_aperture[static_cast<size_t>(t)] = std::max(worst, sampled);
    violated[static_cast<size_t>(t)] = bad ? 1 : 0;
  }

  for (int t = 0; t < trials; ++t) {
    rep.max_observed = std::max(rep.max_observed, max_aperture[static_cast<size_t>(t)]);
    rep.violations += violated[static_cast<size_t>(t)] ? 1 : 0;
  }
  return rep;
}

ClaimReport verify_claim_ktok(double K, int trials, uint64_t seed, int dim) {
  if (K < 1.0) throw InvalidOptions("need K >= 1");
  ClaimReport rep;
  rep.claim = "ktok";
  rep.trials = trials;
  rep.bound = std::sqrt(2.0) * K;
  rep.params = {{"K", K}};

  const Vec axis = scaled(unit_axis(dim, dim - 1), -1.0);  // project toward -e_d
  const AxisFrame fr = make_frame(axis);

  std::vector<double> ratios(static_cast<size_t>(trials), 0.0);
  std::vector<char> violated(static_cast<size_t>(trials), 0);
  const bool par = parallel_enabled();
#pragma omp parallel for schedule(static) num_threads(max_threads()) if (par)
  for (int t = 0; t < trials; ++t) {
    Rng rng(mix_seed(seed, static_cast<uint64_t>(t) + 0x501ULL));
    const double beta = rng.uniform(1e-4, kPi / 10.0);
    const double nx = std::exp(rng.uniform(std::log(0.3), std::log(30.0)));
    // keep the escribed ball strictly inside the pi/4 cone
    const double zeta_cap = kPi / 4.0 - beta - 0.01;
    if (zeta_cap <= 1e-4) {
      ratios[static_cast<size_t>(t)] = 0.0;
      continue;
    }
    const double zeta_esc = zeta_cap * rng.uniform(0.05, 0.999);
    const double r_esc = nx * std::sin(zeta_esc);
    const double q = 1.0 + rng.uniform() * (K - 1.0);  // member ratio r_esc / r_in
    const double r_in = r_esc / q;

    const Vec x_b = scaled(vector_at_angle(rng, axis, beta, dim), nx);
    const SampledNearBall m = sample_member(rng, x_b, r_in, r_esc, dim);

    const auto project = [&](const Vec& p) {
      Vec fc = fr.to_frame(p);
      const double a = fc[static_cast<size_t>(dim - 1)];
      Vec y(static_cast<size_t>(dim - 1));
      for (int i = 0; i < dim - 1; ++i) y[static_cast<size_t>(i)] = fc[static_cast<size_t>(i)] / a;
      return y;
    };
    const Vec y_core = project(x_b);

    double out_max = 0.0;
    double in_min = kInf;
    for (size_t pi = 0; pi < m.ball.parts.size(); ++pi) {
      const ClosedBall& part = m.ball.parts[pi];
      for (int s = 0; s < 64; ++s) {
        // arbitrary boundary points only widen the measured outer extent
        Vec p = part.center;
        axpy(p, part.radius, rng.unit_vec(dim));
        out_max = std::max(out_max, dist(project(p), y_core));
        // the inscribed radius is read off the silhouette (image boundary)
        const Vec q = silhouette_point(rng, part.center, part.radius, dim);
        out_max = std::max(out_max, dist(project(q), y_core));
        if (static_cast<int>(pi) == m.ball.core_index)
          in_min = std::min(in_min, dist(project(q), y_core));
      }
    }
    const double ratio = out_max / in_min;
    ratios[static_cast<size_t>(t)] = ratio;
    violated[static_cast<size_t>(t)] = ratio > rep.bound + 1e-6 ? 1 : 0;
  }

  for (int t = 0; t < trials; ++t) {
    rep.max_observed = std::max(rep.max_observed, ratios[static_cast<size_t>(t)]);
    rep.violations += violated[static_cast<size_t>(t)] ? 1 : 0;
  }
  return rep;
}

StrongPointReport find_strong_point_proxy(const Family& f, int k, int flat_budget,
                                          const std::vector<double>& radii,
                                          const SolveOptions& opts) {
  if (f.empty()) throw InvalidOptions("strong point proxy on an empty family");
  if (radii.empty() || !std::is_sorted(radii.rbegin(), radii.rend()))
    throw InvalidOptions("radii must be a descending list");

  const double r_small = radii.back();
  const double r_large = radii.front();

  // Candidate locations: member centers (finite) plus directions at infinity
  // for far-out members, deduplicated in the compactified ball model.
  std::vector<CompactifiedPoint> candidates;
  const auto model_point = [](const CompactifiedPoint& p) {
    return p.kind == CompactifiedPoint::Kind::kFinite ? compactify(p.coords)
                                                      : scaled(p.coords, kPi / 2.0);
  };
  const auto push_candidate = [&](CompactifiedPoint p) {
    const Vec mp = model_point(p);
    for (const CompactifiedPoint& q : candidates)
      if (dist(model_point(q), mp) < 0.05) return;
    candidates.push_back(std::move(p));
  };
  for (const NearBall& b : f.members()) {
    const NearBallStats s = nearball_stats(b);
    push_candidate({CompactifiedPoint::Kind::kFinite, s.center});
    if (norm(s.center) > 1.0 / r_large)
      push_candidate({CompactifiedPoint::Kind::kAtInfinity, normalized(s.center)});
  }

  StrongPointReport best;
  best.radii = radii;
  bool have = false;
  for (const CompactifiedPoint& cand : candidates) {
    StrongPointReport rep;
    rep.location = cand;
    rep.radii = radii;
    for (double r : radii) {
      std::vector<int> idx;
      for (size_t i = 0; i < f.size(); ++i)
        if (in_neighborhood(cand, nearball_stats(f[i]).center, r)) idx.push_back(static_cast<int>(i));
      if (idx.empty()) {
        rep.budgets.push_back(0);
        continue;
      }
      SolveOptions so = opts;
      so.seed = mix_seed(opts.seed, static_cast<uint64_t>(rep.budgets.size()) + 0x517ULL);
      rep.budgets.push_back(greedy_piercing_upper(f.subfamily(idx), k, so).m);
    }
    const int demand_small = rep.budgets.back();
    rep.strong = demand_small >= 2;  // demand persists into the smallest neighborhood
    if (demand_small > flat_budget) {
      int count = 0;
      for (size_t i = 0; i < f.size(); ++i)
        if (in_neighborhood(cand, nearball_stats(f[i]).center, r_small)) ++count;
      rep.score = count;
    }
    if (!have || rep.budgets.back() > best.budgets.back() ||
        (rep.budgets.back() == best.budgets.back() && rep.score > best.score)) {
      best = rep;
      have = true;
    }
  }
  return best;
}

}  // namespace tvlab
