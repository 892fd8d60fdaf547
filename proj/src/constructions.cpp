#include "tvlab/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tvlab/runtime.hpp"

namespace tvlab {

namespace {
constexpr double kPi = std::numbers::pi;
}

Vec compactify(const Vec& x) {
  const long double r = std::sqrt(static_cast<long double>(norm2(x)));
  if (r == 0.0L) return x;
  const long double s = std::atan(r) / r;
  Vec y(x.size());
  for (size_t i = 0; i < x.size(); ++i)
    y[i] = static_cast<double>(static_cast<long double>(x[i]) * s);
  return y;
}

Vec decompactify(const Vec& y) {
  const long double rho = std::sqrt(static_cast<long double>(norm2(y)));
  if (rho == 0.0L) return y;
  if (rho >= kPi / 2) throw DegenerateInput("decompactify needs ||y|| < pi/2");
  const long double s = std::tan(rho) / rho;
  Vec x(y.size());
  for (size_t i = 0; i < y.size(); ++i)
    x[i] = static_cast<double>(static_cast<long double>(y[i]) * s);
  return x;
}

bool in_neighborhood(const CompactifiedPoint& p, const Vec& x, double eps) {
  if (p.kind == CompactifiedPoint::Kind::kFinite) return dist(p.coords, x) < eps;
  const double nx = norm(x);
  if (nx <= 1.0 / eps) return false;
  return dist(scaled(x, 1.0 / nx), p.coords) < eps;
}

Family counterexample_discs(int n, bool closed) {
  if (n < 1) throw InvalidOptions("need n >= 1 discs");
  std::vector<NearBall> members;
  members.reserve(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    NearBall b;
    const double r = 1.0 / static_cast<double>(i);
    b.parts.push_back({Vec{static_cast<double>(i), r}, r});
    b.core_index = 0;
    b.open_flag = !closed;
    members.push_back(std::move(b));
  }
  return Family(std::move(members));
}

Wedge inner_tangent_wedge(const ClosedBall& b1, const ClosedBall& b2) {
  if (b1.center.size() != 2 || b2.center.size() != 2)
    throw DimensionMismatch("inner tangents are planar");
  const double d = dist(b1.center, b2.center);
  const double rsum = b1.radius + b2.radius;
  if (d < rsum - kTolGeo) throw NoInnerTangents("discs overlap; no inner tangents");

  Wedge w;
  w.degenerate = d <= rsum + kTolGeo;

  // Internal homothety center divides the center segment in ratio r1 : r2.
  const double t = b1.radius / rsum;
  w.apex = add(b1.center, scaled(sub(b2.center, b1.center), t));

  const Vec u = scaled(sub(b2.center, b1.center), 1.0 / d);  // apex -> rightward axis
  const double L = dist(w.apex, b1.center);
  const double sin_phi = std::min(1.0, b1.radius / L);
  const double phi = std::asin(sin_phi);  // angle between axis and each tangent line

  const auto rotate = [](const Vec& v, double a) {
    return Vec{v[0] * std::cos(a) - v[1] * std::sin(a), v[0] * std::sin(a) + v[1] * std::cos(a)};
  };
  // Each tangent line through the apex makes angle asin(r1/L) with the
  // center axis.
  const Vec dir1 = rotate(u, phi);
  const Vec dir2 = rotate(u, -phi);
  w.line1 = canonicalize_flat(w.apex, {dir1});
  w.line2 = canonicalize_flat(w.apex, {dir2});

  // Inward normals: perpendicular to each tangent direction, pointing toward
  // the axis u. The wedge is the intersection of the two half-planes.
  Vec n1{-dir1[1], dir1[0]};
  if (dot(n1, u) < 0.0) n1 = scaled(n1, -1.0);
  Vec n2{-dir2[1], dir2[0]};
  if (dot(n2, u) < 0.0) n2 = scaled(n2, -1.0);
  w.normal1 = n1;
  w.normal2 = n2;
  return w;
}

bool wedge_contains_point(const Wedge& w, const Vec& p, double tol) {
  const Vec v = sub(p, w.apex);
  return dot(w.normal1, v) >= -tol && dot(w.normal2, v) >= -tol;
}

bool wedge_contains_ball(const Wedge& w, const ClosedBall& b, double tol) {
  const Vec v = sub(b.center, w.apex);
  return dot(w.normal1, v) >= b.radius - tol && dot(w.normal2, v) >= b.radius - tol;
}

Prop33Report verify_33_property(int prefix_n, const SolveOptions& opts) {
  if (prefix_n < 3) throw InvalidOptions("the (3,3) check needs n >= 3");
  const Family open_discs = counterexample_discs(prefix_n, /*closed=*/false);
  const Family closed_discs = counterexample_discs(prefix_n, /*closed=*/true);

  struct Item {
    std::array<int, 3> t;
  };
  std::vector<Item> triples;
  for (int i = 1; i <= prefix_n; ++i)
    for (int j = i + 1; j <= prefix_n; ++j)
      for (int l = j + 1; l <= prefix_n; ++l) triples.push_back({{i, j, l}});

  std::vector<TripleCheck> checks(triples.size());
  const bool par = opts.parallel && parallel_enabled();
#pragma omp parallel for schedule(dynamic) num_threads(max_threads()) if (par)
  for (long idx = 0; idx < static_cast<long>(triples.size()); ++idx) {
    const auto [i, j, l] = triples[static_cast<size_t>(idx)].t;
    TripleCheck tc;
    tc.triple = {i, j, l};

    // The wedge argument assumes discs i and j are disjoint (in the paper
    // they come from an independent subfamily). An overlapping pair shares a
    // point, so every third disc is reachable by a line through it and the
    // wedge step is vacuous.
    const ClosedBall& bi = closed_discs[static_cast<size_t>(i - 1)].core();
    const ClosedBall& bj = closed_discs[static_cast<size_t>(j - 1)].core();
    if (dist(bi.center, bj.center) < bi.radius + bj.radius - kTolGeo) {
      tc.wedge_ok = true;
    } else {
      const Wedge w = inner_tangent_wedge(bi, bj);
      tc.wedge_ok = wedge_contains_ball(w, closed_discs[static_cast<size_t>(l - 1)].core(), 1e-9);
    }

    SolveOptions so = opts;
    so.parallel = false;
    so.seed = mix_seed(opts.seed, static_cast<uint64_t>(idx));
    const Family triple_fam = open_discs.subfamily({i - 1, j - 1, l - 1});
    const FlatFit fit = min_max_flat(triple_fam, 1, so);
    tc.margin = -fit.signed_value;
    tc.line_ok = fit.signed_value < -kTolGeo;
    for (const NearBall& m : triple_fam.members())
      tc.line_ok = tc.line_ok && pierces(fit.flat, m);
    checks[static_cast<size_t>(idx)] = tc;
  }

  Prop33Report rep;
  rep.n = prefix_n;
  rep.triples = static_cast<int>(triples.size());
  rep.min_margin = std::numeric_limits<double>::infinity();
  rep.all_pass = true;
  for (const TripleCheck& tc : checks) {
    rep.min_margin = std::min(rep.min_margin, tc.margin);
    if (!tc.wedge_ok || !tc.line_ok) {
      rep.all_pass = false;
      rep.failures.push_back(tc);
    }
  }
  return rep;
}

namespace {

NearBall chord_chain(const Vec& a, const Vec& b) {
  NearBall nb;
  const double len = dist(a, b);
  const double radius = 1e-4 * len;
  const int count = static_cast<int>(std::ceil(len / radius)) + 1;  // spacing <= radius
  nb.parts.reserve(static_cast<size_t>(count));
  for (int j = 0; j < count; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(count - 1);
    nb.parts.push_back({add(scaled(a, 1.0 - t), scaled(b, t)), radius});
  }
  nb.core_index = count / 2;  // all radii equal; the middle keeps r_esc minimal
  return nb;
}

std::vector<std::array<Vec, 2>> make_chords(int n, uint64_t seed) {
  // Chord i joins the boundary point at angle theta_i = pi i / (2n) to the
  // point at pi + theta_i + delta_i. Pairwise crossing only needs the second
  // endpoints to stay in the same cyclic order as the first, so the jitters
  // may span a few slots as long as the jittered angles are re-sorted;
  // concurrency of three chords is destroyed generically and then verified
  // exactly by the caller.
  std::vector<std::array<Vec, 2>> chords;
  Rng rng(mix_seed(seed, 0xcdULL));
  const double gap = kPi / (2.0 * static_cast<double>(n));
  std::vector<double> second(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i)
    second[static_cast<size_t>(i - 1)] =
        gap * static_cast<double>(i) + gap * rng.uniform(-1.2, 1.2);
  std::sort(second.begin(), second.end());
  for (int i = 1; i <= n; ++i) {
    const double th = gap * static_cast<double>(i);
    const double phi = kPi + second[static_cast<size_t>(i - 1)];
    chords.push_back({Vec{std::cos(th), std::sin(th)}, Vec{std::cos(phi), std::sin(phi)}});
  }
  return chords;
}

struct SegGeometry {
  bool ok = false;
  double min_pair_margin = 0.0;
  double min_triple_sep = 0.0;
};

double cross2(const Vec& a, const Vec& b) { return a[0] * b[1] - a[1] * b[0]; }

std::optional<Vec> segment_intersection(const std::array<Vec, 2>& s, const std::array<Vec, 2>& t,
                                        double* transversality) {
  const Vec r = sub(s[1], s[0]);
  const Vec q = sub(t[1], t[0]);
  const double den = cross2(r, q);
  if (std::abs(den) < 1e-14) return std::nullopt;
  const Vec w = sub(t[0], s[0]);
  const double u = cross2(w, q) / den;
  const double v = cross2(w, r) / den;
  if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0) return std::nullopt;
  if (transversality)
    *transversality = std::min(std::min(u, 1.0 - u), std::min(v, 1.0 - v));
  return add(s[0], scaled(r, u));
}

double point_segment_dist(const Vec& p, const std::array<Vec, 2>& s) {
  const Vec r = sub(s[1], s[0]);
  const double t = std::clamp(dot(sub(p, s[0]), r) / norm2(r), 0.0, 1.0);
  return dist(p, add(s[0], scaled(r, t)));
}

SegGeometry check_chords(const std::vector<std::array<Vec, 2>>& chords) {
  SegGeometry g;
  g.min_pair_margin = std::numeric_limits<double>::infinity();
  g.min_triple_sep = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(chords.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double margin = 0.0;
      const std::optional<Vec> p = segment_intersection(chords[static_cast<size_t>(i)],
                                                        chords[static_cast<size_t>(j)], &margin);
      if (!p) return g;  // a non-crossing pair disqualifies the draw
      g.min_pair_margin = std::min(g.min_pair_margin, margin);
      for (int l = 0; l < n; ++l) {
        if (l == i || l == j) continue;
        g.min_triple_sep =
            std::min(g.min_triple_sep, point_segment_dist(*p, chords[static_cast<size_t>(l)]));
      }
    }
  g.ok = g.min_pair_margin > 1e-6 && g.min_triple_sep > 1e-3;
  return g;
}

std::vector<std::array<Vec, 2>> verified_chords(int n, uint64_t seed) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    std::vector<std::array<Vec, 2>> chords = make_chords(n, mix_seed(seed, static_cast<uint64_t>(attempt)));
    if (check_chords(chords).ok) return chords;
  }
  throw DegenerateInput("segments_family: no valid jitter draw found");
}

}  // namespace

std::vector<std::array<Vec, 2>> segments_family_chords(int n, uint64_t seed) {
  if (n < 2) throw InvalidOptions("need n >= 2 segments");
  return verified_chords(n, seed);
}

Family segments_family(int n, uint64_t seed) {
  const std::vector<std::array<Vec, 2>> chords = segments_family_chords(n, seed);
  std::vector<NearBall> members;
  members.reserve(chords.size());
  for (const auto& c : chords) members.push_back(chord_chain(c[0], c[1]));
  return Family(std::move(members));
}

SegmentsReport verify_segments_family(int n, uint64_t seed) {
  const std::vector<std::array<Vec, 2>> chords = segments_family_chords(n, seed);
  const SegGeometry g = check_chords(chords);
  SegmentsReport rep;
  rep.n = n;
  rep.pairwise_intersect = g.min_pair_margin > 0.0 && g.ok;
  rep.no_triple_point = g.min_triple_sep > 1e-3;
  rep.min_pair_margin = g.min_pair_margin;
  rep.min_triple_sep = g.min_triple_sep;
  return rep;
}

Family sharpness_family2(int n, uint64_t seed) {
  if (n < 1) throw InvalidOptions("need n >= 1 members");
  const std::vector<std::array<Vec, 2>> chords = segments_family_chords(std::max(2, n), seed);
  std::vector<NearBall> members;
  members.reserve(static_cast<size_t>(n));
  for (int i = 1; i <= n; ++i) {
    const double scale = std::pow(2.0, static_cast<double>(i));
    NearBall nb;
    nb.parts.push_back({Vec{scale, 0.0}, scale / 4.0});  // the "far" disc, genuinely largest
    const NearBall chain = chord_chain(chords[static_cast<size_t>(i - 1)][0],
                                       chords[static_cast<size_t>(i - 1)][1]);
    nb.parts.insert(nb.parts.end(), chain.parts.begin(), chain.parts.end());
    nb.core_index = 0;
    members.push_back(std::move(nb));
  }
  return Family(std::move(members));
}

NeighborhoodSampler family_sampler(const Family& f) {
  return [&f](const Vec& x, double delta) -> std::optional<int> {
    for (size_t i = 0; i < f.size(); ++i) {
      const NearBallStats s = nearball_stats(f[i]);
      if (dist(s.center, x) < delta && s.r_in < delta && !member_contains_point(f[i], x))
        return static_cast<int>(i);
    }
    return std::nullopt;
  };
}

DisjointSeqResult disjoint_sequence_builder(const Family& f, const NeighborhoodSampler& sampler,
                                            const Vec& x, double K, int target_len) {
  if (K < 1.0) throw InvalidOptions("near-ball constant K must be >= 1");
  DisjointSeqResult res;
  double delta = 1.0;
  while (static_cast<int>(res.picked.size()) < target_len) {
    const std::optional<int> pick = sampler(x, delta);
    if (!pick) return res;  // sampler exhausted before the target length
    const int idx = *pick;
    const double eps = member_point_dist(f[static_cast<size_t>(idx)], x);
    if (eps <= 0.0) return res;  // not a valid type-(a) witness
    res.picked.push_back(idx);
    res.dists.push_back(eps);
    delta = eps / (10.0 * K);
  }
  res.reached = true;
  return res;
}

}  // namespace tvlab
