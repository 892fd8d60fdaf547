#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tvlab/solver.hpp"

namespace tvlab {

// One-point-per-ray compactification of R^d, homeomorphic to the closed ball
// of radius pi/2 via x -> (x/||x||) arctan(||x||).
struct CompactifiedPoint {
  enum class Kind { kFinite, kAtInfinity };
  Kind kind = Kind::kFinite;
  Vec coords;  // finite point, or unit direction for a point at infinity
};

Vec compactify(const Vec& x);
Vec decompactify(const Vec& y);  // requires ||y|| < pi/2

// Neighborhood membership in the compactified model. Finite points use the
// open Euclidean ball; points at infinity use the finite-eps-neighborhood
// { x : ||x/||x|| - p|| < eps and ||x|| > 1/eps }.
bool in_neighborhood(const CompactifiedPoint& p, const Vec& x, double eps);

// The open-disc family F_n = B((n, 1/n), 1/n); `closed` drops the open flag
// for the closed-disc variant.
Family counterexample_discs(int n, bool closed = false);

// Region bounded by the two common inner tangents of two disjoint discs,
// on the side of the internal homothety center that contains b2.
struct Wedge {
  Vec apex;
  KFlat line1, line2;           // the tangent lines as 1-flats
  Vec normal1, normal2;         // inward normals; inside = both >= 0 at p - apex
  bool degenerate = false;      // touching discs: the tangents coincide
};

Wedge inner_tangent_wedge(const ClosedBall& b1, const ClosedBall& b2);
bool wedge_contains_point(const Wedge& w, const Vec& p, double tol = kTolGeo);
bool wedge_contains_ball(const Wedge& w, const ClosedBall& b, double tol = kTolGeo);

struct TripleCheck {
  std::array<int, 3> triple{};  // 1-based member indices i < j < l
  bool wedge_ok = false;
  bool line_ok = false;
  double margin = 0.0;  // strict piercing margin of the found line
};

struct Prop33Report {
  int n = 0;
  int triples = 0;
  bool all_pass = false;
  double min_margin = 0.0;
  std::vector<TripleCheck> failures;
};

// For every triple {i<j<l} of counterexample_discs(n): the closed version of
// disc l lies in the inner tangent wedge of discs i and j, and the solver
// finds a line strictly piercing all three open discs.
Prop33Report verify_33_property(int prefix_n, const SolveOptions& opts);

// Pairwise-crossing chords of the unit disc with no three concurrent,
// rendered as ball chains (radius 1e-4 of the chord length, spacing <= radius).
Family segments_family(int n, uint64_t seed = 7);

// Ideal chord endpoints used by segments_family at the same seed; exposed so
// verifiers can reason about the un-discretized segments.
std::vector<std::array<Vec, 2>> segments_family_chords(int n, uint64_t seed = 7);

struct SegmentsReport {
  int n = 0;
  bool pairwise_intersect = false;
  bool no_triple_point = false;
  double min_pair_margin = 0.0;    // crossing transversality margin
  double min_triple_sep = 0.0;     // distance of a pair-crossing to the nearest third chord
};

SegmentsReport verify_segments_family(int n, uint64_t seed = 7);

// F' member i: the ball B((2^i, 0), 2^i / 4) (core) together with chord e_i.
// Condition 1 of the near-ball definition stays bounded while the additive
// condition 2 fails as i grows.
Family sharpness_family2(int n, uint64_t seed = 7);

// Answers "a member with x_B in B(x, delta) (open), r_in < delta, and not
// containing x", or nothing.
using NeighborhoodSampler = std::function<std::optional<int>(const Vec& x, double delta)>;

// Deterministic sampler over a family: smallest matching member index.
NeighborhoodSampler family_sampler(const Family& f);

struct DisjointSeqResult {
  std::vector<int> picked;
  bool reached = false;         // target_len members found
  std::vector<double> dists;    // distance from x of each pick (strictly decreasing)
};

// The Lemma-1 construction at a type-(a) point: delta_0 = 1, and after a pick
// at distance eps from x the next window is eps / (10 K).
DisjointSeqResult disjoint_sequence_builder(const Family& f, const NeighborhoodSampler& sampler,
                                            const Vec& x, double K, int target_len);

}  // namespace tvlab
