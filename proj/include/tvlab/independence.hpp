#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tvlab/constructions.hpp"
#include "tvlab/solver.hpp"

namespace tvlab {

// A (k+2)-subset counts as non-pierceable only when the solver's best
// residual exceeds this after the full restart budget; it separates solver
// noise from genuine infeasibility and must stay well above tol_feas.
inline constexpr double kTolIndep = 1e-4;

struct SubsetEvidence {
  std::vector<int> subset;     // member indices, ascending
  double best_value = 0.0;     // best minimax value found by the solver
  KFlat best_flat;
  bool certified = false;      // k = 0 evidence is exact
};

struct IndependenceWitness {
  int k = 0;
  std::vector<int> member_indices;
  std::vector<SubsetEvidence> evidence;  // one row per (k+2)-subset
  bool affine_checked = false;           // small-family (n < k+2) side condition ran
  bool certified = false;
  double tol_indep = kTolIndep;
};

struct IndependenceOutcome {
  bool independent = false;
  IndependenceWitness witness;
  std::vector<int> violating_subset;  // nonempty iff a piercing flat was found
  KFlat violating_flat;
};

// No k-flat pierces k+2 members (solver-checked per subset); families with
// n < k+2 members must admit no (n-2)-flat through all of them.
IndependenceOutcome is_k_independent(const Family& f, int k, const SolveOptions& opts,
                                     double tol_indep = kTolIndep);

struct GreedySubsequenceResult {
  std::vector<int> accepted;
  bool reached_target = false;
  IndependenceWitness witness;
};

// The inductive subsequence construction: the first k+1 members are accepted
// unconditionally; a later candidate joins only if, for every (k+1)-subset S
// of the accepted members, no k-flat pierces S together with the candidate.
GreedySubsequenceResult greedy_independent_subsequence(const Family& seq, int k, int target_len,
                                                       const SolveOptions& opts,
                                                       double tol_indep = kTolIndep);

// Drop the last coordinate of every part center; radii and cores are kept.
// The near-ball constant never increases.
Family orthogonal_project_family(const Family& f);

// Central projection from the origin onto the hyperplane tangent to the unit
// sphere at the cone axis's antipode-free foot (the paper's x_d = -1 plane
// after rotating the axis there). Every member's escribed ball must lie in a
// pi/4 cone around the axis. Each output member is the concentric sandwich
// of the image: inner ball inscribed in the core's image (designated core)
// and outer ball containing the escribed ball's image; the resulting family
// constant is at most sqrt(2) * K * (1 + 1e-6).
Family central_project_family(const Family& f, const Cone& apex_cone);

struct Epsilon0Result {
  double eps0 = 0.0;          // conservative bound: half the raw estimate
  double raw_estimate = 0.0;  // smallest angle to the axis over piercing flats
  KFlat witness_flat;         // achieving flat
  bool no_transversal = false;  // no k-flat pierces the tuple at all
};

// Estimates inf over k-flats J piercing the whole tuple of the angle between
// J's direction span and `axis`, by penalized multi-start minimization.
// Throws TupleHasAxisParallelTransversal when the infimum reaches zero.
struct TupleHasAxisParallelTransversal : GeomError {
  using GeomError::GeomError;
};

Epsilon0Result epsilon0_for_tuple(const Family& tuple, int k, const Vec& axis,
                                  const SolveOptions& opts);

struct ClaimReport {
  std::string claim;
  int trials = 0;
  int violations = 0;
  double max_observed = 0.0;  // largest angle / aperture / ratio seen
  double bound = 0.0;         // the bound the observations must respect
  bool premise_ok = true;
  std::map<std::string, double> params;
};

// Claim "cone": near-balls with centers in C(axis, eps') far from the origin
// keep their D-inflations inside C(axis, eps1), eps' = eps1/(1 + pi/2 (K+D)).
// premise_scale > 1 widens the sampling neighborhood to break the premise
// (negative control).
ClaimReport verify_claim_cone(double K, double D, double eps1, int trials, uint64_t seed,
                              int dim = 3, double premise_scale = 1.0);

// Wide-cone claim: members with centers in C(l, alpha) and cores off the ray
// have escribed balls inside the pi/4 cone, aperture <= alpha (1 + pi K / 2).
ClaimReport verify_claim_wide_cone(double K, double alpha, int trials, uint64_t seed,
                                   int dim = 3);

// Claim "ktok": escribed/inscribed ratio measured around the projected core
// center after central projection is at most sqrt(2) K.
ClaimReport verify_claim_ktok(double K, int trials, uint64_t seed, int dim = 3);

struct StrongPointReport {
  CompactifiedPoint location;
  int score = 0;                      // members in the smallest neighborhood that
                                      // overflow the flat budget (0 if none does)
  std::vector<double> radii;          // descending neighborhood radii
  std::vector<int> budgets;           // greedy piercing demand per radius
  bool strong = false;                // demand persists >= 2 at the smallest radius
};

// Finite-scale proxy for the strong/weak dichotomy: cluster member centers in
// the compactified model and measure the greedy piercing demand of each
// shrinking neighborhood. Explicitly a heuristic stand-in for the paper's
// asymptotic notion.
StrongPointReport find_strong_point_proxy(const Family& f, int k, int flat_budget,
                                          const std::vector<double>& radii,
                                          const SolveOptions& opts);

}  // namespace tvlab
