#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tvlab/nearball.hpp"

namespace tvlab {

enum class SolveMethod { kAuto, kConvexK0, kMultistartDescent, kGridOracle };

struct SolveOptions {
  int restarts = 32;
  int max_iters = 400;       // Nelder-Mead evaluation budget per restart
  double tol_feas = 1e-7;
  uint64_t seed = 1;
  SolveMethod method = SolveMethod::kAuto;
  double grid_step = 1e-2;   // initial cell size for the grid oracle
  bool parallel = true;      // allow the OpenMP kernels for this solve
};

struct FlatFit {
  KFlat flat;
  double value = 0.0;         // max over members of min over parts, clamped at 0
  double signed_value = 0.0;  // same without the clamp (piercing margin when < 0)
  double lower_bound = 0.0;   // certified lower bound on the signed optimum
  bool certified = false;     // global-optimality certificate (k = 0, single-part)
};

// Minimize g(flat) = max over members of min over parts of dist_ball_flat
// over the canonical chart (c, v_1..v_k). k = 0 with single-part members is
// solved to certified global optimality by the ellipsoid method; everything
// else is seeded multi-start simplex descent with re-orthonormalization.
FlatFit min_max_flat(const Family& f, int k, const SolveOptions& opts);

// Exact minimax of max_i (||x - c_i|| - r_i) for plain balls; the certified
// convex core behind k = 0 and behind every per-direction reduction.
FlatFit solve_k0_convex(const std::vector<ClosedBall>& balls, const SolveOptions& opts);

struct TransversalResult {
  bool yes = false;
  bool certified_no = false;  // NO backed by the convex lower bound
  FlatFit best;
};

TransversalResult exists_transversal(const Family& f, int k, const SolveOptions& opts);

struct TransversalCertificate {
  int k = 0;
  std::vector<KFlat> flats;
  std::vector<int> assignment;    // member index -> flat index
  std::vector<double> residuals;  // closed: clamped distance; open: signed margin
  bool certified = false;
};

struct PierceResult {
  bool success = false;
  TransversalCertificate cert;
  double best_residual = 0.0;  // best max-residual reached (meaningful on failure)
  bool exhaustive = false;     // partition enumeration was complete
};

// Piercing with at most m k-flats. Exhaustive partition enumeration (after
// collapsing exact duplicate members) when at most 10 distinct members and
// m <= 3; alternating assign/refit otherwise.
PierceResult pierce_with_m_flats(const Family& f, int k, int m, const SolveOptions& opts);

struct GreedyPiercing {
  int m = 0;
  TransversalCertificate cert;
};

// Greedy upper bound on the piercing number: repeatedly pick the flat that
// pierces the most remaining members (seeded from (k+1)-subsets of cores,
// locally improved), remove them, recurse.
GreedyPiercing greedy_piercing_upper(const Family& f, int k, const SolveOptions& opts);

// Literal grid search over the flat parameters with nested refinement.
// Restricted to d <= 3 and |f| <= 8; supported charts: k=0; (d=2,k=1);
// (d=3,k=1); (d=3,k=2).
FlatFit grid_oracle(const Family& f, int k, const SolveOptions& opts);

struct SweepResult {
  double theta = 0.0;         // line direction angle in [0, pi)
  double offset = 0.0;        // signed offset along the normal
  double signed_value = 0.0;  // minimax signed distance at the optimum
  KFlat flat;
};

// Exhaustive direction sweep for lines in the plane: for each direction the
// offset problem is solved exactly, so the only discretization is in theta
// (refined around the best angle). Independent of min_max_flat.
SweepResult line_sweep_oracle(const Family& f, double theta_step = 1e-4);

// Deterministic preference order on (value, flat) pairs.
bool fit_better(const FlatFit& a, const FlatFit& b);

}  // namespace tvlab
