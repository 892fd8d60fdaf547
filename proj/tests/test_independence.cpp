#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "tvlab/independence.hpp"

using namespace tvlab;
using tvlab::test::ball;
using tvlab::test::ball_family;

namespace {

constexpr double kPi = std::numbers::pi;

// Case-2 style sequence: generic directions, geometrically shrinking scale.
Family shrinking_sequence(int count, double scale = 100.0, int d = 3) {
  std::vector<NearBall> members;
  Rng rng(99);
  for (int n = 1; n <= count; ++n) {
    Vec u = rng.unit_vec(d);
    const double s = scale * std::pow(2.0, -n);
    members.push_back(ball(scaled(u, s), scale * std::pow(8.0, -n)));
  }
  return Family(std::move(members));
}

}  // namespace

TEST_CASE("is_k_independent") {
  SolveOptions opts;

  SUBCASE("k=0 independence is pairwise disjointness") {
    const Family overlapping = ball_family({{{0.0, 0.0}, 1.0}, {{1.0, 0.0}, 1.0}});
    const IndependenceOutcome out = is_k_independent(overlapping, 0, opts);
    CHECK_FALSE(out.independent);
    CHECK(out.violating_subset == std::vector<int>{0, 1});
    // the violating 0-flat is a common point
    CHECK(member_contains_point(overlapping[0], out.violating_flat.anchor));
    CHECK(member_contains_point(overlapping[1], out.violating_flat.anchor));
  }

  SUBCASE("k=0 witness is certified and exact") {
    const Family disjoint = ball_family({{{0.0, 0.0}, 1.0}, {{5.0, 0.0}, 1.0}, {{0.0, 5.0}, 1.0}});
    const IndependenceOutcome out = is_k_independent(disjoint, 0, opts);
    CHECK(out.independent);
    CHECK(out.witness.certified);
    CHECK(out.witness.evidence.size() == 3);
  }

  SUBCASE("collinear tiny balls are violated by the center line") {
    const Family f = ball_family({{{0.0, 0.0}, 0.01}, {{1.0, 1.0}, 0.01}, {{2.0, 2.0}, 0.01}});
    const IndependenceOutcome out = is_k_independent(f, 1, opts);
    CHECK_FALSE(out.independent);
    for (const NearBall& b : f.members()) CHECK(pierces(out.violating_flat, b));
  }

  SUBCASE("tetrahedron vertices are 1-independent in R^3") {
    const double h = std::sqrt(3.0) / 2.0;
    const Family f = ball_family({{{0.0, 0.0, 0.0}, 0.01},
                                  {{1.0, 0.0, 0.0}, 0.01},
                                  {{0.5, h, 0.0}, 0.01},
                                  {{0.5, h / 3.0, std::sqrt(2.0 / 3.0)}, 0.01}});
    const IndependenceOutcome out = is_k_independent(f, 1, opts);
    CHECK(out.independent);
    CHECK(out.witness.evidence.size() == 4);  // the four 3-subsets
    for (const SubsetEvidence& ev : out.witness.evidence) CHECK(ev.best_value > kTolIndep);

    // exhaustive grid oracle confirms one subset at step 1e-2
    SolveOptions go;
    go.grid_step = 1e-2;
    const FlatFit oracle = grid_oracle(f.subfamily({0, 1, 2}), 1, go);
    CHECK(oracle.value > 0.3);
  }

  SUBCASE("families smaller than k+2 use the affine side condition") {
    // two disjoint balls, k=1 in R^3: no 0-flat meets both
    const Family ok = ball_family({{{0.0, 0.0, 0.0}, 0.5}, {{3.0, 0.0, 0.0}, 0.5}});
    CHECK(is_k_independent(ok, 1, opts).independent);
    // overlapping pair fails the side condition
    const Family bad = ball_family({{{0.0, 0.0, 0.0}, 1.0}, {{1.0, 0.0, 0.0}, 1.0}});
    CHECK_FALSE(is_k_independent(bad, 1, opts).independent);
  }
}

TEST_CASE("greedy_independent_subsequence") {
  SolveOptions opts;

  SUBCASE("generic shrinking sequence reaches length 6") {
    const Family seq = shrinking_sequence(14);
    const GreedySubsequenceResult res = greedy_independent_subsequence(seq, 1, 6, opts);
    CHECK(res.reached_target);
    CHECK(res.accepted.size() == 6);
    // the output always passes the direct independence check
    const IndependenceOutcome re = is_k_independent(seq.subfamily(res.accepted), 1, opts);
    CHECK(re.independent);
  }

  SUBCASE("concentric equal balls stop at k+1") {
    std::vector<NearBall> members(8, ball({1.0, 1.0, 1.0}, 0.5));
    const GreedySubsequenceResult res =
        greedy_independent_subsequence(Family(std::move(members)), 1, 5, opts);
    CHECK_FALSE(res.reached_target);
    CHECK(res.accepted.size() == 2);
  }

  SUBCASE("closed counterexample discs cap at 2") {
    const Family f = counterexample_discs(10, /*closed=*/true);
    const GreedySubsequenceResult res = greedy_independent_subsequence(f, 1, 3, opts);
    CHECK_FALSE(res.reached_target);
    CHECK(res.accepted.size() == 2);
  }
}

TEST_CASE("orthogonal_project_family") {
  SUBCASE("drops the last coordinate and keeps radii") {
    const Family f({ball({1.0, 2.0, 3.0}, 0.7)});
    const Family p = orthogonal_project_family(f);
    CHECK(p.dim() == 2);
    CHECK(p[0].core().center == Vec{1.0, 2.0});
    CHECK(p[0].core().radius == 0.7);
  }

  SUBCASE("plain balls keep K = 1 and K never increases") {
    Rng rng(55);
    for (int t = 0; t < 200; ++t) {
      const int d = 3 + rng.uniform_int(2);
      std::vector<NearBall> members;
      for (int i = 0; i < 4; ++i) {
        NearBall b;
        Vec c(static_cast<size_t>(d));
        for (double& x : c) x = rng.uniform(-8.0, 8.0);
        const double r_in = rng.uniform(0.3, 1.5);
        b.parts.push_back({c, r_in});
        const int extra = rng.uniform_int(3);
        for (int e = 0; e < extra; ++e) {
          Vec pc = c;
          axpy(pc, rng.uniform(0.0, 2.0) * r_in, rng.unit_vec(d));
          b.parts.push_back({pc, rng.uniform(0.2, 0.9) * r_in});
        }
        members.push_back(std::move(b));
      }
      const Family f(std::move(members));
      const Family p = orthogonal_project_family(f);
      CHECK(p.constant() <= f.constant() + 1e-12);
    }
  }

  SUBCASE("cylinder preimages of piercing flats pierce the originals") {
    Rng rng(57);
    for (int t = 0; t < 1000; ++t) {
      const int d = 3;
      // a point J' in the projected plane, and members whose projections meet it
      const Vec jp{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
      std::vector<NearBall> members;
      for (int i = 0; i < 3; ++i) {
        const double r = rng.uniform(0.2, 1.0);
        Vec c2 = jp;
        axpy(c2, rng.uniform(0.0, 0.95) * r, rng.unit_vec(2));
        members.push_back(ball({c2[0], c2[1], rng.uniform(-20.0, 20.0)}, r));
      }
      const Family f(std::move(members));
      // lift: the vertical line through J'
      const KFlat cylinder = canonicalize_flat({jp[0], jp[1], 0.0}, {{0.0, 0.0, 1.0}});
      for (const NearBall& b : f.members()) CHECK(pierces(cylinder, b));
      (void)d;
    }
  }
}

TEST_CASE("central_project_family") {
  const Cone cone{{0.0, 0.0, -1.0}, kPi / 4.0};

  SUBCASE("a ball on the axis projects to the tangent-plane origin") {
    const Family f({ball({0.0, 0.0, -2.0}, 0.2)});
    const Family p = central_project_family(f, cone);
    CHECK(p.dim() == 2);
    CHECK(norm(p[0].core().center) <= 1e-12);
    CHECK(p[0].core().radius == doctest::Approx(0.1).epsilon(1e-6));
  }

  SUBCASE("random conforming families respect the sqrt(2) K bound") {
    Rng rng(61);
    for (int t = 0; t < 100; ++t) {
      std::vector<NearBall> members;
      for (int i = 0; i < 4; ++i) {
        const double beta = rng.uniform(0.0, kPi / 8.0);
        const double nx = rng.uniform(0.5, 20.0);
        const double zeta_cap = kPi / 4.0 - beta - 0.02;
        const double r_esc = nx * std::sin(zeta_cap * rng.uniform(0.05, 0.95));
        const double q = 1.0 + rng.uniform() * 2.0;
        const double r_in = r_esc / q;
        Vec u = rng.unit_vec(3);
        u[2] = -std::abs(u[2]) - 1e-3;
        u = normalized(u);
        // rotate toward the axis to hit the requested angle
        Vec axis{0.0, 0.0, -1.0};
        Vec perp = u;
        axpy(perp, -dot(u, axis), axis);
        Vec c = scaled(axis, std::cos(beta));
        if (norm(perp) > 1e-9) axpy(c, std::sin(beta) / norm(perp), perp);
        c = scaled(normalized(c), nx);

        NearBall b;
        b.parts.push_back({c, r_in});
        b.core_index = 0;
        if (r_esc > r_in * 1.0001) {
          const double rf = 0.2 * r_in;
          Vec fc = c;
          axpy(fc, r_esc - rf, rng.unit_vec(3));
          b.parts.push_back({fc, rf});
        }
        members.push_back(std::move(b));
      }
      const Family f(std::move(members));
      const Family p = central_project_family(f, cone);
      CHECK(p.constant() <= std::sqrt(2.0) * f.constant() * (1.0 + 1e-6));
    }
  }

  SUBCASE("members poking out of the pi/4 cone are rejected") {
    const Family f({ball({3.0, 0.0, -3.0}, 1.5)});  // 45 degrees off-axis plus radius
    CHECK_THROWS_AS(central_project_family(f, cone), PreconditionViolated);
  }

  SUBCASE("flats through the origin project to piercing flats") {
    Rng rng(63);
    for (int t = 0; t < 200; ++t) {
      // a line through the origin into the lower cone, and balls touching it
      Vec u = rng.unit_vec(3);
      u[2] = -(2.0 + std::abs(u[2]));
      u = normalized(u);
      std::vector<NearBall> members;
      for (int i = 0; i < 2; ++i) {
        const double s = rng.uniform(1.0, 4.0);
        const double delta = rng.uniform(0.005, 0.02);
        Vec c = scaled(u, s);
        Vec w = rng.unit_vec(3);
        axpy(w, -dot(w, u), u);
        if (norm(w) < 1e-9) continue;
        axpy(c, delta, scaled(w, 1.0 / norm(w)));
        members.push_back(ball(c, 2.0 * delta));
      }
      if (members.size() < 2) continue;
      const Family f(std::move(members));
      const Cone axis_cone{{0.0, 0.0, -1.0}, kPi / 4.0};
      Family p;
      try {
        p = central_project_family(f, axis_cone);
      } catch (const PreconditionViolated&) {
        continue;
      }
      // image of the line = its tangent-plane trace, a point in R^2
      const Vec trace{u[0] / -u[2] * 1.0, u[1] / -u[2] * 1.0};
      const KFlat point_flat{trace, {}};
      for (const NearBall& b : p.members()) CHECK(pierces(point_flat, b));
    }
  }
}

TEST_CASE("epsilon0_for_tuple") {
  SolveOptions opts;
  const Vec e2{0.0, 1.0};

  SUBCASE("two unit discs: steepest transversal pins the angle") {
    const Family tuple = ball_family({{{0.0, 0.0}, 1.0}, {{3.0, 0.0}, 1.0}});
    // 1-D sweep oracle over the line angle
    double oracle = kPi;
    for (double th = 0.0; th < kPi; th += 1e-4) {
      const double nx = -std::sin(th), ny = std::cos(th);
      double lo = -1e300, hi = 1e300;
      for (const NearBall& b : tuple.members()) {
        const double c = nx * b.core().center[0] + ny * b.core().center[1];
        lo = std::max(lo, c - b.core().radius);
        hi = std::min(hi, c + b.core().radius);
      }
      if (lo <= hi) {  // a line with direction th pierces both
        const double angle_to_axis = std::abs(kPi / 2.0 - th);
        oracle = std::min(oracle, std::min(angle_to_axis, kPi - angle_to_axis));
      }
    }
    CHECK(oracle == doctest::Approx(kPi / 2.0 - std::asin(2.0 / 3.0)).epsilon(1e-3));

    const Epsilon0Result res = epsilon0_for_tuple(tuple, 1, e2, opts);
    CHECK_FALSE(res.no_transversal);
    CHECK(res.raw_estimate == doctest::Approx(oracle).epsilon(2e-3));
    CHECK(res.eps0 == doctest::Approx(0.5 * res.raw_estimate));
  }

  SUBCASE("a tuple pierced by an axis-parallel line throws") {
    const Family tuple = ball_family({{{0.0, 0.0}, 1.0}, {{0.0, 4.0}, 1.0}});
    CHECK_THROWS_AS(epsilon0_for_tuple(tuple, 1, e2, opts), TupleHasAxisParallelTransversal);
  }

  SUBCASE("tiny far-apart balls keep a positive margin") {
    const Family tuple = ball_family({{{0.0, 0.0}, 0.05}, {{5.0, 0.2}, 0.05}});
    const Epsilon0Result res = epsilon0_for_tuple(tuple, 1, e2, opts);
    CHECK(res.eps0 > 0.5);
  }
}

TEST_CASE("claim verifiers") {
  SUBCASE("cone claim: clean at the paper premise, broken at 10x") {
    const ClaimReport pos = verify_claim_cone(2.0, 10.0, 0.1, 2000, 7);
    CHECK(pos.premise_ok);
    CHECK(pos.violations == 0);
    CHECK(pos.max_observed <= 0.1);
    const ClaimReport neg = verify_claim_cone(2.0, 10.0, 0.1, 2000, 7, 3, 10.0);
    CHECK_FALSE(neg.premise_ok);
    CHECK(neg.violations >= 1);
  }
  SUBCASE("cone claim with D = 0 reduces to set membership") {
    const ClaimReport rep = verify_claim_cone(3.0, 0.0, 0.05, 1000, 11);
    CHECK(rep.violations == 0);
  }
  SUBCASE("wide-cone claim at 0.9 premise, violations past it") {
    const double cap = (kPi / 4.0) / (1.0 + kPi * 1.0 / 2.0);
    const ClaimReport pos = verify_claim_wide_cone(1.0, 0.9 * cap, 2000, 7);
    CHECK(pos.premise_ok);
    CHECK(pos.violations == 0);
    CHECK(pos.max_observed <= pos.bound + 1e-9);
    const ClaimReport neg = verify_claim_wide_cone(1.0, 2.0 * cap, 2000, 7);
    CHECK_FALSE(neg.premise_ok);
    CHECK(neg.violations >= 1);
  }
  SUBCASE("near-axis members only see the gamma term") {
    const double cap = (kPi / 4.0) / (1.0 + kPi * 3.0 / 2.0);
    const ClaimReport rep = verify_claim_wide_cone(3.0, 1e-4 * cap, 500, 13);
    CHECK(rep.violations == 0);
    CHECK(rep.max_observed < 1e-3);
  }
  SUBCASE("ktok ratio bound") {
    const ClaimReport rep = verify_claim_ktok(3.0, 2000, 7);
    CHECK(rep.violations == 0);
    CHECK(rep.max_observed <= std::sqrt(2.0) * 3.0 + 1e-6);
  }
}

TEST_CASE("find_strong_point_proxy") {
  SolveOptions opts;

  SUBCASE("well-separated singletons are weak at budget 1") {
    const Family f = ball_family({{{0.0, 0.0}, 0.2}, {{10.0, 0.0}, 0.2}, {{0.0, 10.0}, 0.2}});
    const StrongPointReport rep = find_strong_point_proxy(f, 0, 1, {1.0, 0.1}, opts);
    CHECK_FALSE(rep.strong);
    CHECK(rep.score == 0);
  }

  SUBCASE("counterexample discs cluster at the +x direction at infinity") {
    const Family f = counterexample_discs(25);
    const StrongPointReport rep = find_strong_point_proxy(f, 0, 2, {0.5, 0.2, 0.1}, opts);
    CHECK(rep.location.kind == CompactifiedPoint::Kind::kAtInfinity);
    CHECK(rep.location.coords[0] == doctest::Approx(1.0).epsilon(1e-2));
    CHECK(rep.strong);
    CHECK(rep.budgets.back() >= 2);
  }

  SUBCASE("a shrinking sequence pins the proxy at its limit point") {
    std::vector<NearBall> members;
    for (int n = 1; n <= 14; ++n)
      members.push_back(ball({std::pow(2.0, -n), 0.0}, std::pow(8.0, -n)));
    const Family f(std::move(members));
    const StrongPointReport rep = find_strong_point_proxy(f, 0, 2, {0.5, 0.1, 0.02}, opts);
    CHECK(rep.location.kind == CompactifiedPoint::Kind::kFinite);
    CHECK(norm(rep.location.coords) < 0.1);
    CHECK(rep.strong);
  }
}

TEST_CASE("inflation keeps far members independent of bounded tuples") {
  // previous members inside B(0,D) with no near-vertical common line; a far
  // member high up the axis cannot complete a pierced (k+2)-tuple
  SolveOptions opts;
  const double D = 5.0;
  std::vector<NearBall> members;
  members.push_back(ball({-3.0, 0.0, 0.0}, 0.4));
  members.push_back(ball({3.0, 0.5, 0.0}, 0.4));
  members.push_back(ball({0.0, -3.0, 0.1}, 0.4));
  for (const NearBall& b : members) CHECK(norm(b.core().center) + b.core().radius <= D);
  members.push_back(ball({0.2, -0.1, 80.0}, 0.5));  // the far candidate
  const Family f(std::move(members));

  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j) {
      const FlatFit fit = min_max_flat(f.subfamily({i, j, 3}), 1, opts);
      CHECK(fit.value > 1e-2);
    }

  // randomized flat search finds no violating line either
  Rng rng(71);
  for (int t = 0; t < 2000; ++t) {
    Vec anchor{rng.uniform(-D, D), rng.uniform(-D, D), rng.uniform(-1.0, 1.0)};
    const KFlat line = canonicalize_flat(anchor, {rng.unit_vec(3)});
    int hit = 0;
    for (int i = 0; i < 3; ++i)
      if (pierces(line, f[static_cast<size_t>(i)])) ++hit;
    if (hit >= 2) CHECK_FALSE(pierces(line, f[3]));
  }
}
