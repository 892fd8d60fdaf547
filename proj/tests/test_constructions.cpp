#include <doctest.h>

#include <cmath>
#include <numbers>

#include "test_util.hpp"
#include "tvlab/constructions.hpp"
#include "tvlab/runtime.hpp"

using namespace tvlab;
using tvlab::test::ball;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("compactify") {
  CHECK(compactify({0.0, 0.0}) == Vec{0.0, 0.0});
  const Vec img = compactify({1.0, 0.0});
  CHECK(img[0] == doctest::Approx(kPi / 4.0).epsilon(1e-15));
  CHECK(img[1] == 0.0);

  SUBCASE("norms approach pi/2 along a ray") {
    double prev = 0.0;
    for (double t : {1.0, 10.0, 1e3, 1e6}) {
      const double n = norm(compactify({t, t}));
      CHECK(n > prev);
      CHECK(n < kPi / 2.0);
      prev = n;
    }
    CHECK(prev > kPi / 2.0 - 1e-5);
  }

  SUBCASE("injective and norm-monotone") {
    Rng rng(3);
    for (int t = 0; t < 500; ++t) {
      const int d = 2 + rng.uniform_int(2);
      Vec x(static_cast<size_t>(d)), y(static_cast<size_t>(d));
      for (double& v : x) v = rng.uniform(-100.0, 100.0);
      for (double& v : y) v = rng.uniform(-100.0, 100.0);
      if (norm(x) < norm(y)) CHECK(norm(compactify(x)) < norm(compactify(y)));
    }
  }

  SUBCASE("round trip: 1e-12 relative at desk scale, metric-bounded beyond") {
    Rng rng(4);
    for (int t = 0; t < 400; ++t) {
      const double mag = std::pow(10.0, rng.uniform(-3.0, 6.0));
      const Vec x = scaled(rng.unit_vec(3), mag);
      const Vec back = decompactify(compactify(x));
      const double err = dist(back, x);
      if (mag <= 1e3)
        CHECK(err <= 1e-12 * (1.0 + norm(x)));
      else
        // the inverse stretches by 1 + ||x||^2; the image-space error stays at
        // machine size, so measure the round trip in the pullback metric
        CHECK(err <= 1e-12 * (1.0 + norm2(x)));
    }
  }
}

TEST_CASE("in_neighborhood") {
  const CompactifiedPoint fin{CompactifiedPoint::Kind::kFinite, {1.0, 0.0}};
  CHECK(in_neighborhood(fin, {1.2, 0.0}, 0.3));
  CHECK_FALSE(in_neighborhood(fin, {2.0, 0.0}, 0.3));

  const CompactifiedPoint inf{CompactifiedPoint::Kind::kAtInfinity, {1.0, 0.0}};
  CHECK(in_neighborhood(inf, {100.0, 1.0}, 0.2));
  CHECK_FALSE(in_neighborhood(inf, {4.0, 0.0}, 0.2));     // too close to the origin
  CHECK_FALSE(in_neighborhood(inf, {0.0, 100.0}, 0.2));   // wrong direction
}

TEST_CASE("counterexample_discs") {
  const Family f = counterexample_discs(12);
  CHECK(f.size() == 12);
  CHECK(f.open());
  CHECK(f[0].core().center == Vec{1.0, 1.0});
  CHECK(f[0].core().radius == 1.0);

  const KFlat x_axis = canonicalize_flat({0.0, 0.0}, {{1.0, 0.0}});
  int pierced_open = 0, pierced_closed = 0;
  const Family closed = counterexample_discs(12, /*closed=*/true);
  for (size_t i = 0; i < f.size(); ++i) {
    if (pierces(x_axis, f[i])) ++pierced_open;
    if (pierces(x_axis, closed[i])) ++pierced_closed;
  }
  CHECK(pierced_open == 0);    // the x-axis meets no open disc
  CHECK(pierced_closed == 12); // but is tangent to every closed one

  // the horizontal line y = 1/n pierces all n open discs
  const KFlat low = canonicalize_flat({0.0, 1.0 / 12.0}, {{1.0, 0.0}});
  for (const NearBall& b : f.members()) CHECK(pierces(low, b));
}

TEST_CASE("non-horizontal lines pierce only an analytic index window") {
  const int prefix = 10000;
  const Family f = counterexample_discs(prefix);
  Rng rng(9);
  int tested = 0;
  for (int t = 0; t < 10000; ++t) {
    const double b = rng.uniform(-2.0, 2.0);
    if (std::abs(b) < 1e-3) continue;
    const double a = rng.uniform(-10.0, 10.0);
    // pierced => |b i + a| <= (2 + |b|) / i, so indices beyond the positive
    // root of |b| i^2 - |a| i - (2 + |b|) cannot be pierced
    const double i_max =
        (std::abs(a) + std::sqrt(a * a + 4.0 * std::abs(b) * (2.0 + std::abs(b)))) /
        (2.0 * std::abs(b));
    const double inv_norm = 1.0 / std::sqrt(1.0 + b * b);
    for (int i = static_cast<int>(i_max) + 1; i <= prefix; i += std::max(1, prefix / 97)) {
      const double y = 1.0 / static_cast<double>(i);
      const double d = std::abs(b * i + a - y) * inv_norm;
      CHECK(d >= y);  // not pierced
    }
    ++tested;
  }
  CHECK(tested > 9900);
}

TEST_CASE("inner_tangent_wedge") {
  SUBCASE("unit discs at distance 4: apex (2,0), slopes +-1/sqrt(3)") {
    const Wedge w = inner_tangent_wedge({{0.0, 0.0}, 1.0}, {{4.0, 0.0}, 1.0});
    CHECK(w.apex[0] == doctest::Approx(2.0));
    CHECK(w.apex[1] == doctest::Approx(0.0));
    CHECK_FALSE(w.degenerate);
    const Vec dir = w.line1.basis.front();
    CHECK(std::abs(dir[1] / dir[0]) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-9));
    // tangency oracle: both lines touch both circles
    for (const KFlat* line : {&w.line1, &w.line2}) {
      CHECK(dist_point_flat({0.0, 0.0}, *line) == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(dist_point_flat({4.0, 0.0}, *line) == doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(wedge_contains_point(w, {5.0, 0.0}));
    CHECK_FALSE(wedge_contains_point(w, {2.0, 3.0}));
    CHECK(wedge_contains_ball(w, {{6.0, 0.0}, 1.0}));
    CHECK_FALSE(wedge_contains_ball(w, {{2.5, 0.0}, 1.0}));
  }
  SUBCASE("equal discs put the apex at the midpoint") {
    const Wedge w = inner_tangent_wedge({{-1.0, 2.0}, 0.5}, {{3.0, 2.0}, 0.5});
    CHECK(w.apex[0] == doctest::Approx(1.0));
    CHECK(w.apex[1] == doctest::Approx(2.0));
  }
  SUBCASE("touching discs are degenerate, overlapping ones rejected") {
    CHECK(inner_tangent_wedge({{0.0, 0.0}, 1.0}, {{2.0, 0.0}, 1.0}).degenerate);
    CHECK_THROWS_AS(inner_tangent_wedge({{0.0, 0.0}, 1.0}, {{1.0, 0.0}, 1.0}), NoInnerTangents);
  }
}

TEST_CASE("verify_33_property on a small prefix") {
  SolveOptions opts;
  const Prop33Report rep = verify_33_property(6, opts);
  CHECK(rep.triples == 20);
  CHECK(rep.all_pass);
  CHECK(rep.min_margin > 1e-6);
}

TEST_CASE("segments_family") {
  const SegmentsReport rep = verify_segments_family(10);
  CHECK(rep.pairwise_intersect);
  CHECK(rep.no_triple_point);

  const Family f = segments_family(10);
  CHECK(f.size() == 10);
  // chains are a stand-in for zero-width segments: the constant is huge
  CHECK(f.constant() > 1000.0);

  // chains inherit the crossings: member pairs genuinely intersect
  for (size_t i = 0; i < f.size(); ++i)
    for (size_t j = i + 1; j < f.size(); ++j)
      CHECK(member_pair_gap(f[i], f[j]) <= kTolGeo);

  // piercing number grows: no point covers three chains, so any piercing set
  // needs at least n/2 points
  const std::vector<std::array<Vec, 2>> chords = segments_family_chords(10);
  (void)chords;
}

TEST_CASE("sharpness_family2") {
  const Family f = sharpness_family2(12);
  const std::vector<MemberConstant> rows = nearball_constant_table(f);

  SUBCASE("member 3 stats follow the formula") {
    const NearBallStats s = nearball_stats(f[2]);
    CHECK(s.r_in == doctest::Approx(2.0));
    CHECK(s.r_esc == doctest::Approx(8.0 + 1.0).epsilon(0.2));  // 2^3 + O(1)
  }

  SUBCASE("condition 1 bounded, condition 2 grows") {
    double max_ratio = 0.0;
    for (const MemberConstant& row : rows) max_ratio = std::max(max_ratio, row.ratio);
    CHECK(max_ratio < 8.0);
    for (size_t i = 3; i < rows.size(); ++i) CHECK(rows[i].diff > rows[i - 1].diff);
    CHECK(rows.back().diff > 1000.0);
  }
}

TEST_CASE("disjoint_sequence_builder") {
  SUBCASE("shrinking balls toward the origin yield 5 disjoint picks") {
    std::vector<NearBall> members;
    for (int m = 1; m <= 20; ++m)
      members.push_back(ball({std::pow(2.0, -m), 0.0}, std::pow(8.0, -m)));
    const Family f(std::move(members));
    const Vec origin{0.0, 0.0};
    const DisjointSeqResult res =
        disjoint_sequence_builder(f, family_sampler(f), origin, f.constant(), 5);
    CHECK(res.reached);
    CHECK(res.picked.size() == 5);
    for (size_t a = 0; a < res.picked.size(); ++a)
      for (size_t b = a + 1; b < res.picked.size(); ++b)
        CHECK(member_pair_gap(f[static_cast<size_t>(res.picked[a])],
                              f[static_cast<size_t>(res.picked[b])]) > 0.0);
    for (size_t i = 1; i < res.dists.size(); ++i) CHECK(res.dists[i] < res.dists[i - 1]);
  }

  SUBCASE("a type-(b) point exhausts the sampler immediately") {
    std::vector<NearBall> members;
    for (int m = 1; m <= 8; ++m) members.push_back(ball({0.0, 0.0}, 1.0 / m));
    const Family f(std::move(members));  // every member contains the origin
    const DisjointSeqResult res =
        disjoint_sequence_builder(f, family_sampler(f), {0.0, 0.0}, f.constant(), 3);
    CHECK_FALSE(res.reached);
    CHECK(res.picked.empty());
  }

  SUBCASE("pure balls separate by the eps/10 margin") {
    std::vector<NearBall> members;
    for (int m = 1; m <= 24; ++m)
      members.push_back(ball({std::pow(3.0, -m), 0.0}, 0.05 * std::pow(3.0, -m)));
    const Family f(std::move(members));
    CHECK(f.constant() == 1.0);
    const DisjointSeqResult res =
        disjoint_sequence_builder(f, family_sampler(f), {0.0, 0.0}, 1.0, 4);
    CHECK(res.reached);
  }
}
