#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "tvlab/nearball.hpp"
#include "tvlab/runtime.hpp"

using namespace tvlab;
using tvlab::test::ball;
using tvlab::test::ball_family;

namespace {

NearBall two_part_example() {
  NearBall b;
  b.parts.push_back({{0.0, 0.0}, 1.0});
  b.parts.push_back({{3.0, 0.0}, 1.0});
  b.core_index = 0;
  return b;
}

// random near-ball: core plus parts inside the escribed radius
NearBall random_member(Rng& rng, int d) {
  NearBall b;
  Vec c(static_cast<size_t>(d));
  for (double& x : c) x = rng.uniform(-10.0, 10.0);
  const double r_in = rng.uniform(0.2, 2.0);
  b.parts.push_back({c, r_in});
  b.core_index = 0;
  const int extra = rng.uniform_int(4);
  for (int e = 0; e < extra; ++e) {
    Vec pc = c;
    axpy(pc, rng.uniform(0.0, 3.0) * r_in, rng.unit_vec(d));
    b.parts.push_back({pc, rng.uniform(0.1, 1.0) * r_in});
  }
  return b;
}

}  // namespace

TEST_CASE("nearball_stats") {
  SUBCASE("a plain ball is its own inscribed and escribed ball") {
    const NearBallStats s = nearball_stats(ball({0.0, 0.0}, 2.0));
    CHECK(s.r_in == doctest::Approx(2.0));
    CHECK(s.r_esc == doctest::Approx(2.0));
  }
  SUBCASE("union with a far part") {
    const NearBallStats s = nearball_stats(two_part_example());
    CHECK(s.center == Vec{0.0, 0.0});
    CHECK(s.r_in == doctest::Approx(1.0));
    CHECK(s.r_esc == doctest::Approx(4.0));
  }
  SUBCASE("r_in <= r_esc always, every part inside the escribed ball") {
    Rng rng(5);
    for (int t = 0; t < 300; ++t) {
      const NearBall b = random_member(rng, 2 + rng.uniform_int(2));
      const NearBallStats s = nearball_stats(b);
      CHECK(s.r_in <= s.r_esc);
      for (const ClosedBall& p : b.parts)
        CHECK(dist(p.center, s.center) + p.radius <= s.r_esc + 1e-12);
    }
  }
}

TEST_CASE("nearball_constant") {
  SUBCASE("plain balls have K exactly 1") {
    Rng rng(6);
    std::vector<std::pair<Vec, double>> balls;
    for (int i = 0; i < 12; ++i)
      balls.push_back({{rng.uniform(-9.0, 9.0), rng.uniform(-9.0, 9.0)}, rng.uniform(0.1, 4.0)});
    CHECK(ball_family(std::move(balls)).constant() == 1.0);
  }
  SUBCASE("two-part example: K = max(4/1, 4-1) = 4") {
    CHECK(Family({two_part_example()}).constant() == doctest::Approx(4.0));
  }
  SUBCASE("swapping the core to a larger part keeps the ratio term >= 1") {
    NearBall b = two_part_example();
    b.parts[1].radius = 2.0;
    b.core_index = 1;  // larger part as core
    const std::vector<MemberConstant> rows = nearball_constant_table(Family({b}));
    CHECK(rows[0].ratio >= 1.0);
  }
}

TEST_CASE("pierces") {
  const KFlat x_axis = canonicalize_flat({0.0, 0.0}, {{1.0, 0.0}});
  SUBCASE("tangency counts for closed discs, not for open ones") {
    CHECK(pierces(x_axis, ball({3.0, 1.0 / 3.0}, 1.0 / 3.0, false)));
    CHECK_FALSE(pierces(x_axis, ball({3.0, 1.0 / 3.0}, 1.0 / 3.0, true)));
  }
  SUBCASE("any flat through the core center pierces") {
    Rng rng(7);
    for (int t = 0; t < 100; ++t) {
      const NearBall b = random_member(rng, 2);
      const KFlat point_flat{b.core().center, {}};
      CHECK(pierces(point_flat, b));
      const KFlat line = canonicalize_flat(b.core().center, {rng.unit_vec(2)});
      CHECK(pierces(line, b));
    }
  }
  SUBCASE("piercing is monotone under inflation") {
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
      NearBall b = random_member(rng, 2);
      b.open_flag = false;
      const KFlat line = canonicalize_flat({rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)},
                                           {rng.unit_vec(2)});
      if (!pierces(line, b)) continue;
      NearBall inflated = b;
      const double delta = rng.uniform(1e-6, 1.0);
      for (ClosedBall& p : inflated.parts) p.radius += delta;
      CHECK(pierces(line, inflated));
    }
  }
}

TEST_CASE("check_weak_condition_r") {
  SUBCASE("empty selection reports 0 by convention") {
    const Family f = ball_family({{{0.0, 0.0}, 1.0}, {{3.0, 0.0}, 1.0}});
    const auto rows = check_weak_condition_r(f, {0.5});
    CHECK(rows[0].count == 0);
    CHECK(rows[0].sup_r_esc == 0.0);
  }
  SUBCASE("balls B(0, 1/n): sup over r_in <= 1/5 is 1/5") {
    std::vector<std::pair<Vec, double>> balls;
    for (int n = 1; n <= 10; ++n) balls.push_back({{0.0, 0.0}, 1.0 / n});
    const auto rows = check_weak_condition_r(ball_family(std::move(balls)), {1.0 / 5.0});
    CHECK(rows[0].sup_r_esc == doctest::Approx(1.0 / 5.0));
    CHECK(rows[0].count == 6);
  }
}

TEST_CASE("member_pair_gap is an exact separation measure") {
  CHECK(member_pair_gap(ball({0.0, 0.0}, 1.0), ball({4.0, 0.0}, 1.0)) == doctest::Approx(2.0));
  CHECK(member_pair_gap(ball({0.0, 0.0}, 1.0), ball({1.0, 0.0}, 1.0)) == doctest::Approx(-1.0));
  const NearBall u = two_part_example();
  CHECK(member_pair_gap(u, ball({6.0, 0.0}, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("document-level validation") {
  NearBall bad;
  bad.parts.push_back({{0.0, 0.0}, 0.0});
  bad.core_index = 0;
  CHECK_THROWS_AS(validate_nearball(bad), SchemaError);

  NearBall open_zero;
  open_zero.parts.push_back({{0.0, 0.0}, 1.0});
  open_zero.parts.push_back({{1.0, 0.0}, 0.0});
  open_zero.core_index = 0;
  open_zero.open_flag = true;  // an open radius-0 part would be empty
  CHECK_THROWS_AS(validate_nearball(open_zero), SchemaError);
}
