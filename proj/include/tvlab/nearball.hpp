#pragma once

#include <vector>

#include "tvlab/geom.hpp"

namespace tvlab {

// A compact set represented as a finite union of balls with a designated
// inscribed core. open_flag switches every part to its open interior; an
// open part of radius zero would be empty and is therefore rejected.
struct NearBall {
  std::vector<ClosedBall> parts;
  int core_index = 0;
  bool open_flag = false;

  const ClosedBall& core() const { return parts[static_cast<size_t>(core_index)]; }
};

struct NearBallStats {
  Vec center;    // x_B, the core center
  double r_in;   // core radius
  double r_esc;  // radius of the smallest ball centered at x_B containing every part
};

void validate_nearball(const NearBall& b);
NearBallStats nearball_stats(const NearBall& b);

class Family {
 public:
  Family() = default;
  explicit Family(std::vector<NearBall> members);

  const std::vector<NearBall>& members() const { return members_; }
  const NearBall& operator[](size_t i) const { return members_[i]; }
  size_t size() const { return members_.size(); }
  bool empty() const { return members_.empty(); }
  int dim() const;
  void add(NearBall b);

  // Near-ball constant: the least K with r_esc <= K * r_in and
  // r_esc <= K + r_in for every member. Cached until the next mutation.
  double constant() const;

  bool open() const;  // true iff every member carries open_flag
  Family subfamily(const std::vector<int>& idx) const;

 private:
  std::vector<NearBall> members_;
  mutable double cached_k_ = -1.0;
};

struct MemberConstant {
  double r_in;
  double r_esc;
  double ratio;  // r_esc / r_in
  double diff;   // r_esc - r_in
};

std::vector<MemberConstant> nearball_constant_table(const Family& f);
double nearball_constant(const Family& f);

// min over parts of (dist(center, flat) - radius); negative means the flat
// passes through a part interior.
double member_flat_signed(const NearBall& b, const KFlat& flat);

// min over parts of max(0, dist(center, flat) - radius)
double member_flat_dist(const NearBall& b, const KFlat& flat);

// Closed members: some part within kTolGeo of the flat. Open members: the
// flat must enter a part interior with margin kTolGeo.
bool pierces(const KFlat& flat, const NearBall& b);

// Exact separation of two ball unions: min over part pairs of
// (dist(centers) - r - r'). Positive iff the closed unions are disjoint.
double member_pair_gap(const NearBall& a, const NearBall& b);

bool member_contains_point(const NearBall& b, const Vec& x);

// min over parts of max(0, dist(x, center) - radius)
double member_point_dist(const NearBall& b, const Vec& x);

struct WeakConditionRow {
  double r;
  double sup_r_esc;  // sup over members with r_in <= r (0 over the empty set)
  int count;
};

// Empirical probe of the weakened first condition:
// sup { r_esc(B) : B in F, r_in(B) <= r } for each grid value r.
std::vector<WeakConditionRow> check_weak_condition_r(const Family& f,
                                                     const std::vector<double>& r_grid);

}  // namespace tvlab
