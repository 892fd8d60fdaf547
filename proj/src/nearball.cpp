#include "tvlab/nearball.hpp"

#include <algorithm>
#include <limits>

namespace tvlab {

void validate_nearball(const NearBall& b) {
  if (b.parts.empty()) throw SchemaError("near-ball has no parts");
  if (b.core_index < 0 || b.core_index >= static_cast<int>(b.parts.size()))
    throw SchemaError("core index out of range");
  const size_t d = b.parts.front().center.size();
  for (const ClosedBall& p : b.parts) {
    if (p.center.size() != d) throw DimensionMismatch("near-ball parts disagree on dimension");
    if (p.radius < 0.0) throw SchemaError("negative part radius");
    if (b.open_flag && p.radius <= 0.0)
      throw SchemaError("an open part of radius 0 is empty");
  }
  if (b.core().radius <= 0.0) throw SchemaError("core radius must be positive");
}

NearBallStats nearball_stats(const NearBall& b) {
  validate_nearball(b);
  NearBallStats s;
  s.center = b.core().center;
  s.r_in = b.core().radius;
  s.r_esc = 0.0;
  for (const ClosedBall& p : b.parts)
    s.r_esc = std::max(s.r_esc, dist(p.center, s.center) + p.radius);
  return s;
}

Family::Family(std::vector<NearBall> members) : members_(std::move(members)) {
  for (const NearBall& b : members_) validate_nearball(b);
  if (!members_.empty()) {
    const int d = members_.front().parts.front().center.size();
    for (const NearBall& b : members_)
      if (static_cast<int>(b.parts.front().center.size()) != d)
        throw DimensionMismatch("family members disagree on ambient dimension");
  }
}

int Family::dim() const {
  if (members_.empty()) throw SchemaError("empty family has no dimension");
  return static_cast<int>(members_.front().parts.front().center.size());
}

void Family::add(NearBall b) {
  validate_nearball(b);
  if (!members_.empty() &&
      b.parts.front().center.size() != members_.front().parts.front().center.size())
    throw DimensionMismatch("member dimension differs from family");
  members_.push_back(std::move(b));
  cached_k_ = -1.0;
}

double Family::constant() const {
  if (cached_k_ < 0.0) cached_k_ = nearball_constant(*this);
  return cached_k_;
}

bool Family::open() const {
  for (const NearBall& b : members_)
    if (!b.open_flag) return false;
  return !members_.empty();
}

Family Family::subfamily(const std::vector<int>& idx) const {
  std::vector<NearBall> sel;
  sel.reserve(idx.size());
  for (int i : idx) sel.push_back(members_.at(static_cast<size_t>(i)));
  return Family(std::move(sel));
}

std::vector<MemberConstant> nearball_constant_table(const Family& f) {
  std::vector<MemberConstant> rows;
  rows.reserve(f.size());
  for (const NearBall& b : f.members()) {
    const NearBallStats s = nearball_stats(b);
    rows.push_back({s.r_in, s.r_esc, s.r_esc / s.r_in, s.r_esc - s.r_in});
  }
  return rows;
}

double nearball_constant(const Family& f) {
  if (f.empty()) throw SchemaError("near-ball constant of an empty family");
  double k = 0.0;
  for (const MemberConstant& row : nearball_constant_table(f))
    k = std::max(k, std::max(row.ratio, row.diff));
  return k;
}

double member_flat_signed(const NearBall& b, const KFlat& flat) {
  double best = std::numeric_limits<double>::infinity();
  for (const ClosedBall& p : b.parts)
    best = std::min(best, dist_point_flat(p.center, flat) - p.radius);
  return best;
}

double member_flat_dist(const NearBall& b, const KFlat& flat) {
  return std::max(0.0, member_flat_signed(b, flat));
}

bool pierces(const KFlat& flat, const NearBall& b) {
  const double s = member_flat_signed(b, flat);
  return b.open_flag ? s < -kTolGeo : s <= kTolGeo;
}

double member_pair_gap(const NearBall& a, const NearBall& b) {
  double gap = std::numeric_limits<double>::infinity();
  for (const ClosedBall& p : a.parts)
    for (const ClosedBall& q : b.parts)
      gap = std::min(gap, dist(p.center, q.center) - p.radius - q.radius);
  return gap;
}

bool member_contains_point(const NearBall& b, const Vec& x) {
  for (const ClosedBall& p : b.parts) {
    const double d = dist(p.center, x);
    if (b.open_flag ? d < p.radius - kTolGeo : d <= p.radius + kTolGeo) return true;
  }
  return false;
}

double member_point_dist(const NearBall& b, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  for (const ClosedBall& p : b.parts)
    best = std::min(best, std::max(0.0, dist(p.center, x) - p.radius));
  return best;
}

std::vector<WeakConditionRow> check_weak_condition_r(const Family& f,
                                                     const std::vector<double>& r_grid) {
  const std::vector<MemberConstant> rows = nearball_constant_table(f);
  std::vector<WeakConditionRow> out;
  out.reserve(r_grid.size());
  for (double r : r_grid) {
    WeakConditionRow row{r, 0.0, 0};
    for (const MemberConstant& m : rows)
      if (m.r_in <= r) {
        row.sup_r_esc = std::max(row.sup_r_esc, m.r_esc);
        ++row.count;
      }
    out.push_back(row);
  }
  return out;
}

}  // namespace tvlab
