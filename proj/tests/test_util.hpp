#pragma once

#include <vector>

#include "tvlab/nearball.hpp"
#include "tvlab/runtime.hpp"

namespace tvlab::test {

inline NearBall ball(Vec center, double radius, bool open = false) {
  NearBall b;
  b.parts.push_back({std::move(center), radius});
  b.core_index = 0;
  b.open_flag = open;
  return b;
}

inline Family ball_family(std::vector<std::pair<Vec, double>> balls, bool open = false) {
  std::vector<NearBall> members;
  members.reserve(balls.size());
  for (auto& [c, r] : balls) members.push_back(ball(std::move(c), r, open));
  return Family(std::move(members));
}

// random orthogonal matrix (columns), via Gram-Schmidt on gaussian vectors
inline std::vector<Vec> random_rotation(Rng& rng, int d) {
  std::vector<Vec> cols;
  while (static_cast<int>(cols.size()) < d) {
    Vec v = rng.unit_vec(d);
    for (const Vec& q : cols) axpy(v, -dot(v, q), q);
    const double n = norm(v);
    if (n > 1e-6) cols.push_back(scaled(v, 1.0 / n));
  }
  return cols;
}

inline Vec apply_rotation(const std::vector<Vec>& rot, const Vec& x) {
  Vec y = zeros(static_cast<int>(x.size()));
  for (size_t j = 0; j < rot.size(); ++j) axpy(y, x[j], rot[j]);
  return y;
}

inline KFlat rotate_flat(const std::vector<Vec>& rot, const KFlat& f) {
  KFlat g;
  g.anchor = apply_rotation(rot, f.anchor);
  for (const Vec& v : f.basis) g.basis.push_back(apply_rotation(rot, v));
  return g;
}

inline Family rotate_family(const std::vector<Vec>& rot, const Family& f, const Vec& shift) {
  std::vector<NearBall> members;
  for (const NearBall& b : f.members()) {
    NearBall nb = b;
    for (ClosedBall& p : nb.parts) p.center = add(apply_rotation(rot, p.center), shift);
    members.push_back(std::move(nb));
  }
  return Family(std::move(members));
}

}  // namespace tvlab::test
