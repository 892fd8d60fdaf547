#include "tvlab/geom.hpp"

#include <algorithm>

#include <Eigen/Dense>

namespace tvlab {

namespace {

void check_same_dim(size_t a, size_t b, const char* what) {
  if (a != b) throw DimensionMismatch(std::string("dimension mismatch in ") + what);
}

// Orient a basis vector so its largest-magnitude component is positive;
// spans are unchanged and documents stay stable across runs.
void normalize_sign(Vec& v) {
  size_t arg = 0;
  for (size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0.0)
    for (double& x : v) x = -x;
}

}  // namespace

KFlat canonicalize_flat(const Vec& anchor, const std::vector<Vec>& spanning) {
  const int d = static_cast<int>(anchor.size());
  if (d < 1) throw InvalidFlat("ambient dimension must be >= 1");
  for (const Vec& v : spanning) check_same_dim(v.size(), anchor.size(), "canonicalize_flat");

  if (spanning.empty()) return KFlat{anchor, {}};

  Eigen::MatrixXd m(d, static_cast<int>(spanning.size()));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < d; ++i) m(i, j) = spanning[static_cast<size_t>(j)][static_cast<size_t>(i)];

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
  qr.setThreshold(kRankThresh);
  const int rank = static_cast<int>(qr.rank());
  if (rank > d - 1) throw InvalidFlat("spanning set has rank > d-1");
  if (rank == 0) return KFlat{anchor, {}};

  const Eigen::MatrixXd q =
      qr.householderQ() * Eigen::MatrixXd::Identity(d, rank);

  KFlat f;
  f.basis.resize(static_cast<size_t>(rank));
  for (int j = 0; j < rank; ++j) {
    Vec v(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) v[static_cast<size_t>(i)] = q(i, j);
    normalize_sign(v);
    f.basis[static_cast<size_t>(j)] = std::move(v);
  }

  // Foot of the perpendicular from the origin: remove the in-flat component.
  Vec c = anchor;
  for (const Vec& v : f.basis) axpy(c, -dot(anchor, v), v);
  for (double& x : c)
    if (x == 0.0) x = 0.0;  // normalize -0.0 for byte-stable serialization
  f.anchor = std::move(c);
  return f;
}

KFlat flat_through_points(const std::vector<Vec>& pts) {
  if (pts.empty()) throw InvalidFlat("flat_through_points needs at least one point");
  std::vector<Vec> spanning;
  spanning.reserve(pts.size() - 1);
  for (size_t i = 1; i < pts.size(); ++i) spanning.push_back(sub(pts[i], pts[0]));
  return canonicalize_flat(pts[0], spanning);
}

void validate_flat(const KFlat& f) {
  const size_t d = f.anchor.size();
  if (d == 0) throw InvalidFlat("empty anchor");
  if (f.basis.size() > d - 1) throw InvalidFlat("flat dimension exceeds d-1");
  for (size_t i = 0; i < f.basis.size(); ++i) {
    if (f.basis[i].size() != d) throw InvalidFlat("basis dimension mismatch");
    if (std::abs(norm(f.basis[i]) - 1.0) > kTolOrth) throw InvalidFlat("basis vector not unit");
    for (size_t j = i + 1; j < f.basis.size(); ++j)
      if (std::abs(dot(f.basis[i], f.basis[j])) > kTolOrth)
        throw InvalidFlat("basis vectors not orthogonal");
    if (std::abs(dot(f.anchor, f.basis[i])) > kTolOrth * (1.0 + norm(f.anchor)))
      throw InvalidFlat("anchor not orthogonal to basis (non-canonical flat)");
  }
}

double dist_point_flat(const Vec& p, const KFlat& f) {
  check_same_dim(p.size(), f.anchor.size(), "dist_point_flat");
  Vec r = sub(p, f.anchor);
  for (const Vec& v : f.basis) axpy(r, -dot(r, v), v);
  return norm(r);
}

Vec project_to_flat(const Vec& p, const KFlat& f) {
  check_same_dim(p.size(), f.anchor.size(), "project_to_flat");
  Vec rel = sub(p, f.anchor);
  Vec q = f.anchor;
  for (const Vec& v : f.basis) axpy(q, dot(rel, v), v);
  return q;
}

double dist_ball_flat(const ClosedBall& b, const KFlat& f) {
  return std::max(0.0, dist_point_flat(b.center, f) - b.radius);
}

double flat_axis_angle(const KFlat& f, const Vec& u) {
  if (f.flat_dim() == 0) throw DirectionUndefined("a 0-flat has no direction");
  check_same_dim(u.size(), f.anchor.size(), "flat_axis_angle");
  const double nu = norm(u);
  if (nu == 0.0) throw DegenerateInput("zero direction vector");

  Vec par = zeros(f.ambient_dim());
  for (const Vec& v : f.basis) axpy(par, dot(u, v), v);
  const Vec perp = sub(u, par);
  // atan2 keeps full precision near both 0 and pi/2.
  return std::atan2(norm(perp), norm(par));
}

bool cone_contains(const Cone& c, const Vec& x) {
  check_same_dim(x.size(), c.axis.size(), "cone_contains");
  const double nx = norm(x);
  if (nx == 0.0) throw DegenerateInput("the cone excludes the origin");
  // Boundary-inclusive with a relative guard so exact-aperture points pass.
  return dot(c.axis, x) >= nx * std::cos(c.aperture) - 1e-12 * (1.0 + nx);
}

double cone_angle(const Cone& c, const Vec& x) {
  const double nx = norm(x);
  if (nx == 0.0) throw DegenerateInput("angle at the apex is undefined");
  const Vec axis = normalized(c.axis);
  Vec perp = x;
  axpy(perp, -dot(x, axis), axis);
  return std::atan2(norm(perp), dot(x, axis));
}

bool flats_equal(const KFlat& a, const KFlat& b, double tol) {
  if (a.ambient_dim() != b.ambient_dim() || a.flat_dim() != b.flat_dim()) return false;
  if (dist(a.anchor, b.anchor) > tol * (1.0 + norm(a.anchor))) return false;
  // Spans agree iff each basis vector of one has a full-length projection
  // onto the other's span.
  for (const Vec& v : a.basis) {
    Vec proj = zeros(a.ambient_dim());
    for (const Vec& w : b.basis) axpy(proj, dot(v, w), w);
    if (std::abs(norm(proj) - 1.0) > tol) return false;
  }
  return true;
}

int flat_compare(const KFlat& a, const KFlat& b) {
  const auto cmp_vec = [](const Vec& x, const Vec& y) -> int {
    if (x.size() != y.size()) return x.size() < y.size() ? -1 : 1;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i] < y[i] - 1e-12) return -1;
      if (x[i] > y[i] + 1e-12) return 1;
    }
    return 0;
  };
  if (int c = cmp_vec(a.anchor, b.anchor)) return c;
  if (a.basis.size() != b.basis.size()) return a.basis.size() < b.basis.size() ? -1 : 1;
  for (size_t i = 0; i < a.basis.size(); ++i)
    if (int c = cmp_vec(a.basis[i], b.basis[i])) return c;
  return 0;
}

}  // namespace tvlab
