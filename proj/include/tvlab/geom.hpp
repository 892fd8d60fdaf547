#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tvlab {

using Vec = std::vector<double>;

// Global tolerances. kTolGeo gates incidence/piercing decisions, kTolOrth
// gates orthonormality of flat bases, kRankThresh is the relative pivot
// cutoff when ranking spanning sets.
inline constexpr double kTolGeo = 1e-9;
inline constexpr double kTolOrth = 1e-10;
inline constexpr double kRankThresh = 1e-8;

struct GeomError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DimensionMismatch : GeomError {
  using GeomError::GeomError;
};
struct InvalidFlat : GeomError {
  using GeomError::GeomError;
};
struct DirectionUndefined : GeomError {
  using GeomError::GeomError;
};
struct DegenerateInput : GeomError {
  using GeomError::GeomError;
};
struct NoInnerTangents : GeomError {
  using GeomError::GeomError;
};
struct PreconditionViolated : GeomError {
  using GeomError::GeomError;
};
struct InvalidOptions : GeomError {
  using GeomError::GeomError;
};
struct SchemaError : GeomError {
  using GeomError::GeomError;
};

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(norm2(a)); }

inline double dist2(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double dist(const Vec& a, const Vec& b) { return std::sqrt(dist2(a, b)); }

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] += b[i];
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a);
  for (size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  return r;
}

inline Vec scaled(const Vec& a, double s) {
  Vec r(a);
  for (double& x : r) x *= s;
  return r;
}

// y += alpha * x
inline void axpy(Vec& y, double alpha, const Vec& x) {
  for (size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

inline Vec zeros(int d) { return Vec(static_cast<size_t>(d), 0.0); }

inline Vec unit_axis(int d, int i) {
  Vec r = zeros(d);
  r[static_cast<size_t>(i)] = 1.0;
  return r;
}

inline Vec normalized(const Vec& a) {
  const double n = norm(a);
  if (n == 0.0) throw DegenerateInput("cannot normalize the zero vector");
  return scaled(a, 1.0 / n);
}

struct ClosedBall {
  Vec center;
  double radius = 0.0;
};

// Canonical affine k-flat: `anchor` is the point of the flat closest to the
// origin (so anchor is orthogonal to every basis vector) and `basis` is an
// orthonormal set spanning the flat's direction. An empty basis is a point.
struct KFlat {
  Vec anchor;
  std::vector<Vec> basis;

  int ambient_dim() const { return static_cast<int>(anchor.size()); }
  int flat_dim() const { return static_cast<int>(basis.size()); }
};

// Cone with apex at the origin: { x != 0 : <axis,x> >= ||x|| cos(aperture) }.
struct Cone {
  Vec axis;
  double aperture = 0.0;
};

// Builds the canonical form of the flat through `anchor` spanned by
// `spanning`. The spanning set may be linearly dependent; its rank decides
// the flat dimension. Throws InvalidFlat if the rank exceeds d-1.
KFlat canonicalize_flat(const Vec& anchor, const std::vector<Vec>& spanning);

// Affine span of a point set, canonicalized.
KFlat flat_through_points(const std::vector<Vec>& pts);

// Checks the KFlat invariants (orthonormal basis, anchor orthogonal to the
// basis) within kTolOrth; throws InvalidFlat on failure.
void validate_flat(const KFlat& f);

double dist_point_flat(const Vec& p, const KFlat& f);
Vec project_to_flat(const Vec& p, const KFlat& f);

// max(0, dist(center, flat) - radius)
double dist_ball_flat(const ClosedBall& b, const KFlat& f);

// Angle between u and the direction span of f, in [0, pi/2]. Zero means u is
// a direction of the flat. Throws DirectionUndefined for k = 0.
double flat_axis_angle(const KFlat& f, const Vec& u);

bool cone_contains(const Cone& c, const Vec& x);
double cone_angle(const Cone& c, const Vec& x);  // angle between axis and x

// Flats are equal iff anchors coincide and the direction spans project onto
// each other; bases themselves are not compared (they are not unique).
bool flats_equal(const KFlat& a, const KFlat& b, double tol = kTolGeo);

// Deterministic total order used for tie-breaking between equal-value flats:
// lexicographic on the canonical anchor, then on the basis matrix.
int flat_compare(const KFlat& a, const KFlat& b);

}  // namespace tvlab
