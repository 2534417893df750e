#include "kleinlab/geom.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "kleinlab/error.hpp"

namespace kleinlab {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::domain: return "domain";
    case ErrorCode::pole: return "pole";
    case ErrorCode::ambiguous: return "ambiguous";
    case ErrorCode::collision: return "collision";
    case ErrorCode::invalid_group: return "invalid_group";
    case ErrorCode::uncertified: return "uncertified";
    case ErrorCode::not_covered: return "not_covered";
    case ErrorCode::shrink_epsilon0: return "shrink_epsilon0";
    case ErrorCode::insufficient_data: return "insufficient_data";
    case ErrorCode::locator_failed: return "locator_failed";
    case ErrorCode::schema: return "schema";
  }
  return "unknown";
}

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::dimension_mismatch, std::string(what) + ": dimension " +
                                                   std::to_string(a) + " vs " + std::to_string(b));
  }
}

ExtPoint::ExtPoint(Vec coords)
    : coords_(std::move(coords)), dim_(static_cast<std::size_t>(coords_.size())), infinite_(false) {
  if (dim_ == 0) throw Error(ErrorCode::domain, "ExtPoint: dimension must be >= 1");
  if (!coords_.allFinite()) throw Error(ErrorCode::domain, "ExtPoint: non-finite coordinate");
}

ExtPoint ExtPoint::infinity(std::size_t dim) {
  if (dim == 0) throw Error(ErrorCode::domain, "ExtPoint: dimension must be >= 1");
  return ExtPoint(dim, true);
}

const Vec& ExtPoint::coords() const {
  if (infinite_) throw Error(ErrorCode::pole, "ExtPoint: coordinates of infinity requested");
  return coords_;
}

SpherePoint::SpherePoint(Vec v) : v_(std::move(v)) {
  if (v_.size() < 2) throw Error(ErrorCode::domain, "SpherePoint: ambient dimension must be >= 2");
  if (!v_.allFinite() || std::abs(v_.norm() - 1.0) > kNormTolerance) {
    throw Error(ErrorCode::domain, "SpherePoint: vector is not a unit vector");
  }
}

SpherePoint SpherePoint::normalized(const Vec& v) {
  const double n = v.norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorCode::domain, "SpherePoint: cannot normalize zero vector");
  }
  if (v.size() < 2) throw Error(ErrorCode::domain, "SpherePoint: ambient dimension must be >= 2");
  return SpherePoint(v / n, Unchecked{});
}

BallPoint::BallPoint(Vec v) : v_(std::move(v)) {
  if (v_.size() < 2) throw Error(ErrorCode::domain, "BallPoint: ambient dimension must be >= 2");
  if (!v_.allFinite() || !(v_.squaredNorm() < 1.0)) {
    throw Error(ErrorCode::domain, "BallPoint: point is not inside the open unit ball");
  }
}

BallPoint BallPoint::origin(std::size_t ambient_dim) {
  return BallPoint(Vec::Zero(static_cast<Eigen::Index>(ambient_dim)));
}

SphericalCap::SphericalCap(SpherePoint center, double angle) : center_(std::move(center)), angle_(angle) {
  if (!(angle > 0.0) || !(angle < std::numbers::pi / 2)) {
    throw Error(ErrorCode::domain, "SphericalCap: angular radius must lie in (0, pi/2)");
  }
}

SphericalCap SphericalCap::from_chordal_radius(SpherePoint center, double chordal_radius) {
  if (!(chordal_radius > 0.0) || !(chordal_radius < std::numbers::sqrt2)) {
    throw Error(ErrorCode::domain, "SphericalCap: chordal radius must lie in (0, sqrt 2)");
  }
  return SphericalCap(std::move(center), chord_to_angle(chordal_radius));
}

double SphericalCap::chordal_radius() const noexcept { return angle_to_chord(angle_); }

double SphericalCap::chordal_diameter() const noexcept { return 2.0 * std::sin(angle_); }

bool SphericalCap::contains(const SpherePoint& p, double slack) const {
  return angular_distance(center_, p) <= angle_ + slack;
}

double chordal_distance(const ExtPoint& x, const ExtPoint& y) {
  require_same_dim(x.dim(), y.dim(), "chordal_distance");
  if (x.is_infinity() && y.is_infinity()) return 0.0;
  if (x.is_infinity() || y.is_infinity()) {
    const Vec& f = x.is_infinity() ? y.coords() : x.coords();
    return 2.0 / std::sqrt(1.0 + f.squaredNorm());
  }
  const Vec& a = x.coords();
  const Vec& b = y.coords();
  return 2.0 * (a - b).norm() / (std::sqrt(1.0 + a.squaredNorm()) * std::sqrt(1.0 + b.squaredNorm()));
}

double chord(const SpherePoint& p, const SpherePoint& q) {
  require_same_dim(p.sphere_dim(), q.sphere_dim(), "chord");
  return (p.vec() - q.vec()).norm();
}

double angular_distance(const SpherePoint& p, const SpherePoint& q) {
  require_same_dim(p.sphere_dim(), q.sphere_dim(), "angular_distance");
  // atan2 form stays accurate for nearly equal and nearly antipodal points.
  const double s = (p.vec() - q.vec()).norm();
  const double c = (p.vec() + q.vec()).norm();
  return 2.0 * std::atan2(s, c);
}

double chord_to_angle(double chord_length) { return 2.0 * std::asin(std::min(1.0, chord_length / 2.0)); }

double angle_to_chord(double angle) { return 2.0 * std::sin(angle / 2.0); }

ExtPoint stereo_project(const SpherePoint& p) {
  const auto n = static_cast<Eigen::Index>(p.sphere_dim());
  const Vec& v = p.vec();
  const double h = v[n];
  const double denom = 1.0 - h;
  if (denom <= 0.0) return ExtPoint::infinity(static_cast<std::size_t>(n));
  const Vec head = v.head(n);
  if (h > 0.0) {
    // 1 - h = |head|^2 / (1 + h) on the sphere; avoids cancellation near the north pole.
    const double hn2 = head.squaredNorm();
    if (hn2 == 0.0) return ExtPoint::infinity(static_cast<std::size_t>(n));
    return ExtPoint(head * ((1.0 + h) / hn2));
  }
  return ExtPoint(head / denom);
}

SpherePoint stereo_unproject(const ExtPoint& x) {
  const auto n = static_cast<Eigen::Index>(x.dim());
  Vec out = Vec::Zero(n + 1);
  if (x.is_infinity()) {
    out[n] = 1.0;
    return SpherePoint(std::move(out));
  }
  const Vec& c = x.coords();
  const double r2 = c.squaredNorm();
  if (r2 > 1.0) {
    // Divide through by |x|^2 to keep huge coordinates finite.
    const double inv = 1.0 / r2;
    out.head(n) = 2.0 * c * inv / (1.0 + inv);
    out[n] = (1.0 - inv) / (1.0 + inv);
  } else {
    out.head(n) = 2.0 * c / (1.0 + r2);
    out[n] = (r2 - 1.0) / (r2 + 1.0);
  }
  return SpherePoint::normalized(out);
}

namespace {
// 1 - |v|^2 without cancellation near the boundary.
double one_minus_sq(const Vec& v) {
  const double r = v.norm();
  return (1.0 - r) * (1.0 + r);
}
}  // namespace

double hyperbolic_distance(const BallPoint& x, const BallPoint& y) {
  require_same_dim(x.ambient_dim(), y.ambient_dim(), "hyperbolic_distance");
  const double d = (x.vec() - y.vec()).norm();
  const double s = d / std::sqrt(one_minus_sq(x.vec()) * one_minus_sq(y.vec()));
  return 2.0 * std::asinh(s);
}

double halfspace_distance(const Vec& x, const Vec& y) {
  const auto last = x.size() - 1;
  const double hx = x[last];
  const double hy = y[last];
  if (!(hx > 0.0) || !(hy > 0.0)) {
    throw Error(ErrorCode::domain, "halfspace_distance: point not in the upper half-space");
  }
  return 2.0 * std::asinh((x - y).norm() / (2.0 * std::sqrt(hx * hy)));
}

Vec halfspace_to_ball(const Vec& x) {
  // Reflect in the boundary hyperplane, then invert in the sphere of radius
  // sqrt 2 about the north pole.
  const auto last = x.size() - 1;
  Vec y = x;
  y[last] = -y[last] - 1.0;  // y - N with the reflection folded in
  const double d2 = y.squaredNorm();
  Vec out = 2.0 * y / d2;
  out[last] += 1.0;
  return out;
}

Vec ball_to_halfspace(const Vec& p) {
  const auto last = p.size() - 1;
  Vec y = p;
  y[last] -= 1.0;
  const double d2 = y.squaredNorm();
  Vec out = 2.0 * y / d2;
  out[last] += 1.0;
  out[last] = -out[last];
  return out;
}

double sphere_volume(std::size_t n) {
  // |S^n| = 2 π^{(n+1)/2} / Γ((n+1)/2)
  const double k = static_cast<double>(n + 1) / 2.0;
  return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

}  // namespace kleinlab
