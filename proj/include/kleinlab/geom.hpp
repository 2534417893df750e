#pragma once

// Points of R^n ∪ {∞}, the unit sphere S^n ⊂ R^{n+1} and the unit ball
// B^{n+1}, with the chordal and hyperbolic distances connecting them.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace kleinlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A point of R^n ∪ {∞}. ∞ is a distinct value, never a large coordinate.
class ExtPoint {
 public:
  explicit ExtPoint(Vec coords);
  static ExtPoint infinity(std::size_t dim);

  bool is_infinity() const noexcept { return infinite_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Finite coordinates; throws on ∞.
  const Vec& coords() const;

 private:
  ExtPoint(std::size_t dim, bool infinite) : coords_(), dim_(dim), infinite_(infinite) {}

  Vec coords_;
  std::size_t dim_;
  bool infinite_;
};

/// Unit vector in R^{n+1}; the sphere dimension is n = ambient - 1.
class SpherePoint {
 public:
  static constexpr double kNormTolerance = 1e-12;

  /// Throws unless |v| = 1 within kNormTolerance.
  explicit SpherePoint(Vec v);
  /// Rescales a nonzero vector onto the sphere.
  static SpherePoint normalized(const Vec& v);

  const Vec& vec() const noexcept { return v_; }
  std::size_t sphere_dim() const noexcept { return static_cast<std::size_t>(v_.size()) - 1; }
  double operator[](Eigen::Index i) const { return v_[i]; }

 private:
  struct Unchecked {};
  SpherePoint(Vec v, Unchecked) : v_(std::move(v)) {}
  Vec v_;
};

/// Point of the open unit ball B^{n+1}.
class BallPoint {
 public:
  explicit BallPoint(Vec v);
  static BallPoint origin(std::size_t ambient_dim);

  const Vec& vec() const noexcept { return v_; }
  std::size_t ambient_dim() const noexcept { return static_cast<std::size_t>(v_.size()); }

 private:
  Vec v_;
};

/// Closed spherical cap {p : angle(p, center) <= angle} with 0 < angle < π/2.
class SphericalCap {
 public:
  SphericalCap(SpherePoint center, double angle);
  static SphericalCap from_chordal_radius(SpherePoint center, double chordal_radius);

  const SpherePoint& center() const noexcept { return center_; }
  double angle() const noexcept { return angle_; }
  double chordal_radius() const noexcept;
  /// Chordal diameter of the cap (chord between opposite boundary points).
  double chordal_diameter() const noexcept;
  bool contains(const SpherePoint& p, double slack = 0.0) const;

 private:
  SpherePoint center_;
  double angle_;
};

double chordal_distance(const ExtPoint& x, const ExtPoint& y);
/// Euclidean chord between sphere points; equals chordal_distance of their projections.
double chord(const SpherePoint& p, const SpherePoint& q);
/// Great-circle distance.
double angular_distance(const SpherePoint& p, const SpherePoint& q);
double chord_to_angle(double chord_length);
double angle_to_chord(double angle);

/// South pole ↦ 0, north pole e_{n+1} ↦ ∞.
ExtPoint stereo_project(const SpherePoint& p);
SpherePoint stereo_unproject(const ExtPoint& x);

double hyperbolic_distance(const BallPoint& x, const BallPoint& y);
/// Distance in the upper half-space model; the last coordinate is the height.
double halfspace_distance(const Vec& x, const Vec& y);

/// Cayley map from the upper half-space onto the ball. It restricts to
/// stereo_unproject on the boundary and sends e_{n+1} to the origin.
Vec halfspace_to_ball(const Vec& x);
Vec ball_to_halfspace(const Vec& p);

/// Volume of the unit sphere S^n.
double sphere_volume(std::size_t n);

void require_same_dim(std::size_t a, std::size_t b, const char* what);

}  // namespace kleinlab
