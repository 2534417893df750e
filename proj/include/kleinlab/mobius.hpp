#pragma once

// Möbius transformations of R^n ∪ {∞} in the normal form
//
//     γ(x) = b + r·A·ι^ε(x − a),   ι(x) = x / |x|²,
//
// with ε ∈ {0,1}, r > 0 and A orthogonal. For ε = 0 the pre-center a is kept
// at zero so that every map has exactly one representation.

#include <optional>
#include <vector>

#include "kleinlab/geom.hpp"

namespace kleinlab {

class MobiusMap {
 public:
  static constexpr double kIdentityTolerance = 1e-10;
  static constexpr double kOrthogonalityTolerance = 1e-10;

  /// Validates r > 0 and AᵀA = I. For ε = 0 a nonzero a is folded into b.
  MobiusMap(bool inversion, Vec a, double r, Mat rotation, Vec b);

  static MobiusMap identity(std::size_t n);
  static MobiusMap inversion_unit(std::size_t n);
  static MobiusMap translation(const Vec& h);
  static MobiusMap dilation(std::size_t n, double factor);
  static MobiusMap rotation(const Mat& q);
  /// Inversion in the sphere of center m and radius s.
  static MobiusMap sphere_inversion(const Vec& m, double s);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(b_.size()); }
  bool inversion() const noexcept { return inversion_; }
  const Vec& pole() const noexcept { return a_; }
  double scale() const noexcept { return r_; }
  const Mat& rotation() const noexcept { return A_; }
  const Vec& offset() const noexcept { return b_; }

  ExtPoint apply(const ExtPoint& x) const;
  /// Finite-coordinate fast path; returns nullopt at the pole.
  std::optional<Vec> apply_finite(const Vec& x) const;

  bool is_identity(double tol = kIdentityTolerance) const;

 private:
  bool inversion_;
  Vec a_;
  double r_;
  Mat A_;
  Vec b_;
};

MobiusMap compose(const MobiusMap& outer, const MobiusMap& inner);
MobiusMap inverse(const MobiusMap& g);

/// |γ'(x)|_e: r/|x − a|² for ε = 1, r for ε = 0. Throws at the pole and at ∞.
double deriv_euclid(const MobiusMap& g, const ExtPoint& x);
/// Derivative norm in the chordal (spherical) metric; total on R^n ∪ {∞}.
double deriv_sphere(const MobiusMap& g, const ExtPoint& x);

/// Same map acting on the sphere picture: p ↦ unproject(γ(project(p))).
SpherePoint apply_sphere(const MobiusMap& g, const SpherePoint& p);
double deriv_sphere(const MobiusMap& g, const SpherePoint& p);

/// Extends a map of R^n to R^{n+1}: a, b gain a zero last coordinate and A
/// gains a trailing 1. The result preserves the upper half-space.
MobiusMap lift(const MobiusMap& g);
/// Inverse of lift for maps of R^{n+1} that preserve R^n × {0}.
MobiusMap restrict_to_boundary(const MobiusMap& g);

/// Cayley map of R^{n+1} (as a Möbius map) carrying the upper half-space
/// onto the unit ball; restricts to stereo_unproject on R^n.
MobiusMap cayley(std::size_t ambient_dim);
MobiusMap cayley_inverse(std::size_t ambient_dim);

/// The Möbius map of R^n ∪ {∞} induced by an orthogonal map of the sphere.
MobiusMap from_sphere_orthogonal(const Mat& q);

/// Euclidean sphere in R^m.
struct Sphere {
  Vec center;
  double radius = 0.0;
};

/// Image of a sphere and whether its inside is carried to the inside of the
/// image. Throws pole if the sphere passes through the pole of the map.
struct SphereImage {
  Sphere sphere;
  bool inside_preserved = true;
};
SphereImage map_sphere(const MobiusMap& g, const Sphere& s);

/// Poincaré extension: the half-space lift and its conjugate acting on the ball.
class ExtendedMap {
 public:
  explicit ExtendedMap(const MobiusMap& g);

  const MobiusMap& boundary_map() const noexcept { return base_; }
  const MobiusMap& halfspace_map() const noexcept { return halfspace_; }
  /// Normal form of the ball action (composition computed once).
  const MobiusMap& ball_map() const noexcept { return ball_; }

  BallPoint apply(const BallPoint& p) const;
  /// Ball action evaluated pointwise through the Cayley conjugation.
  BallPoint apply_conjugated(const BallPoint& p) const;

 private:
  MobiusMap base_;
  MobiusMap halfspace_;
  MobiusMap ball_;
};

ExtendedMap poincare_extend(const MobiusMap& g);

/// Image of a cap under a Möbius map of R^n. Throws shrink_epsilon0 (the
/// image is not smaller than a hemisphere) or pole when it is not a cap.
SphericalCap map_cap(const ExtendedMap& g, const SphericalCap& cap);

/// The sphere in R^{n+1} orthogonal to S^n along the boundary of the cap.
Sphere dome_sphere(const SphericalCap& cap);

enum class MobiusClass { identity, elliptic, parabolic, loxodromic };
const char* to_string(MobiusClass c) noexcept;

struct Classification {
  MobiusClass kind = MobiusClass::identity;
  /// Infimum of the hyperbolic displacement (0 unless loxodromic).
  double translation_length = 0.0;
  /// Fixed points on the sphere (loxodromic: repelling then attracting;
  /// parabolic: the single fixed point; elliptic/identity: empty).
  std::vector<SpherePoint> fixed_points;
};

/// Throws ambiguous when the displacement infimum is within 1e-7 of zero
/// without a clear fixed-point structure.
Classification classify(const MobiusMap& g);

}  // namespace kleinlab
