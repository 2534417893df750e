#pragma once

// Standard conformal cusp ends (R^m ∖ B_R) × K with the metric
// g_h = (|dx|² + |dy|²)/|x|², and conformal factors on Ω extended
// equivariantly from a fundamental domain.

#include <cstdint>
#include <functional>
#include <string>

#include "kleinlab/group.hpp"
#include "kleinlab/limitset.hpp"

namespace kleinlab {

/// Points are (x, y) ∈ R^m × R^{n−m}; K = R^{n−m}/lattice.
struct CuspEnd {
  std::size_t n = 3;
  std::size_t m = 1;
  double radius = 1.0;
  double volume_k = 1.0;
  /// Columns span the translation lattice of Γ_∞ in R^{n−m}. Empty means the
  /// cube lattice of covolume volume_k.
  Mat lattice;

  /// Throws domain unless 1 ≤ m ≤ n − 1, R > 0, vol(K) > 0 and the lattice
  /// (when given) is (n−m)-square with |det| = vol(K).
  void validate() const;
  /// Lattice basis actually used (the cube when `lattice` is empty).
  Mat basis() const;
};

struct GhFactor {
  double flat = 0.0;     // e^u against |dp|²: 1/|x|
  double round = 0.0;    // e^u against the round metric of S^n: (1 + |p|²)/(2|x|)
  double chordal = 0.0;  // q(p, ∞)·round
};
/// Throws pole at x = 0, dimension_mismatch unless p has n coordinates.
GhFactor gh_factor(const CuspEnd& end, const Vec& p);

/// vol(K)/((n − m)·R^{n−m}), the radial integral ∫_R^∞ t^{m−n−1} dt times vol(K).
double cusp_volume(const CuspEnd& end);
/// ∫ |x|^{−n} over (R^m ∖ B_R) × cell, which carries the extra factor |S^{m−1}|.
double cusp_volume_full(const CuspEnd& end);

struct CuspVolumeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};
/// Monte-Carlo of ∫ |x|^{−n} dx dy over (R^m ∖ B_R) × cell: uniform
/// directions, Pareto radii of index (n−m)/2, uniform y in the lattice cell.
CuspVolumeEstimate cusp_volume_monte_carlo(const CuspEnd& end, std::size_t samples, std::uint64_t seed);

/// Scalar curvature of e^{2u}|dp|², u = −ln|x|, from central differences of
/// u with step 1e-4·|x| (convention: the round S^n has n(n−1)). m = n is
/// allowed here. Throws pole when the stencil reaches x = 0.
double scalar_curvature_numeric(std::size_t n, std::size_t m, const Vec& p);
double scalar_curvature_numeric(const CuspEnd& end, const Vec& p);
/// The constant as printed in the source: (n−2)/4·(2m−n−2).
double stated_curvature_constant(std::size_t n, std::size_t m);

/// Where the fundamental-domain walk ended.
struct Located {
  SpherePoint point;  // δx in the closed fundamental domain
  Word word;          // letters applied to x, first letter first
  double derivative = 1.0;  // |δ'(x)|_s as a product along the walk
};
/// Schottky only: apply the inverse of the letter whose cap holds the point
/// until no open defining cap does. Throws locator_failed after max_len steps.
Located locate_fundamental(const GroupPresentation& g, const SpherePoint& x, std::size_t max_len = 200);

/// e^{u₀} on the fundamental domain.
using ConformalFactor = std::function<double(const SpherePoint&)>;
/// The round metric: e^{u₀} ≡ 1.
ConformalFactor round_factor();

/// e^{u(x)} = e^{u₀(δx)}·|δ'(x)|_s with δ from locate_fundamental.
double equivariant_extend(const ConformalFactor& u0, const GroupPresentation& g, const SpherePoint& x,
                          std::size_t max_len = 200);

struct ConformalBand {
  double min = 0.0, max = 0.0;  // of e^{u(x)}·dist(x, L)
  double k = 0.0;               // max(max, 1/min)
  std::size_t used = 0;
  std::size_t skipped = 0;  // inside the resolution band
};
/// Uniform samples; dist is the nearest-sample chordal distance.
ConformalBand conformal_band(const ConformalFactor& u0, const GroupPresentation& g, const LimitSetCloud& L,
                             std::size_t samples, std::uint64_t seed, std::size_t max_len = 200);

}  // namespace kleinlab
