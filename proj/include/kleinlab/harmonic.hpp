#pragma once

// Hyperbolic harmonic functions on B^{n+1}: Poisson extension of boundary
// indicators, the ball Green's function and its sum over a group, and the
// flux identities at the origin.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kleinlab/group.hpp"
#include "kleinlab/limitset.hpp"

namespace kleinlab {

enum class Membership { outside, inside, indeterminate };

class BoundaryIndicator {
 public:
  enum class Kind { full_sphere, hemisphere, cloud_complement, cap_union };

  static BoundaryIndicator full_sphere(std::size_t n);
  /// {y : ⟨y, axis⟩ > 0}.
  static BoundaryIndicator hemisphere(const SpherePoint& axis);
  /// Ω as the complement of the cloud: points within the certified
  /// resolution of a sample are indeterminate. Throws uncertified for an
  /// uncertified cloud. The cloud must outlive the indicator.
  static BoundaryIndicator cloud_complement(const LimitSetCloud& L);
  /// Union of closed caps.
  static BoundaryIndicator cap_union(std::vector<SphericalCap> caps);

  Kind kind() const noexcept { return kind_; }
  std::size_t sphere_dim() const noexcept { return n_; }
  const std::string& description() const noexcept { return description_; }
  Membership operator()(const SpherePoint& y) const { return test_(y); }

 private:
  BoundaryIndicator(Kind k, std::size_t n, std::function<Membership(const SpherePoint&)> t, std::string d)
      : kind_(k), n_(n), test_(std::move(t)), description_(std::move(d)) {}

  Kind kind_;
  std::size_t n_;
  std::function<Membership(const SpherePoint&)> test_;
  std::string description_;
};

/// k(x, y) = (1 − |x|²)/|x − y|². The extension uses k(x, y)^n.
double poisson_kernel(const BallPoint& x, const SpherePoint& y);

/// Ball isometry z ↦ x ⊕ z sending 0 to x, evaluated on the boundary. The
/// image of the uniform measure is the harmonic measure seen from x.
SpherePoint push_from_origin(const BallPoint& x, const SpherePoint& z);

struct MeanEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
};
/// (1/vol Sⁿ)∫ k(x, y)ⁿ dω(y) by uniform Monte-Carlo.
MeanEstimate poisson_normalization(const BallPoint& x, std::size_t samples, std::uint64_t seed);

struct HarmonicEstimate {
  double value = 0.0;  // fraction of samples certified inside
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t indeterminate = 0;
  double indeterminate_fraction() const noexcept {
    return samples ? static_cast<double>(indeterminate) / static_cast<double>(samples) : 0.0;
  }
};
/// u(x) = (1/vol Sⁿ)∫ k(x, y)ⁿ χ(y) dω(y), sampling y = x ⊕ z with z uniform.
HarmonicEstimate harmonic_extension(const BoundaryIndicator& chi, const BallPoint& x, std::size_t samples,
                                    std::uint64_t seed);

/// g(x, y) = ∫_{|T_x y|}^1 (1 − t²)^{n−1}/tⁿ dt on B^{n+1}. Closed forms for
/// n ≤ 3, Gauss–Kronrod otherwise. Throws pole at x = y.
double green_ball(const BallPoint& x, const BallPoint& y);
/// The same as a function of s = |T_x y| ∈ (0, 1], with w = 1 − s² passed
/// separately for accuracy near s = 1.
double green_radial(std::size_t n, double s, double w);
/// |T_x y| = tanh(ρ(x, y)/2) and 1 − |T_x y|².
struct PseudoDistance {
  double s = 0.0;
  double w = 0.0;
};
PseudoDistance pseudo_distance(const BallPoint& x, const BallPoint& y);

struct GreenSum {
  double value = 0.0;
  /// Partial sums over elements of word length ≤ k, k = 0…max_len.
  std::vector<double> partial;
  std::size_t terms = 0;
};
/// Σ g(x, γ̂y) over the enumerated elements. Throws pole when γ̂y = x.
GreenSum green_quotient(const BallPoint& x, const BallPoint& y, const GroupPresentation& g, std::size_t max_len);

struct FluxReport {
  std::size_t n = 0;
  double r = 0.0;
  /// −∂g/∂n dσ per unit-sphere dω and per dω on ∂B_r, means over probes.
  double density_unit = 0.0;
  double density_radius = 0.0;
  double stated = 0.0;  // 2^{n−1}/rⁿ
  double ratio_unit = 0.0;
  double ratio_radius = 0.0;
  double direction_variance = 0.0;  // of density_unit over probes
};
/// Hyperbolic normal derivative of g(0, ·) on ∂B_r by central differences
/// along random probe directions, times the hyperbolic area element.
FluxReport flux_density_check(std::size_t n, double r, std::size_t probes, std::uint64_t seed);

struct FluxConvention {
  std::vector<FluxReport> reports;
  bool unit_constant = false;
  bool radius_constant = false;
  /// "unit-sphere", "radius-r sphere", "both" or "neither".
  std::string matching;
  /// The identity's constant depends on the normalization of g.
  std::string caveat;
};
/// A reading is constant when its ratio varies by less than 1e-6 relative.
FluxConvention select_flux_convention(std::size_t n, const std::vector<double>& radii, std::size_t probes,
                                      std::uint64_t seed);

struct HarmonicIdentity {
  HarmonicEstimate harmonic;  // u_Γ(0)
  HarmonicEstimate area;      // vol(Ω)/vol(Sⁿ) on a quasi-uniform point set
  double difference = 0.0;
  double tolerance = 0.0;  // 3σ combined plus both indeterminate fractions
  bool agree = false;
};
/// Throws insufficient_data when more than 10% of either sample is indeterminate.
HarmonicIdentity harmonic_measure_identity(const LimitSetCloud& L, std::size_t samples, std::uint64_t seed);

}  // namespace kleinlab
