#pragma once

// The invariant Lipschitz graph over the domain of discontinuity: caps of
// radius ε₀·dist(x, L) around seed points, their images under the group,
// the domes over them and the envelope height f with G = {f(x)x}.

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kleinlab/group.hpp"
#include "kleinlab/limitset.hpp"
#include "kleinlab/spatial.hpp"

namespace kleinlab {

/// A region of S^n given by a membership test.
struct SphereRegion {
  std::function<bool(const SpherePoint&)> contains;
  std::string description;
};

/// Schottky: the complement of the open defining caps. Cyclic loxodromic:
/// the shell 1 ≤ |δx| < λ after conjugating the fixed points to 0 and ∞.
/// Cyclic parabolic: the slab 0 ≤ ⟨δx, τ⟩ < |τ|² with the fixed point at ∞
/// (unbounded, it reaches the limit set). Throws domain otherwise.
SphereRegion fundamental_region(const GroupPresentation& g);
/// Points of the closed cap.
SphereRegion cap_region(const SphericalCap& cap);
/// Points in `a` but not in `b`.
SphereRegion region_difference(SphereRegion a, SphereRegion b);

/// Cap of chordal radius ε₀·(certified lower distance to the cloud) about x.
/// Throws uncertified inside the resolution band, domain for ε₀ ∉ (0, ½].
SphericalCap base_cap(const SpherePoint& x, double epsilon0, const LimitSetCloud& L);
std::vector<SphericalCap> base_caps(const std::vector<SpherePoint>& samples, double epsilon0,
                                    const LimitSetCloud& L);

struct SeedOptions {
  double epsilon0 = 0.1;
  /// Local mesh spacing as a multiple of the local cap angle.
  double spacing = 1.0;
  /// Coarsest mesh size; levels quadruple (n = 2) from here.
  std::size_t base_count = 256;
  /// Upper bound on the candidates drawn at the finest level.
  std::size_t max_level_count = std::size_t{1} << 22;
  std::uint64_t seed = 1;
};

struct SeedMesh {
  std::vector<SpherePoint> points;
  std::size_t levels = 0;
  /// Points accepted at the finest level whose local spacing asked for more.
  std::size_t under_resolved = 0;
};

/// Quasi-uniform seeds in the region with density adapted to dist(x, L):
/// a point of the level-k mesh (spacing h_k) is kept when k is the coarsest
/// level with h_k ≤ spacing·θ(x), θ the angle of its base cap.
SeedMesh seed_mesh(const SphereRegion& region, const LimitSetCloud& L, const SeedOptions& opt);

/// Entry radius t of the ray through x into the dome over `cap`, or nullopt
/// when the ray misses it (x outside the cap).
std::optional<double> dome_entry_radius(const SphericalCap& cap, const SpherePoint& x);
/// 1 − t computed from chords, accurate for tiny caps.
std::optional<double> dome_entry_gap(const SphericalCap& cap, const SpherePoint& x);

struct CapOrigin {
  std::size_t element = 0;  // index into DomeFamily::words()
  std::size_t seed = 0;     // index of the seed cap
};

/// Shape ratio diam(D)/dist(D, L) over the family.
struct ShapeReport {
  double min_ratio = 0.0;  // empirical C₀
  double max_ratio = 0.0;
  std::size_t verified = 0;
  /// Caps too close to the cloud for its resolution to decide the ratio.
  std::size_t unverified = 0;
};

class DomeFamily {
 public:
  /// Images smaller than this are dropped: their centers are not
  /// representable to the accuracy the dome test needs.
  static constexpr double kMinCapAngle = 1e-12;

  /// Seeds only, no group (provenance: identity word).
  static DomeFamily from_caps(std::vector<SphericalCap> caps, double epsilon0 = 0.0);

  const std::vector<SphericalCap>& caps() const noexcept { return caps_; }
  const std::vector<CapOrigin>& origins() const noexcept { return origins_; }
  const std::vector<Word>& words() const noexcept { return words_; }
  std::size_t seed_count() const noexcept { return seed_count_; }
  std::size_t max_len() const noexcept { return max_len_; }
  double epsilon0() const noexcept { return epsilon0_; }
  std::size_t dropped() const noexcept { return dropped_; }
  const ShapeReport& shape() const noexcept { return shape_; }
  std::size_t sphere_dim() const noexcept { return n_; }
  const CapIndex& index() const noexcept { return index_; }

 private:
  std::size_t n_ = 0;
  std::vector<SphericalCap> caps_;
  std::vector<CapOrigin> origins_;
  std::vector<Word> words_;
  std::size_t seed_count_ = 0;
  std::size_t max_len_ = 0;
  double epsilon0_ = 0.0;
  std::size_t dropped_ = 0;
  ShapeReport shape_;
  CapIndex index_;

  friend DomeFamily propagate(const std::vector<SphericalCap>&, const GroupPresentation&, std::size_t,
                              const LimitSetCloud&, double);
};

/// Images of the seed caps under every element of word length ≤ max_len.
/// Every cap's shape ratio is checked against the cloud; a certified ratio
/// above ½ (or an image that is not a cap) throws shrink_epsilon0.
DomeFamily propagate(const std::vector<SphericalCap>& seeds, const GroupPresentation& g, std::size_t max_len,
                     const LimitSetCloud& L, double epsilon0);

struct Height {
  double f = 0.0;
  double gap = 0.0;  // 1 − f, accurate near the sphere
  std::size_t cap = 0;  // governing cap
};
std::optional<Height> try_height(const DomeFamily& F, const SpherePoint& x);
/// Throws not_covered when no dome lies over x.
Height height(const DomeFamily& F, const SpherePoint& x);

struct InvarianceResult {
  /// max |  |γ̂(F(x))| − f(u) | over samples with x and u = γ̂(F(x))/|γ̂(F(x))| covered.
  double max_deviation = 0.0;
  /// The same over samples whose governing caps at x and at u have their
  /// γ- and γ⁻¹-images inside the truncation.
  double matched_max_deviation = 0.0;
  std::size_t compared = 0;
  std::size_t matched = 0;
  std::size_t skipped = 0;
  bool within_tolerance = true;  // matched_max_deviation ≤ tol
};
InvarianceResult check_invariance(const DomeFamily& F, const GroupPresentation& g, const Word& gamma,
                                  const std::vector<SpherePoint>& samples, double tol);

struct LipschitzEstimate {
  double constant = 0.0;
  std::size_t used = 0;  // covered samples
};
/// Maximum of |f(x) − f(y)|/q(x, y) over pairs of covered samples.
LipschitzEstimate lipschitz_estimate(const DomeFamily& F, const std::vector<SpherePoint>& samples);

struct BandEstimate {
  double c1 = 0.0, c2 = 0.0;  // (1−f)/dist from below (lower distance) and above (upper)
  std::size_t used = 0;
  std::size_t skipped = 0;  // uncovered or inside the resolution band
  double ratio() const noexcept { return c2 / c1; }
};
BandEstimate distance_band(const DomeFamily& F, const LimitSetCloud& L, const std::vector<SpherePoint>& samples);

struct SeparationWitness {
  BallPoint point;
  double graph_radius = 0.0;
};
struct SeparationResult {
  bool passed = true;
  std::size_t geodesics = 0;
  std::size_t checked_points = 0;
  std::vector<SeparationWitness> witnesses;
};
/// Points of hyperbolic geodesics between random pairs of cloud points must
/// satisfy |p| ≤ f(p/|p|) + tol wherever the direction is covered.
SeparationResult separation_check(const DomeFamily& F, const LimitSetCloud& L, std::size_t trials, double tol,
                                  std::uint64_t seed);

/// Point of the geodesic from ideal point a to b ≠ a at signed hyperbolic
/// arclength s from its point nearest the origin. Throws domain when the
/// point rounds onto the sphere.
BallPoint geodesic_point(const SpherePoint& a, const SpherePoint& b, double s);

struct VolumeEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t in_region = 0;
};
/// Hyperbolic n-volume of the graph over the region: Monte-Carlo over
/// uniform sphere samples of f^n·sqrt(1 + |∇f|²/f²)·(2/(1 − f²))^n, ∇f by
/// central differences with step 1e-4 × the governing cap angle.
VolumeEstimate graph_volume(const DomeFamily& F, const LimitSetCloud& L, const SphereRegion& region,
                            std::size_t samples, std::uint64_t seed);

/// The integrand above at one point (no region test).
double graph_area_density(const DomeFamily& F, const SpherePoint& x);

struct VolumeTrend {
  std::vector<std::size_t> depths;
  std::vector<VolumeEstimate> estimates;
  /// |V_k − V_{k−1}| / V_{k−1} between consecutive depths.
  std::vector<double> relative_changes;
};
/// graph_volume of the propagated family at each depth with common samples.
VolumeTrend volume_trend(const std::vector<SphericalCap>& seeds, const GroupPresentation& g,
                         const LimitSetCloud& L, const SphereRegion& region, const std::vector<std::size_t>& depths,
                         std::size_t samples, std::uint64_t seed);

/// Rows x0,…,xn,f for the covered samples.
void write_graph_csv(std::ostream& os, const DomeFamily& F, const std::vector<SpherePoint>& samples);

}  // namespace kleinlab
