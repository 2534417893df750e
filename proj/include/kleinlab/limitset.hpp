#pragma once

// Finite samples of the limit set with a certified resolution where one is
// available, distance queries, box counting and the Sullivan formula.

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "kleinlab/group.hpp"
#include "kleinlab/spatial.hpp"

namespace kleinlab {

class LimitSetCloud {
 public:
  /// `resolution`, when given, certifies that every limit point lies within
  /// that chordal distance of a sample. 0 means the cloud is the limit set.
  static LimitSetCloud from_points(std::vector<SpherePoint> points, std::optional<double> resolution,
                                   std::size_t depth = 0);

  std::size_t sphere_dim() const noexcept { return n_; }
  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const std::vector<SpherePoint>& points() const noexcept { return points_; }
  std::size_t depth() const noexcept { return depth_; }
  bool certified() const noexcept { return resolution_.has_value(); }
  /// Certified resolution; throws uncertified when absent.
  double resolution() const;
  const std::optional<double>& resolution_opt() const noexcept { return resolution_; }
  /// Set for elementary groups with fewer than three limit points.
  bool few_limit_points() const noexcept { return few_points_; }
  /// Maximum chord between samples.
  double diameter() const;

  KdTree::Hit nearest(const SpherePoint& p) const;

 private:
  std::size_t n_ = 0;
  std::vector<SpherePoint> points_;
  std::size_t depth_ = 0;
  std::optional<double> resolution_;
  bool few_points_ = false;
  double diameter_ = 0.0;
  KdTree index_;

  friend LimitSetCloud sample_limit_set(const GroupPresentation&, std::size_t, const std::vector<ExtPoint>&);
};

/// Schottky groups: for every word w = l₁…l_k of length exactly `depth`, the
/// limit point l₁…l_{k−1}(p⁺(l_k)) with p⁺ the attracting fixed point; it lies
/// in the nested cap of w, and the resolution is the largest nested-cap
/// chordal diameter. Cyclic groups: the fixed points of the generator
/// (exact). Custom groups: images of the seeds under words of length
/// exactly `depth`, uncertified.
LimitSetCloud sample_limit_set(const GroupPresentation& g, std::size_t depth,
                               const std::vector<ExtPoint>& seeds = {});

/// Nested caps of all words of length exactly depth (Schottky only).
std::vector<SphericalCap> nested_caps(const GroupPresentation& g, std::size_t depth);

struct DistanceBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool certified = false;
};
DistanceBounds dist_to_limit_set(const SpherePoint& x, const LimitSetCloud& L);
DistanceBounds dist_to_limit_set(const ExtPoint& x, const LimitSetCloud& L);

struct BoxDimension {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  double window_lo = 0.0, window_hi = 0.0;
  bool certified = false;
};

/// Size of a greedy ε-net in input order (a point joins the net unless it is
/// within ε of a net point).
std::size_t greedy_net_size(const std::vector<SpherePoint>& pts, double eps);

/// Slope of log N(ε) against log(1/ε) over the scale window. With an empty
/// `scales` the window is [max(4·res, 2·median NN gap), diam/4] on 24
/// log-spaced scales (an exact cloud uses [1e-6·diam/4, diam/4]). Explicit
/// scales must lie in [4·res, diam/4] unless the cloud is uncertified.
BoxDimension box_dimension(const LimitSetCloud& L, const std::vector<double>& scales = {});

/// Bottom of the spectrum from the exponent: (n/2)² for δ ≤ n/2, else δ(n − δ).
double sullivan_lambda0(double delta, std::size_t n);

/// |γ′(x)|_s · dist(x, L) / dist(γx, L) with nearest-sample distances.
/// Throws uncertified when x or γx lies within the resolution band.
double distortion_ratio(const SpherePoint& x, const MobiusMap& g, const LimitSetCloud& L);

/// Unit-vector rows with a header (x0,…,xn).
void write_cloud_csv(std::ostream& os, const LimitSetCloud& L);

}  // namespace kleinlab
