#pragma once

// kd-tree over points of R^d (in practice unit vectors of S^n ⊂ R^{n+1}).
// Leaves hold their points contiguously in structure-of-arrays form so the
// leaf scans run through the dispatched SIMD kernels.

#include <cstddef>
#include <limits>
#include <vector>

#include "kleinlab/geom.hpp"
#include "kleinlab/simd/kernels.hpp"

namespace kleinlab {

class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 32;

  struct Hit {
    std::size_t index = 0;  // index into the construction order
    double distance = std::numeric_limits<double>::infinity();
  };

  KdTree() = default;
  explicit KdTree(const std::vector<Vec>& points);

  std::size_t size() const noexcept { return order_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return order_.empty(); }

  /// Nearest point by Euclidean distance; ties go to the lowest stored slot.
  Hit nearest(const Vec& q) const;
  bool any_within(const Vec& q, double radius) const;
  /// Indices of all points within radius (unordered).
  std::vector<std::size_t> within(const Vec& q, double radius) const;

  /// Point stored at construction index i.
  Vec point(std::size_t i) const;

 protected:
  struct Node {
    std::vector<double> lo, hi;
    std::size_t begin = 0, end = 0;
    int left = -1, right = -1;
    double reach = 0.0;  // max per-point reach in the subtree (cap trees)
  };

  int build(std::size_t begin, std::size_t end);
  double box_sq_dist(const Node& node, const double* q) const;
  simd::Columns leaf_columns(const Node& node) const;

  std::size_t dim_ = 0;
  std::vector<std::vector<double>> cols_;  // reordered coordinates
  std::vector<const double*> col_ptrs_;
  std::vector<std::size_t> order_;         // slot -> construction index
  std::vector<Node> nodes_;
};

/// Spherical caps indexed by center, answering "lowest dome along the ray
/// through x" queries: the minimum over caps containing x of the dome entry
/// radius, reported through its complement 1 − radius.
class CapIndex : private KdTree {
 public:
  struct Entry {
    std::size_t index = 0;
    double gap = -1.0;  // 1 − entry radius; negative when no dome is hit
    bool hit() const noexcept { return gap >= 0.0; }
    double radius() const noexcept { return 1.0 - gap; }
  };

  CapIndex() = default;
  explicit CapIndex(const std::vector<SphericalCap>& caps);

  using KdTree::empty;
  using KdTree::size;

  Entry lowest_dome(const SpherePoint& x) const;

 private:
  std::vector<double> vers_, sec_;  // 1 − cos(angle) and 1/cos(angle), reordered like the points
};

}  // namespace kleinlab
