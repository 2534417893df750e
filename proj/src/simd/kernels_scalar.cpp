#include <algorithm>
#include <cmath>

#include "kleinlab/simd/kernels.hpp"

namespace kleinlab::simd::scalar {

Nearest nearest(const Columns& pts, const double* q) noexcept {
  Nearest best;
  for (std::size_t i = 0; i < pts.count; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < pts.dim; ++k) {
      const double d = pts.cols[k][i] - q[k];
      s += d * d;
    }
    if (s < best.sq_dist) {
      best.sq_dist = s;
      best.index = i;
    }
  }
  return best;
}

bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept {
  for (std::size_t i = 0; i < pts.count; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < pts.dim; ++k) {
      const double d = pts.cols[k][i] - q[k];
      s += d * d;
    }
    if (s <= sq_radius) return true;
  }
  return false;
}

DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept {
  DomeHit best;
  for (std::size_t i = 0; i < pts.count; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < pts.dim; ++k) {
      const double d = pts.cols[k][i] - q[k];
      s += d * d;
    }
    const double e = (vers[i] - 0.5 * s) * sec[i];
    if (e >= kBoundarySlack * (vers[i] * sec[i])) {
      const double g = std::sqrt(std::max(e * (e + 2.0), 0.0)) - e;
      if (g > best.gap) {
        best.gap = g;
        best.index = i;
      }
    }
  }
  return best;
}

}  // namespace kleinlab::simd::scalar
