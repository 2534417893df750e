// NEON variants (two doubles per register). Built on AArch64 only.

#include "kleinlab/simd/kernels.hpp"

#if defined(KLEINLAB_HAVE_NEON_KERNELS)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace kleinlab::simd::neon {

namespace {

inline float64x2_t sq_dist2(const Columns& pts, const double* q, std::size_t i) {
  float64x2_t s = vdupq_n_f64(0.0);
  for (std::size_t k = 0; k < pts.dim; ++k) {
    const float64x2_t d = vsubq_f64(vld1q_f64(pts.cols[k] + i), vdupq_n_f64(q[k]));
    s = vaddq_f64(s, vmulq_f64(d, d));  // no fused multiply-add: match scalar rounding
  }
  return s;
}

inline void reduce_min(float64x2_t val, float64x2_t idx, double& best, std::size_t& best_index) {
  double v[2];
  double ix[2];
  vst1q_f64(v, val);
  vst1q_f64(ix, idx);
  for (int l = 0; l < 2; ++l) {
    const auto li = static_cast<std::size_t>(ix[l]);
    if (v[l] < best || (v[l] == best && li < best_index)) {
      best = v[l];
      best_index = li;
    }
  }
}

inline void reduce_max(float64x2_t val, float64x2_t idx, double& best, std::size_t& best_index) {
  double v[2];
  double ix[2];
  vst1q_f64(v, val);
  vst1q_f64(ix, idx);
  for (int l = 0; l < 2; ++l) {
    const auto li = static_cast<std::size_t>(ix[l]);
    if (v[l] > best || (v[l] == best && li < best_index)) {
      best = v[l];
      best_index = li;
    }
  }
}

}  // namespace

Nearest nearest(const Columns& pts, const double* q) noexcept {
  Nearest best;
  const std::size_t vec_end = pts.count & ~std::size_t{1};
  if (vec_end > 0) {
    float64x2_t best_v = vdupq_n_f64(best.sq_dist);
    float64x2_t best_i = vdupq_n_f64(0.0);
    const double init[2] = {0.0, 1.0};
    float64x2_t idx = vld1q_f64(init);
    const float64x2_t step = vdupq_n_f64(2.0);
    for (std::size_t i = 0; i < vec_end; i += 2) {
      const float64x2_t s = sq_dist2(pts, q, i);
      const uint64x2_t lt = vcltq_f64(s, best_v);
      best_v = vbslq_f64(lt, s, best_v);
      best_i = vbslq_f64(lt, idx, best_i);
      idx = vaddq_f64(idx, step);
    }
    best.index = pts.count;
    reduce_min(best_v, best_i, best.sq_dist, best.index);
  }
  for (std::size_t i = vec_end; i < pts.count; ++i) {
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
  const std::size_t vec_end = pts.count & ~std::size_t{1};
  const float64x2_t r = vdupq_n_f64(sq_radius);
  for (std::size_t i = 0; i < vec_end; i += 2) {
    const uint64x2_t le = vcleq_f64(sq_dist2(pts, q, i), r);
    if ((vgetq_lane_u64(le, 0) | vgetq_lane_u64(le, 1)) != 0) return true;
  }
  for (std::size_t i = vec_end; i < pts.count; ++i) {
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
  const std::size_t vec_end = pts.count & ~std::size_t{1};
  if (vec_end > 0) {
    const float64x2_t zero = vdupq_n_f64(0.0);
    const float64x2_t half = vdupq_n_f64(0.5);
    const float64x2_t two = vdupq_n_f64(2.0);
    const float64x2_t none = vdupq_n_f64(best.gap);
    float64x2_t best_v = none;
    float64x2_t best_i = vdupq_n_f64(0.0);
    const double init[2] = {0.0, 1.0};
    float64x2_t idx = vld1q_f64(init);
    const float64x2_t step = vdupq_n_f64(2.0);
    for (std::size_t i = 0; i < vec_end; i += 2) {
      const float64x2_t s = sq_dist2(pts, q, i);
      const float64x2_t e = vmulq_f64(vsubq_f64(vld1q_f64(vers + i), vmulq_f64(half, s)), vld1q_f64(sec + i));
      const float64x2_t slack =
          vmulq_f64(vdupq_n_f64(kBoundarySlack), vmulq_f64(vld1q_f64(vers + i), vld1q_f64(sec + i)));
      const uint64x2_t hit = vcgeq_f64(e, slack);
      const float64x2_t root = vsqrtq_f64(vmaxq_f64(vmulq_f64(e, vaddq_f64(e, two)), zero));
      const float64x2_t g = vbslq_f64(hit, vsubq_f64(root, e), none);
      const uint64x2_t gt = vcgtq_f64(g, best_v);
      best_v = vbslq_f64(gt, g, best_v);
      best_i = vbslq_f64(gt, idx, best_i);
      idx = vaddq_f64(idx, step);
    }
    best.index = pts.count;
    reduce_max(best_v, best_i, best.gap, best.index);
    if (best.index == pts.count) best.index = 0;
  }
  for (std::size_t i = vec_end; i < pts.count; ++i) {
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

}  // namespace kleinlab::simd::neon

#endif
