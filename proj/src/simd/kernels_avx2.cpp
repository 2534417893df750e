// AVX2 variants. Functions carry a target attribute instead of building the
// translation unit with -mavx2, so nothing here leaks AVX code into inline
// functions shared with the rest of the program.

#include "kleinlab/simd/kernels.hpp"

#if defined(KLEINLAB_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#define KLEINLAB_AVX2 __attribute__((target("avx2")))

namespace kleinlab::simd::avx2 {

namespace {

KLEINLAB_AVX2 inline __m256d sq_dist4(const Columns& pts, const double* q, std::size_t i) {
  __m256d s = _mm256_setzero_pd();
  for (std::size_t k = 0; k < pts.dim; ++k) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(pts.cols[k] + i), _mm256_set1_pd(q[k]));
    s = _mm256_add_pd(s, _mm256_mul_pd(d, d));
  }
  return s;
}

// Lowest value, then lowest index, across the four lanes.
KLEINLAB_AVX2 inline void reduce_min(__m256d val, __m256d idx, double& best, std::size_t& best_index) {
  alignas(32) double v[4];
  alignas(32) double ix[4];
  _mm256_store_pd(v, val);
  _mm256_store_pd(ix, idx);
  for (int l = 0; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(ix[l]);
    if (v[l] < best || (v[l] == best && li < best_index)) {
      best = v[l];
      best_index = li;
    }
  }
}

// Highest value, then lowest index.
KLEINLAB_AVX2 inline void reduce_max(__m256d val, __m256d idx, double& best, std::size_t& best_index) {
  alignas(32) double v[4];
  alignas(32) double ix[4];
  _mm256_store_pd(v, val);
  _mm256_store_pd(ix, idx);
  for (int l = 0; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(ix[l]);
    if (v[l] > best || (v[l] == best && li < best_index)) {
      best = v[l];
      best_index = li;
    }
  }
}

}  // namespace

KLEINLAB_AVX2 Nearest nearest(const Columns& pts, const double* q) noexcept {
  Nearest best;
  const std::size_t vec_end = pts.count & ~std::size_t{3};
  if (vec_end > 0) {
    __m256d best_v = _mm256_set1_pd(best.sq_dist);
    __m256d best_i = _mm256_setzero_pd();
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d step = _mm256_set1_pd(4.0);
    for (std::size_t i = 0; i < vec_end; i += 4) {
      const __m256d s = sq_dist4(pts, q, i);
      const __m256d lt = _mm256_cmp_pd(s, best_v, _CMP_LT_OQ);
      best_v = _mm256_blendv_pd(best_v, s, lt);
      best_i = _mm256_blendv_pd(best_i, idx, lt);
      idx = _mm256_add_pd(idx, step);
    }
    best.index = pts.count;
    reduce_min(best_v, best_i, best.sq_dist, best.index);
    if (best.index == pts.count) best.index = 0;
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

KLEINLAB_AVX2 bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept {
  const std::size_t vec_end = pts.count & ~std::size_t{3};
  const __m256d r = _mm256_set1_pd(sq_radius);
  for (std::size_t i = 0; i < vec_end; i += 4) {
    const __m256d s = sq_dist4(pts, q, i);
    if (_mm256_movemask_pd(_mm256_cmp_pd(s, r, _CMP_LE_OQ)) != 0) return true;
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

KLEINLAB_AVX2 DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec,
                                   const double* q) noexcept {
  DomeHit best;
  const std::size_t vec_end = pts.count & ~std::size_t{3};
  if (vec_end > 0) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d two = _mm256_set1_pd(2.0);
    const __m256d none = _mm256_set1_pd(best.gap);
    __m256d best_v = none;
    __m256d best_i = _mm256_setzero_pd();
    __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d step = _mm256_set1_pd(4.0);
    for (std::size_t i = 0; i < vec_end; i += 4) {
      const __m256d s = sq_dist4(pts, q, i);
      const __m256d e = _mm256_mul_pd(_mm256_sub_pd(_mm256_loadu_pd(vers + i), _mm256_mul_pd(half, s)),
                                      _mm256_loadu_pd(sec + i));
      const __m256d slack = _mm256_mul_pd(_mm256_set1_pd(kBoundarySlack),
                                          _mm256_mul_pd(_mm256_loadu_pd(vers + i), _mm256_loadu_pd(sec + i)));
      const __m256d hit = _mm256_cmp_pd(e, slack, _CMP_GE_OQ);
      const __m256d root = _mm256_sqrt_pd(_mm256_max_pd(_mm256_mul_pd(e, _mm256_add_pd(e, two)), zero));
      const __m256d g = _mm256_blendv_pd(none, _mm256_sub_pd(root, e), hit);
      const __m256d gt = _mm256_cmp_pd(g, best_v, _CMP_GT_OQ);
      best_v = _mm256_blendv_pd(best_v, g, gt);
      best_i = _mm256_blendv_pd(best_i, idx, gt);
      idx = _mm256_add_pd(idx, step);
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

}  // namespace kleinlab::simd::avx2

#endif
