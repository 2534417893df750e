#pragma once

// Data-parallel inner loops over structure-of-arrays point sets.
//
// Every kernel has a scalar reference implementation; vector variants
// (AVX2 on x86-64, NEON on AArch64) must agree with it and are selected once
// at runtime from the CPU features. KLEINLAB_SIMD=scalar|avx2|neon in the
// environment overrides the choice when the requested ISA is available.

#include <cstddef>
#include <limits>

namespace kleinlab::simd {

enum class Isa { scalar, avx2, neon };

const char* to_string(Isa isa) noexcept;
bool isa_available(Isa isa) noexcept;
Isa active_isa() noexcept;
/// Selects an ISA for subsequent calls; returns false if it is unavailable.
bool force_isa(Isa isa) noexcept;

/// `dim` coordinate columns, each holding `count` values.
struct Columns {
  const double* const* cols = nullptr;
  std::size_t dim = 0;
  std::size_t count = 0;
};

struct Nearest {
  std::size_t index = 0;
  double sq_dist = std::numeric_limits<double>::infinity();
};

struct DomeHit {
  std::size_t index = 0;
  /// 1 − (radius at which the ray through q enters the lowest dome); −1 if
  /// no dome is hit.
  double gap = -1.0;
};

/// Minimum squared Euclidean distance from q; ties resolve to the lowest index.
Nearest nearest(const Columns& pts, const double* q) noexcept;
/// True if some point lies within squared distance sq_radius of q.
bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept;
/// Relative tolerance (in units of vers·sec) below zero at which a point still
/// counts as inside a cap; absorbs the rounding of points on the boundary.
inline constexpr double kBoundarySlack = -8.0 * 2.220446049250313e-16;

/// Caps with unit centers `pts`, vers[i] = 1 − cos(angle_i) and
/// sec[i] = 1/cos(angle_i). With e = (vers − |q − c|²/2)·sec, a cap holds q
/// when e ≥ 0 (up to kBoundarySlack) and its dome is entered at radius 1 − g, g = sqrt(e(e+2)) − e.
/// Returns the largest g (the lowest dome); ties resolve to the lowest index.
/// Working from chords keeps g accurate for caps far below 1e-8 rad.
DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept;

namespace scalar {
Nearest nearest(const Columns& pts, const double* q) noexcept;
bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept;
DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept;
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define KLEINLAB_HAVE_AVX2_KERNELS 1
namespace avx2 {
Nearest nearest(const Columns& pts, const double* q) noexcept;
bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept;
DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept;
}  // namespace avx2
#endif

#if defined(__aarch64__)
#define KLEINLAB_HAVE_NEON_KERNELS 1
namespace neon {
Nearest nearest(const Columns& pts, const double* q) noexcept;
bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept;
DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept;
}  // namespace neon
#endif

}  // namespace kleinlab::simd
