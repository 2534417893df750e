#include <atomic>
#include <cstdlib>
#include <cstring>

#include "kleinlab/simd/kernels.hpp"

namespace kleinlab::simd {

namespace {

struct Table {
  Isa isa;
  Nearest (*nearest)(const Columns&, const double*) noexcept;
  bool (*any_within)(const Columns&, const double*, double) noexcept;
  DomeHit (*max_dome_gap)(const Columns&, const double*, const double*, const double*) noexcept;
};

constexpr Table kScalar{Isa::scalar, &scalar::nearest, &scalar::any_within, &scalar::max_dome_gap};
#if defined(KLEINLAB_HAVE_AVX2_KERNELS)
constexpr Table kAvx2{Isa::avx2, &avx2::nearest, &avx2::any_within, &avx2::max_dome_gap};
#endif
#if defined(KLEINLAB_HAVE_NEON_KERNELS)
constexpr Table kNeon{Isa::neon, &neon::nearest, &neon::any_within, &neon::max_dome_gap};
#endif

const Table* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return &kScalar;
    case Isa::avx2:
#if defined(KLEINLAB_HAVE_AVX2_KERNELS)
      if (__builtin_cpu_supports("avx2")) return &kAvx2;
#endif
      return nullptr;
    case Isa::neon:
#if defined(KLEINLAB_HAVE_NEON_KERNELS)
      return &kNeon;  // Advanced SIMD is mandatory on AArch64
#endif
      return nullptr;
  }
  return nullptr;
}

const Table* initial_table() noexcept {
  if (const char* env = std::getenv("KLEINLAB_SIMD")) {
    for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
      if (std::strcmp(env, to_string(isa)) == 0) {
        if (const Table* t = table_for(isa)) return t;
      }
    }
  }
  for (Isa isa : {Isa::avx2, Isa::neon}) {
    if (const Table* t = table_for(isa)) return t;
  }
  return &kScalar;
}

std::atomic<const Table*>& active() noexcept {
  static std::atomic<const Table*> table{initial_table()};
  return table;
}

}  // namespace

const char* to_string(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar:
      return "scalar";
    case Isa::avx2:
      return "avx2";
    case Isa::neon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept { return table_for(isa) != nullptr; }

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed)->isa; }

bool force_isa(Isa isa) noexcept {
  const Table* t = table_for(isa);
  if (t == nullptr) return false;
  active().store(t, std::memory_order_relaxed);
  return true;
}

Nearest nearest(const Columns& pts, const double* q) noexcept {
  return active().load(std::memory_order_relaxed)->nearest(pts, q);
}

bool any_within(const Columns& pts, const double* q, double sq_radius) noexcept {
  return active().load(std::memory_order_relaxed)->any_within(pts, q, sq_radius);
}

DomeHit max_dome_gap(const Columns& pts, const double* vers, const double* sec, const double* q) noexcept {
  return active().load(std::memory_order_relaxed)->max_dome_gap(pts, vers, sec, q);
}

}  // namespace kleinlab::simd
