#pragma once

// Seeded random streams. Every stochastic routine takes an explicit seed;
// substreams are derived with SplitMix64 so that (seed, stream) pairs are
// reproducible regardless of how work is partitioned.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "kleinlab/geom.hpp"

namespace kleinlab {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Engine for substream `stream` of `seed`.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform point of S^n ⊂ R^{n+1}.
SpherePoint random_sphere_point(std::mt19937_64& rng, std::size_t n);
/// Uniform point of the ball of the given ambient dimension and radius.
Vec random_ball_vec(std::mt19937_64& rng, std::size_t ambient_dim, double radius = 1.0);
/// Standard normal vector.
Vec random_normal(std::mt19937_64& rng, std::size_t dim);
/// Haar-random orthogonal matrix (QR of a Gaussian matrix, sign-corrected).
Mat random_orthogonal(std::mt19937_64& rng, std::size_t dim);

/// Quasi-uniform points of S^n: a Fibonacci lattice for n = 2, seeded random
/// points otherwise.
std::vector<SpherePoint> quasi_uniform_sphere(std::size_t n, std::size_t count, std::uint64_t seed);
/// Streams the same points without materialising them.
void for_each_quasi_uniform(std::size_t n, std::size_t count, std::uint64_t seed,
                            const std::function<void(const SpherePoint&)>& fn);

}  // namespace kleinlab
