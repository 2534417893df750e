#pragma once

#include <random>

#include "kleinlab/mobius.hpp"
#include "kleinlab/random.hpp"

namespace testsupport {

inline kleinlab::MobiusMap random_mobius(std::mt19937_64& rng, std::size_t n) {
  using namespace kleinlab;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd;
  const bool eps = u(rng) < 0.7;
  return MobiusMap(eps, random_normal(rng, n), std::exp(0.7 * nd(rng)), random_orthogonal(rng, n),
                   random_normal(rng, n));
}

inline kleinlab::Vec random_point(std::mt19937_64& rng, std::size_t n) {
  return kleinlab::random_normal(rng, n) * 1.5;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testsupport
