#include "kleinlab/random.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/QR>

namespace kleinlab {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  std::seed_seq seq{splitmix64(s), splitmix64(s), splitmix64(s), splitmix64(s)};
  return std::mt19937_64(seq);
}

Vec random_normal(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> nd;
  Vec v(static_cast<Eigen::Index>(dim));
  for (auto& x : v) x = nd(rng);
  return v;
}

SpherePoint random_sphere_point(std::mt19937_64& rng, std::size_t n) {
  for (;;) {
    Vec v = random_normal(rng, n + 1);
    if (v.norm() > 1e-8) return SpherePoint::normalized(v);
  }
}

Vec random_ball_vec(std::mt19937_64& rng, std::size_t ambient_dim, double radius) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Vec dir = random_sphere_point(rng, ambient_dim - 1).vec();
  return dir * (radius * std::pow(u(rng), 1.0 / static_cast<double>(ambient_dim)));
}

Mat random_orthogonal(std::mt19937_64& rng, std::size_t dim) {
  const auto k = static_cast<Eigen::Index>(dim);
  Mat g(k, k);
  std::normal_distribution<double> nd;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < k; ++j) g(i, j) = nd(rng);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR();
  for (Eigen::Index j = 0; j < k; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

void for_each_quasi_uniform(std::size_t n, std::size_t count, std::uint64_t seed,
                            const std::function<void(const SpherePoint&)>& fn) {
  if (n == 2) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    Vec v(3);
    for (std::size_t i = 0; i < count; ++i) {
      const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double phi = golden * static_cast<double>(i);
      v << rho * std::cos(phi), rho * std::sin(phi), z;
      fn(SpherePoint::normalized(v));
    }
    return;
  }
  auto rng = make_rng(seed, 0x51);
  for (std::size_t i = 0; i < count; ++i) fn(random_sphere_point(rng, n));
}

std::vector<SpherePoint> quasi_uniform_sphere(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<SpherePoint> out;
  out.reserve(count);
  for_each_quasi_uniform(n, count, seed, [&](const SpherePoint& p) { out.push_back(p); });
  return out;
}

}  // namespace kleinlab
