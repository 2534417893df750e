#include "kleinlab/cusp.hpp"

#include <cmath>
#include <random>

#include "kleinlab/error.hpp"
#include "kleinlab/random.hpp"

namespace kleinlab {

void CuspEnd::validate() const {
  if (m < 1 || m + 1 > n) throw Error(ErrorCode::domain, "cusp end needs 1 <= m <= n-1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw Error(ErrorCode::domain, "cusp radius must be positive");
  if (!(volume_k > 0.0) || !std::isfinite(volume_k)) throw Error(ErrorCode::domain, "vol(K) must be positive");
  if (lattice.size() == 0) return;
  const auto k = static_cast<Eigen::Index>(n - m);
  if (lattice.rows() != k || lattice.cols() != k) {
    throw Error(ErrorCode::domain, "cusp lattice must be (n-m) x (n-m)");
  }
  const double det = std::abs(lattice.determinant());
  if (std::abs(det - volume_k) > 1e-12 * volume_k) {
    throw Error(ErrorCode::domain, "cusp lattice covolume differs from vol(K)");
  }
}

Mat CuspEnd::basis() const {
  if (lattice.size() != 0) return lattice;
  const auto k = static_cast<Eigen::Index>(n - m);
  const double side = std::pow(volume_k, 1.0 / static_cast<double>(k));
  return side * Mat::Identity(k, k);
}

GhFactor gh_factor(const CuspEnd& end, const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != end.n) {
    throw Error(ErrorCode::dimension_mismatch, "cusp point has the wrong dimension");
  }
  const double x = p.head(static_cast<Eigen::Index>(end.m)).norm();
  if (x == 0.0) throw Error(ErrorCode::pole, "g_h is singular at x = 0");
  const double s = p.squaredNorm();
  GhFactor f;
  f.flat = 1.0 / x;
  f.round = (1.0 + s) / (2.0 * x);
  f.chordal = std::sqrt(1.0 + s) / x;
  return f;
}

double cusp_volume(const CuspEnd& end) {
  end.validate();
  const double k = static_cast<double>(end.n - end.m);
  return end.volume_k / (k * std::pow(end.radius, k));
}

double cusp_volume_full(const CuspEnd& end) { return sphere_volume(end.m - 1) * cusp_volume(end); }

CuspVolumeEstimate cusp_volume_monte_carlo(const CuspEnd& end, std::size_t samples, std::uint64_t seed) {
  end.validate();
  if (samples < 2) throw Error(ErrorCode::insufficient_data, "need at least two samples");
  const auto m = static_cast<Eigen::Index>(end.m);
  const auto k = static_cast<Eigen::Index>(end.n - end.m);
  const double a = 0.5 * static_cast<double>(k);
  const double area = sphere_volume(end.m - 1);
  const Mat B = end.basis();
  const double cell = std::abs(B.determinant());
  auto rng = make_rng(seed, 0xc5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  double sum = 0.0, sum2 = 0.0;
  Vec p(static_cast<Eigen::Index>(end.n));
  Vec u(k);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = end.radius * std::pow(1.0 - unit(rng), -1.0 / a);
    if (m == 1) {
      p[0] = unit(rng) < 0.5 ? -t : t;
    } else {
      p.head(m) = t * random_sphere_point(rng, end.m - 1).vec();
    }
    for (Eigen::Index j = 0; j < k; ++j) u[j] = unit(rng);
    p.tail(k) = B * u;
    const double x = p.head(m).norm();
    const double density = a * std::pow(end.radius, a) * std::pow(t, -a - 1.0) /
                           (area * std::pow(t, static_cast<double>(m) - 1.0) * cell);
    const double w = std::pow(x, -static_cast<double>(end.n)) / density;
    sum += w;
    sum2 += w * w;
  }
  const double ns = static_cast<double>(samples);
  CuspVolumeEstimate e;
  e.value = sum / ns;
  e.stderr_ = std::sqrt(std::max(sum2 / ns - e.value * e.value, 0.0) / (ns - 1.0));
  e.samples = samples;
  return e;
}

double scalar_curvature_numeric(std::size_t n, std::size_t m, const Vec& p) {
  if (static_cast<std::size_t>(p.size()) != n || m < 1 || m > n) {
    throw Error(ErrorCode::dimension_mismatch, "cusp point has the wrong dimension");
  }
  const auto mi = static_cast<Eigen::Index>(m);
  const double x = p.head(mi).norm();
  if (x == 0.0) throw Error(ErrorCode::pole, "g_h is singular at x = 0");
  const double h = 1e-4 * x;
  auto u = [&](const Vec& q) {
    const double r = q.head(mi).norm();
    if (r == 0.0) throw Error(ErrorCode::pole, "stencil reaches x = 0");
    return -std::log(r);
  };
  const double u0 = u(p);
  double lap = 0.0, grad2 = 0.0;
  Vec q = p;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    q[i] = p[i] + h;
    const double up = u(q);
    q[i] = p[i] - h;
    const double um = u(q);
    q[i] = p[i];
    lap += (up - 2.0 * u0 + um) / (h * h);
    const double d = (up - um) / (2.0 * h);
    grad2 += d * d;
  }
  // R(e^{2u}δ) = −e^{−2u}·(n−1)·(2Δu + (n−2)|∇u|²)
  const double nn = static_cast<double>(n);
  return -std::exp(-2.0 * u0) * (nn - 1.0) * (2.0 * lap + (nn - 2.0) * grad2);
}

double scalar_curvature_numeric(const CuspEnd& end, const Vec& p) {
  end.validate();
  return scalar_curvature_numeric(end.n, end.m, p);
}

double stated_curvature_constant(std::size_t n, std::size_t m) {
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return (nn - 2.0) / 4.0 * (2.0 * mm - nn - 2.0);
}

Located locate_fundamental(const GroupPresentation& g, const SpherePoint& x, std::size_t max_len) {
  if (g.kind() != GroupKind::schottky) throw Error(ErrorCode::domain, "locator needs a Schottky group");
  Located loc{x, {}, 1.0};
  for (std::size_t step = 0;; ++step) {
    int holder = 0;
    for (int l : g.alphabet()) {
      const SphericalCap& c = g.letter_cap(l);
      if (chord(loc.point, c.center()) < c.chordal_radius()) {
        holder = l;
        break;
      }
    }
    if (holder == 0) return loc;
    if (step == max_len) {
      throw Error(ErrorCode::locator_failed, "point not in the fundamental domain after " +
                                                 std::to_string(max_len) + " steps");
    }
    const MobiusMap& back = g.letter(-holder);
    loc.derivative *= deriv_sphere(back, loc.point);
    loc.point = apply_sphere(back, loc.point);
    loc.word.push_back(-holder);
  }
}

ConformalFactor round_factor() {
  return [](const SpherePoint&) { return 1.0; };
}

double equivariant_extend(const ConformalFactor& u0, const GroupPresentation& g, const SpherePoint& x,
                          std::size_t max_len) {
  const Located loc = locate_fundamental(g, x, max_len);
  return u0(loc.point) * loc.derivative;
}

ConformalBand conformal_band(const ConformalFactor& u0, const GroupPresentation& g, const LimitSetCloud& L,
                             std::size_t samples, std::uint64_t seed, std::size_t max_len) {
  auto rng = make_rng(seed, 0xc6);
  ConformalBand b;
  b.min = INFINITY;
  b.max = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const SpherePoint x = random_sphere_point(rng, g.dim());
    const DistanceBounds d = dist_to_limit_set(x, L);
    if (!(d.lower > 0.0)) {
      ++b.skipped;
      continue;
    }
    const double v = equivariant_extend(u0, g, x, max_len) * d.upper;
    b.min = std::min(b.min, v);
    b.max = std::max(b.max, v);
    ++b.used;
  }
  if (b.used == 0) throw Error(ErrorCode::insufficient_data, "every sample fell in the resolution band");
  b.k = std::max(b.max, 1.0 / b.min);
  return b;
}

}  // namespace kleinlab
