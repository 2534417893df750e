#include "kleinlab/harmonic.hpp"

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "kleinlab/error.hpp"
#include "kleinlab/random.hpp"

namespace kleinlab {

BoundaryIndicator BoundaryIndicator::full_sphere(std::size_t n) {
  return {Kind::full_sphere, n, [](const SpherePoint&) { return Membership::inside; }, "full sphere"};
}

BoundaryIndicator BoundaryIndicator::hemisphere(const SpherePoint& axis) {
  const Vec a = axis.vec();
  return {Kind::hemisphere, axis.sphere_dim(),
          [a](const SpherePoint& y) { return y.vec().dot(a) > 0.0 ? Membership::inside : Membership::outside; },
          "hemisphere"};
}

BoundaryIndicator BoundaryIndicator::cloud_complement(const LimitSetCloud& L) {
  if (!L.certified()) throw Error(ErrorCode::uncertified, "cloud complement needs a certified cloud");
  const LimitSetCloud* cloud = &L;
  return {Kind::cloud_complement, L.sphere_dim(),
          [cloud](const SpherePoint& y) {
            const DistanceBounds d = dist_to_limit_set(y, *cloud);
            return d.lower > 0.0 ? Membership::inside : Membership::indeterminate;
          },
          "complement of the limit-set cloud"};
}

BoundaryIndicator BoundaryIndicator::cap_union(std::vector<SphericalCap> caps) {
  if (caps.empty()) throw Error(ErrorCode::domain, "empty cap union");
  const std::size_t n = caps.front().center().sphere_dim();
  return {Kind::cap_union, n,
          [caps = std::move(caps)](const SpherePoint& y) {
            for (const auto& c : caps) {
              if (c.contains(y)) return Membership::inside;
            }
            return Membership::outside;
          },
          "union of caps"};
}

double poisson_kernel(const BallPoint& x, const SpherePoint& y) {
  require_same_dim(x.ambient_dim(), y.vec().size(), "poisson_kernel");
  return (1.0 - x.vec().squaredNorm()) / (x.vec() - y.vec()).squaredNorm();
}

SpherePoint push_from_origin(const BallPoint& x, const SpherePoint& z) {
  require_same_dim(x.ambient_dim(), z.vec().size(), "push_from_origin");
  const Vec& w = x.vec();
  const double wz = w.dot(z.vec());
  const double w2 = w.squaredNorm();
  const Vec num = (2.0 + 2.0 * wz) * w + (1.0 - w2) * z.vec();
  return SpherePoint::normalized(num / (1.0 + 2.0 * wz + w2));
}

MeanEstimate poisson_normalization(const BallPoint& x, std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorCode::insufficient_data, "need at least two samples");
  const std::size_t n = x.ambient_dim() - 1;
  const double exponent = static_cast<double>(n);
  auto rng = make_rng(seed, 0x401);
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double k = std::pow(poisson_kernel(x, random_sphere_point(rng, n)), exponent);
    sum += k;
    sum2 += k * k;
  }
  const double ns = static_cast<double>(samples);
  MeanEstimate e;
  e.value = sum / ns;
  e.stderr_ = std::sqrt(std::max(sum2 / ns - e.value * e.value, 0.0) / (ns - 1.0));
  e.samples = samples;
  return e;
}

namespace {

HarmonicEstimate tally(std::size_t inside, std::size_t indeterminate, std::size_t samples) {
  HarmonicEstimate e;
  e.samples = samples;
  e.indeterminate = indeterminate;
  const double ns = static_cast<double>(samples);
  e.value = static_cast<double>(inside) / ns;
  e.stderr_ = samples > 1 ? std::sqrt(e.value * (1.0 - e.value) / (ns - 1.0)) : 0.0;
  return e;
}

}  // namespace

HarmonicEstimate harmonic_extension(const BoundaryIndicator& chi, const BallPoint& x, std::size_t samples,
                                    std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::insufficient_data, "need at least one sample");
  const std::size_t n = x.ambient_dim() - 1;
  require_same_dim(n, chi.sphere_dim(), "harmonic_extension");
  auto rng = make_rng(seed, 0x402);
  std::size_t inside = 0, indet = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const SpherePoint y = push_from_origin(x, random_sphere_point(rng, n));
    switch (chi(y)) {
      case Membership::inside: ++inside; break;
      case Membership::indeterminate: ++indet; break;
      case Membership::outside: break;
    }
  }
  return tally(inside, indet, samples);
}

PseudoDistance pseudo_distance(const BallPoint& x, const BallPoint& y) {
  require_same_dim(x.ambient_dim(), y.ambient_dim(), "pseudo_distance");
  const double d2 = (x.vec() - y.vec()).squaredNorm();
  const double ax = 1.0 - x.vec().squaredNorm();
  const double ay = 1.0 - y.vec().squaredNorm();
  const double denom = d2 + ax * ay;
  return {std::sqrt(d2 / denom), ax * ay / denom};
}

double green_radial(std::size_t n, double s, double w) {
  if (!(s > 0.0)) throw Error(ErrorCode::pole, "Green's function pole");
  if (s >= 1.0) return 0.0;
  switch (n) {
    case 1:
      return w < 0.5 ? -0.5 * std::log1p(-w) : -std::log(s);
    case 2: {
      const double d = w / (1.0 + s);  // 1 − s
      return d * d / s;
    }
    case 3: {
      if (w < 0.1) {
        // Σ_{k≥3} w^k (1/2 − 1/k)
        double sum = 0.0, p = w * w * w;
        for (int k = 3; k < 40; ++k, p *= w) sum += p * (0.5 - 1.0 / k);
        return sum;
      }
      const double sigma = s * s;
      return 0.5 * w * (2.0 - w) / sigma + std::log(sigma);
    }
    default: {
      const double m = static_cast<double>(n);
      auto f = [m](double v) { return std::pow(-std::expm1(2.0 * v), m - 1.0) * std::exp((1.0 - m) * v); };
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, std::log(s), 0.0, 15, 1e-12);
    }
  }
}

double green_ball(const BallPoint& x, const BallPoint& y) {
  const PseudoDistance p = pseudo_distance(x, y);
  if (p.s == 0.0) throw Error(ErrorCode::pole, "green_ball at x = y");
  return green_radial(x.ambient_dim() - 1, p.s, p.w);
}

GreenSum green_quotient(const BallPoint& x, const BallPoint& y, const GroupPresentation& g, std::size_t max_len) {
  require_same_dim(x.ambient_dim(), g.dim() + 1, "green_quotient");
  const auto elements = enumerate_elements(g, max_len);
  GreenSum sum;
  sum.partial.assign(max_len + 1, 0.0);
  for (const auto& e : elements) {
    const BallPoint gy = poincare_extend(e.map).apply(y);
    const PseudoDistance p = pseudo_distance(x, gy);
    if (p.s < 1e-12) {
      throw Error(ErrorCode::pole, "orbit of y reaches x at word " + to_string(e.word));
    }
    sum.partial[e.word.size()] += green_radial(g.dim(), p.s, p.w);
    ++sum.terms;
  }
  for (std::size_t k = 1; k <= max_len; ++k) sum.partial[k] += sum.partial[k - 1];
  sum.value = sum.partial.back();
  return sum;
}

FluxReport flux_density_check(std::size_t n, double r, std::size_t probes, std::uint64_t seed) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::domain, "flux radius must lie in (0, 1)");
  if (probes < 2) throw Error(ErrorCode::insufficient_data, "need at least two probes");
  const BallPoint origin = BallPoint::origin(n + 1);
  const double h = 1e-5 * std::min(r, 1.0 - r);
  const double a = 1.0 - r * r;
  const double nn = static_cast<double>(n);
  auto rng = make_rng(seed, 0x403);

  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < probes; ++i) {
    const Vec d = random_sphere_point(rng, n).vec();
    const double gp = green_ball(origin, BallPoint((r + h) * d));
    const double gm = green_ball(origin, BallPoint((r - h) * d));
    // The hyperbolic unit normal is (1 − r²)/2 times the Euclidean one.
    const double normal = -(gp - gm) / (2.0 * h) * a / 2.0;
    const double density = normal * std::pow(2.0 * r / a, nn);
    sum += density;
    sum2 += density * density;
  }
  const double np = static_cast<double>(probes);
  FluxReport f;
  f.n = n;
  f.r = r;
  f.density_unit = sum / np;
  f.direction_variance = std::max(sum2 / np - f.density_unit * f.density_unit, 0.0);
  f.density_radius = f.density_unit / std::pow(r, nn);
  f.stated = std::pow(2.0, nn - 1.0) / std::pow(r, nn);
  f.ratio_unit = f.density_unit / f.stated;
  f.ratio_radius = f.density_radius / f.stated;
  return f;
}

FluxConvention select_flux_convention(std::size_t n, const std::vector<double>& radii, std::size_t probes,
                                      std::uint64_t seed) {
  if (radii.size() < 2) throw Error(ErrorCode::insufficient_data, "need at least two radii");
  FluxConvention c;
  double ulo = INFINITY, uhi = -INFINITY, rlo = INFINITY, rhi = -INFINITY;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    c.reports.push_back(flux_density_check(n, radii[i], probes, seed + i));
    const FluxReport& f = c.reports.back();
    ulo = std::min(ulo, f.ratio_unit);
    uhi = std::max(uhi, f.ratio_unit);
    rlo = std::min(rlo, f.ratio_radius);
    rhi = std::max(rhi, f.ratio_radius);
  }
  c.unit_constant = (uhi - ulo) < 1e-6 * std::abs(uhi);
  c.radius_constant = (rhi - rlo) < 1e-6 * std::abs(rhi);
  c.matching = c.unit_constant ? (c.radius_constant ? "both" : "unit-sphere")
                               : (c.radius_constant ? "radius-r sphere" : "neither");
  c.caveat = "the constant 2^(n-1) depends on the normalization of the Green's function g";
  return c;
}

HarmonicIdentity harmonic_measure_identity(const LimitSetCloud& L, std::size_t samples, std::uint64_t seed) {
  const std::size_t n = L.sphere_dim();
  const BoundaryIndicator chi = BoundaryIndicator::cloud_complement(L);
  HarmonicIdentity h;
  h.harmonic = harmonic_extension(chi, BallPoint::origin(n + 1), samples, seed);

  std::size_t inside = 0, indet = 0;
  for_each_quasi_uniform(n, samples, seed ^ 0x404, [&](const SpherePoint& y) {
    switch (chi(y)) {
      case Membership::inside: ++inside; break;
      case Membership::indeterminate: ++indet; break;
      case Membership::outside: break;
    }
  });
  h.area = tally(inside, indet, samples);

  if (h.harmonic.indeterminate_fraction() > 0.1 || h.area.indeterminate_fraction() > 0.1) {
    throw Error(ErrorCode::insufficient_data, "more than 10% of the samples lie in the resolution band");
  }
  h.difference = h.harmonic.value - h.area.value;
  h.tolerance = 3.0 * std::hypot(h.harmonic.stderr_, h.area.stderr_) + h.harmonic.indeterminate_fraction() +
                h.area.indeterminate_fraction();
  h.agree = std::abs(h.difference) <= h.tolerance;
  return h;
}

}  // namespace kleinlab
