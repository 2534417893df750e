#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kleinlab/cusp.hpp"
#include "kleinlab/error.hpp"
#include "kleinlab/random.hpp"
#include "support.hpp"

using namespace kleinlab;
using testsupport::rel_err;

namespace {

CuspEnd make_end(std::size_t n, std::size_t m, double R, double volk = 1.0) {
  CuspEnd e;
  e.n = n;
  e.m = m;
  e.radius = R;
  e.volume_k = volk;
  return e;
}

}  // namespace

TEST_CASE("g_h conformal factor") {
  const CuspEnd end = make_end(3, 1, 1.0);
  auto rng = make_rng(70);

  SUBCASE("chordal identity at random points") {
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec p = testsupport::random_point(rng, 3);
      const GhFactor f = gh_factor(end, p);
      // Oracle: chordal distance to ∞ times the stereographic round factor.
      const double q = chordal_distance(ExtPoint(p), ExtPoint::infinity(3));
      const double x = std::abs(p[0]);
      const double expected = std::sqrt(1.0 + p.squaredNorm()) / x;
      worst = std::max(worst, rel_err(q * f.round, expected));
      worst = std::max(worst, rel_err(f.chordal, expected));
    }
    CHECK(worst < 1e-12);
  }

  SUBCASE("unit point") {
    Vec p(3);
    p << 1.0, 0.0, 0.0;
    CHECK(gh_factor(end, p).chordal == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
  }

  SUBCASE("homogeneity of the flat factor") {
    for (int i = 0; i < 100; ++i) {
      const Vec p = testsupport::random_point(rng, 3);
      const double lambda = std::ldexp(1.0, i % 7 - 3);
      CHECK(gh_factor(end, lambda * p).flat == gh_factor(end, p).flat / lambda);
    }
  }

  SUBCASE("bounded on a fundamental domain") {
    // |x| ≥ R = 1 and |y| ≤ 1: the domain has diameter 2 in y.
    const double cprime = std::sqrt(2.0) * (1.0 + 2.0);
    double lo = INFINITY, hi = 0.0;
    Vec p(3);
    for (int i = 0; i <= 200; ++i) {
      const double x = std::pow(10.0, 3.0 * i / 200.0);
      for (int a = 0; a < 12; ++a) {
        for (int r = 0; r <= 4; ++r) {
          const double t = 2.0 * std::numbers::pi * a / 12.0;
          p << (i % 2 ? -x : x), 0.25 * r * std::cos(t), 0.25 * r * std::sin(t);
          const double v = gh_factor(end, p).chordal;
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    MESSAGE("q(p,inf) e^u over the grid: [" << lo << ", " << hi << "]");
    CHECK(lo >= 1.0 / cprime);
    CHECK(hi <= cprime);
  }

  SUBCASE("singular locus") {
    Vec p(3);
    p << 0.0, 0.3, 0.1;
    CHECK_THROWS_AS(gh_factor(end, p), Error);
  }
}

TEST_CASE("cusp volume") {
  CHECK(cusp_volume(make_end(3, 1, 2.0)) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(cusp_volume(make_end(3, 1, 1.0)) == doctest::Approx(0.5).epsilon(1e-15));

  SUBCASE("Monte-Carlo quadrature") {
    for (const CuspEnd& end : {make_end(3, 1, 2.0), make_end(3, 2, 1.5, 0.7), make_end(4, 2, 1.0, 2.0)}) {
      const auto mc = cusp_volume_monte_carlo(end, 1'000'000, 71);
      const double sphere = sphere_volume(end.m - 1);
      MESSAGE("n=" << end.n << " m=" << end.m << ": MC " << mc.value << " +- " << mc.stderr_ << ", closed form "
                   << cusp_volume(end) << " x |S^{m-1}| = " << cusp_volume_full(end));
      CHECK(std::abs(mc.value - cusp_volume_full(end)) < 3.0 * mc.stderr_);
      CHECK(rel_err(mc.value / sphere, cusp_volume(end)) < 0.01);
    }
  }

  SUBCASE("lattice cell") {
    CuspEnd end = make_end(3, 1, 1.0, 2.0);
    end.lattice = Mat(2, 2);
    end.lattice << 1.0, 0.5, 0.0, 2.0;
    const auto mc = cusp_volume_monte_carlo(end, 200'000, 72);
    CHECK(std::abs(mc.value - cusp_volume_full(end)) < 3.0 * mc.stderr_);
    end.volume_k = 1.0;
    CHECK_THROWS_AS(end.validate(), Error);
  }

  CHECK_THROWS_AS(make_end(3, 3, 1.0).validate(), Error);
  CHECK_THROWS_AS(make_end(3, 1, 0.0).validate(), Error);
}

TEST_CASE("scalar curvature of g_h") {
  auto rng = make_rng(73);
  // Closed form for e^{2u}δ with u = −ln|x|: ∇u = −x/|x|², Δu = −(m−2)/|x|²,
  // so R = (n−1)(2m−n−2) everywhere.
  auto closed = [](double n, double m) { return (n - 1.0) * (2.0 * m - n - 2.0); };

  SUBCASE("constant over random points") {
    for (auto [n, m] : {std::pair{3, 1}, {3, 2}, {4, 1}, {5, 2}, {5, 4}}) {
      const CuspEnd end = make_end(n, m, 1.0);
      double lo = INFINITY, hi = -INFINITY;
      for (int i = 0; i < 20; ++i) {
        const Vec p = testsupport::random_point(rng, n);
        const double r = scalar_curvature_numeric(end, p);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      MESSAGE("n=" << n << " m=" << m << ": computed " << lo << " .. " << hi << ", stated constant "
                   << stated_curvature_constant(n, m));
      CHECK((hi - lo) / std::abs(hi) < 1e-3);
      CHECK(rel_err(hi, closed(n, m)) < 1e-3);
    }
  }

  SUBCASE("scalar flat at 2m = n + 2") {
    for (int i = 0; i < 20; ++i) CHECK(std::abs(scalar_curvature_numeric(4, 3, testsupport::random_point(rng, 4))) < 1e-5);
  }

  SUBCASE("sign at n = 3, m = 1") {
    Vec p(3);
    p << 0.7, -1.2, 3.0;
    CHECK(scalar_curvature_numeric(make_end(3, 1, 1.0), p) < 0.0);
    CHECK(stated_curvature_constant(3, 1) < 0.0);
  }

  SUBCASE("cylinder S^{n-1} x R at m = n") {
    for (std::size_t n : {3u, 4u, 5u}) {
      const Vec p = testsupport::random_point(rng, n);
      CHECK(scalar_curvature_numeric(n, n, p) ==
            doctest::Approx(static_cast<double>((n - 1) * (n - 2))).epsilon(1e-5));
    }
  }

  SUBCASE("singular locus") {
    Vec p = Vec::Zero(3);
    p[1] = 1.0;
    CHECK_THROWS_AS(scalar_curvature_numeric(3, 1, p), Error);
  }
}

TEST_CASE("equivariant extension over the reference Schottky group") {
  const GroupPresentation g = reference_schottky(2);
  auto rng = make_rng(74);
  const ConformalFactor u0 = round_factor();

  SUBCASE("points of the domain keep u0") {
    Vec v(3);
    v << 0.0, 0.0, 1.0;
    const SpherePoint x(v);
    const Located loc = locate_fundamental(g, x);
    CHECK(loc.word.empty());
    CHECK(equivariant_extend(u0, g, x) == 1.0);
  }

  SUBCASE("functional equation under every generator") {
    double worst = 0.0;
    std::size_t deep = 0;
    for (int i = 0; i < 2000; ++i) {
      const SpherePoint x = random_sphere_point(rng, 2);
      const double ux = equivariant_extend(u0, g, x);
      for (int l : g.alphabet()) {
        const MobiusMap& gl = g.letter(l);
        const double rhs = equivariant_extend(u0, g, apply_sphere(gl, x)) * deriv_sphere(gl, x);
        worst = std::max(worst, rel_err(rhs, ux));
      }
      deep += locate_fundamental(g, x).word.size() > 1;
    }
    MESSAGE("worst relative residual " << worst << ", samples needing two or more steps: " << deep);
    CHECK(worst < 1e-10);
  }

  SUBCASE("walk derivative agrees with the composed map") {
    double worst = 0.0;
    for (int i = 0; i < 500; ++i) {
      // Points deep inside nested caps.
      SpherePoint x = random_sphere_point(rng, 2);
      for (int k = 0; k < 3; ++k) x = apply_sphere(g.letter(g.alphabet()[(i + k) % 4]), x);
      const Located loc = locate_fundamental(g, x);
      MobiusMap delta = MobiusMap::identity(2);
      for (int l : loc.word) delta = compose(g.letter(l), delta);
      worst = std::max(worst, rel_err(loc.derivative, deriv_sphere(delta, x)));
      CHECK(chord(apply_sphere(delta, x), loc.point) < 1e-9);
    }
    CHECK(worst < 1e-10);
  }

  SUBCASE("band against the limit set") {
    const auto L = sample_limit_set(g, 6);
    const auto band = conformal_band(u0, g, L, 10'000, 75);
    MESSAGE("e^u dist in [" << band.min << ", " << band.max << "], K = " << band.k << ", skipped " << band.skipped);
    CHECK(band.used > 9900);
    CHECK(std::isfinite(band.k));
    CHECK(band.k < 100.0);
  }

  SUBCASE("step budget") {
    Vec v(3);
    v << 0.0, 0.0, 1.0;
    SpherePoint x(v);
    for (int k = 0; k < 3; ++k) x = apply_sphere(g.letter(1), x);
    CHECK(locate_fundamental(g, x, 3).word == Word{-1, -1, -1});
    CHECK_THROWS_AS(locate_fundamental(g, x, 2), Error);
  }
}
