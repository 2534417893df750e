#include <cmath>
#include <numbers>

#include "doctest.h"
#include "kleinlab/error.hpp"
#include "kleinlab/group.hpp"
#include "support.hpp"

using namespace kleinlab;

namespace {

Vec e(std::size_t n, std::size_t i, double s = 1.0) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
  v[static_cast<Eigen::Index>(i)] = s;
  return v;
}

std::size_t free_count(std::size_t rank, std::size_t len) {
  std::size_t total = 1, level = 2 * rank;
  for (std::size_t l = 1; l <= len; ++l) {
    total += level;
    level *= 2 * rank - 1;
  }
  return total;
}

}  // namespace

TEST_CASE("enumeration counts and order") {
  const auto g = reference_schottky();
  CHECK(enumerate_elements(g, 0).size() == 1);
  const auto els = enumerate_elements(g, 2);
  CHECK(els.size() == 17);
  CHECK(els[1].word == Word{1});
  CHECK(els[2].word == Word{-1});
  CHECK(els[5].word == Word{1, 1});
  CHECK(els[6].word == Word{1, 2});
  for (std::size_t len = 0; len <= 6; ++len) CHECK(enumerate_elements(g, len).size() == free_count(2, len));
  for (const auto& el : enumerate_elements(g, 4)) {
    for (std::size_t i = 1; i < el.word.size(); ++i) CHECK(el.word[i] != -el.word[i - 1]);
  }
  const auto cyc = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
  CHECK(enumerate_elements(cyc, 5).size() == 11);
  CHECK(cyc.is_elementary());
  CHECK_FALSE(g.is_elementary());
}

TEST_CASE("finite cyclic groups are deduplicated") {
  Mat rot(2, 2);
  const double t = 2 * std::numbers::pi / 5;
  rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
  const auto g = GroupPresentation::cyclic(MobiusMap::rotation(rot));
  CHECK(enumerate_elements(g, 10).size() == 5);
  // Non-free custom presentation: g and its square as generators of Z/5.
  const auto h = GroupPresentation::custom({MobiusMap::rotation(rot), MobiusMap::rotation(rot * rot)});
  CHECK(enumerate_elements(h, 6).size() == 5);
}

TEST_CASE("orbits") {
  const auto cyc = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
  const auto pts = orbit(cyc, ExtPoint(e(2, 0)), 3);
  REQUIRE(pts.size() == 7);
  std::vector<double> radii;
  for (const auto& p : pts) radii.push_back(p.coords()[0]);
  std::sort(radii.begin(), radii.end());
  for (int j = -3; j <= 3; ++j) CHECK(radii[static_cast<std::size_t>(j + 3)] == doctest::Approx(std::ldexp(1.0, j)));
  const auto triv = GroupPresentation::custom({MobiusMap::identity(2)});
  CHECK(orbit(triv, ExtPoint(e(2, 1)), 4).size() == 1);
  const auto g = reference_schottky();
  CHECK(orbit(g, ExtPoint(Vec::Zero(2)), 5).size() == free_count(2, 5));
  // Depth-6 siblings are ~2e-13 apart, below the default merge tolerance.
  CHECK(orbit(g, ExtPoint(Vec::Zero(2)), 6, 1e-14).size() == free_count(2, 6));
}

TEST_CASE("Schottky construction") {
  const auto g = reference_schottky();
  for (std::size_t i = 0; i < g.rank(); ++i) {
    const auto& p = g.cap_pairs()[i];
    // A probe in the exterior of the source cap: the antipode of its center.
    const SpherePoint probe = SpherePoint::normalized(-p.source.center().vec());
    CHECK(p.target.contains(apply_sphere(g.generator(i), probe)));
    CHECK(p.source.contains(apply_sphere(inverse(g.generator(i)), SpherePoint::normalized(-p.target.center().vec()))));
  }
  // Tangent caps are rejected and the pair is named.
  const SpherePoint a(e(3, 0)), b(e(3, 1)), c(e(3, 0, -1)), d(e(3, 1, -1));
  const double q = std::numbers::pi / 4;
  try {
    (void)GroupPresentation::schottky({CapPair{SphericalCap(a, q), SphericalCap(b, q)},
                                       CapPair{SphericalCap(c, 0.1), SphericalCap(d, 0.1)}});
    FAIL("tangent caps accepted");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::invalid_group);
    CHECK(std::string(err.what()).find("cap 1a and cap 1b") != std::string::npos);
  }
  // Caps around the north pole exercise the rotated frame.
  const SpherePoint north(e(3, 2)), south(e(3, 2, -1));
  const auto h = GroupPresentation::schottky({CapPair{SphericalCap(north, 0.3), SphericalCap(south, 0.3)},
                                              CapPair{SphericalCap(a, 0.2), SphericalCap(c, 0.2)}});
  CHECK(h.cap_pairs()[0].target.contains(apply_sphere(h.generator(0), SpherePoint(e(3, 1)))));
  CHECK(enumerate_elements(h, 4).size() == free_count(2, 4));
}

TEST_CASE("displacement") {
  auto rng = make_rng(40);
  const BallPoint o = BallPoint::origin(3);
  CHECK(displacement(o, MobiusMap::identity(2)) == 0.0);
  CHECK(displacement(BallPoint(random_ball_vec(rng, 3, 0.9)), MobiusMap::identity(2)) == doctest::Approx(0.0));
  CHECK(displacement(o, MobiusMap::dilation(2, 2.0)) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  for (int i = 0; i < 300; ++i) {
    const auto g = testsupport::random_mobius(rng, 2);
    const auto d = testsupport::random_mobius(rng, 2);
    const BallPoint x(random_ball_vec(rng, 3, 0.9));
    const BallPoint dx = ExtendedMap(d).apply(x);
    const double lhs = displacement(dx, compose(d, compose(g, inverse(d))));
    CHECK(std::abs(lhs - displacement(x, g)) < 1e-9 * (1 + lhs));
    // Oracle: ball-model distance after the extended action.
    CHECK(std::abs(displacement(x, g) - hyperbolic_distance(x, ExtendedMap(g).apply(x))) < 1e-8 * (1 + lhs));
  }
}

TEST_CASE("orbit counting for a loxodromic cyclic group") {
  const double ell = std::log(2.0);
  const auto cyc = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
  const auto prof = orbit_profile(cyc, 12);
  CHECK(orbit_count(prof, 0.0).count == 1);
  for (double R : {0.1, 0.7, 1.5, 3.3, 5.0}) {
    const auto c = orbit_count(prof, R);
    CHECK(c.count == 2 * static_cast<std::size_t>(std::floor(R / ell)) + 1);
    CHECK(c.reliable);
  }
  CHECK_FALSE(orbit_count(prof, 12 * ell + 0.1).reliable);
  // Geometric series oracle for the Poincaré series.
  for (double s : {0.3, 1.0, 2.5}) {
    const int N = 12;
    const double q = std::exp(-s * ell);
    const double closed = 1 + 2 * q * (1 - std::pow(q, N)) / (1 - q);
    CHECK(std::abs(poincare_series(prof, s) - closed) < 1e-12);
  }
  CHECK(poincare_series(cyc, 1.0, 0) == 1.0);
  const auto est = critical_exponent(cyc, 12);
  CHECK(est.elementary);
  CHECK(std::abs(est.delta) < 0.02);
}

TEST_CASE("Schottky orbit counting and exponent") {
  const auto g = reference_schottky();
  const auto prof = orbit_profile(g, 8);
  auto rng = make_rng(41);
  std::uniform_real_distribution<double> u(0.0, prof.horizon);
  std::size_t prev = 0;
  for (double R = 0; R < prof.horizon; R += prof.horizon / 50) {
    const auto c = orbit_count(prof, R).count;
    CHECK(c >= prev);
    prev = c;
  }
  // Submultiplicativity holds up to the basepoint offset: the origin is off
  // every axis, so both factors get the smallest nontrivial displacement as slack.
  const double c = prof.distances[1];
  for (int i = 0; i < 200; ++i) {
    const double r1 = u(rng) / 2, r2 = u(rng) / 2;
    CHECK(orbit_count(prof, r1 + r2).count <= orbit_count(prof, r1 + c).count * orbit_count(prof, r2 + c).count);
  }
  const double s_big = 10.0 * 2;
  CHECK(std::abs(poincare_series(prof, s_big) - 1.0) < 1e-6);
  // Partial sums increase with depth; decreasing in s.
  double last = 0;
  for (std::size_t len = 1; len <= 8; ++len) {
    const double ps = poincare_series(g, 0.5, len);
    CHECK(ps >= last);
    last = ps;
  }
  CHECK(poincare_series(prof, 0.3) >= poincare_series(prof, 0.4));

  const auto est = critical_exponent(g, 8);
  MESSAGE("reference Schottky delta = " << est.delta << " +- " << est.stderr_ << " over [" << est.r_min << ", "
                                        << est.r_max << "]");
  CHECK(est.delta > 0.0);
  CHECK(est.delta < 2.0);
  // Bounded above the exponent: the depth-8 and depth-6 partial sums are close.
  const double s_hi = est.delta + 0.2;
  CHECK(poincare_series(prof, s_hi) < 1.2 * poincare_series(g, s_hi, 6));
  // Conjugation invariance of the estimate.
  Mat rot = random_orthogonal(rng, 2);
  const MobiusMap delta = compose(MobiusMap::rotation(rot), MobiusMap::dilation(2, 1.3));
  const auto conj = critical_exponent(g.conjugated(delta), 8);
  CHECK(std::abs(conj.delta - est.delta) < 2 * std::hypot(est.stderr_, conj.stderr_) + 1e-12);
}

TEST_CASE("Margulis region test") {
  const auto par = GroupPresentation::cyclic(MobiusMap::translation(e(2, 0)));
  // Along the ray toward the fixed point (north pole in the ball) displacement → 0.
  double prev = 1e300;
  bool eventually = false;
  for (double t = 0.0; t < 0.9999; t = 1 - (1 - t) / 2) {
    Vec p = Vec::Zero(3);
    p[2] = t;
    const auto r = margulis_region_test(BallPoint(p), par, 0.05, 3);
    CHECK(r.min_displacement <= prev + 1e-12);
    prev = r.min_displacement;
    eventually = eventually || r.inside;
  }
  CHECK(eventually);
  const auto g = reference_schottky();
  const BallPoint o = BallPoint::origin(3);
  const auto base = margulis_region_test(o, g, 1e-3, 3);
  CHECK_FALSE(base.inside);
  CHECK(margulis_region_test(o, g, base.min_displacement * 1.01, 3).inside);
  CHECK_FALSE(margulis_region_test(o, g, base.min_displacement * 0.99, 3).inside);
}
