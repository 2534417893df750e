#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "kleinlab/error.hpp"
#include "kleinlab/lipgraph.hpp"
#include "kleinlab/random.hpp"
#include "support.hpp"

using namespace kleinlab;

namespace {

SpherePoint pole(bool north) {
  Vec v = Vec::Zero(3);
  v[2] = north ? 1.0 : -1.0;
  return SpherePoint(v);
}

SpherePoint on_circle(double angle) {
  Vec v(3);
  v << std::cos(angle), std::sin(angle), 0.0;
  return SpherePoint::normalized(v);
}

// Point at angle phi from c along the tangent direction t (unit, ⟂ c).
SpherePoint offset(const SpherePoint& c, const Vec& t, double phi) {
  return SpherePoint::normalized(std::cos(phi) * c.vec() + std::sin(phi) * t);
}

LimitSetCloud poles_cloud() { return LimitSetCloud::from_points({pole(false), pole(true)}, 0.0); }

std::vector<SpherePoint> shell_samples(std::mt19937_64& rng, std::size_t count, double lo, double hi) {
  std::vector<SpherePoint> xs;
  while (xs.size() < count) {
    const auto x = random_sphere_point(rng, 2);
    const auto y = stereo_project(x);
    if (y.is_infinity()) continue;
    const double r = y.coords().norm();
    if (r > lo && r < hi) xs.push_back(x);
  }
  return xs;
}

}  // namespace

TEST_CASE("base caps") {
  const auto L = poles_cloud();
  const SpherePoint x = on_circle(0.7);
  const auto cap = base_cap(x, 0.1, L);
  // Chord from the equator to either pole is √2.
  CHECK(cap.chordal_radius() == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(cap.angle() > 0.0);
  CHECK(cap.angle() < std::numbers::pi / 2);
  // Walk the great circle from x towards the north pole by the cap angle and
  // measure the chord directly.
  const SpherePoint b = offset(x, pole(true).vec(), cap.angle());
  CHECK((b.vec() - x.vec()).norm() == doctest::Approx(0.1 * std::sqrt(2.0)).epsilon(1e-13));

  double prev = cap.angle();
  for (double eps : {0.05, 1e-3, 1e-6, 1e-9}) {
    const double a = base_cap(x, eps, L).angle();
    CHECK(a < prev);
    prev = a;
  }
  CHECK(prev < 1e-8);
  CHECK_THROWS_AS(base_cap(pole(true), 0.1, L), Error);
  CHECK_THROWS_AS(base_cap(x, 0.0, L), Error);
  CHECK_THROWS_AS(base_cap(x, 0.6, L), Error);
  const auto uncertified = LimitSetCloud::from_points({pole(false)}, std::nullopt);
  CHECK_THROWS_AS(base_cap(x, 0.1, uncertified), Error);
}

TEST_CASE("dome entry radius") {
  const SpherePoint c = pole(true);
  const SphericalCap cap(c, std::numbers::pi / 6);
  const auto t = dome_entry_radius(cap, c);
  REQUIRE(t);
  CHECK(*t == doctest::Approx(0.5 / (std::sqrt(3.0) / 2.0)).epsilon(1e-14));
  CHECK_FALSE(dome_entry_radius(cap, on_circle(0.3)));
  for (int k = 0; k < 8; ++k) {
    Vec dir(3);
    dir << std::cos(0.8 * k), std::sin(0.8 * k), 0.0;
    const auto edge = dome_entry_radius(cap, offset(c, dir, cap.angle()));
    REQUIRE(edge);
    CHECK(*edge == doctest::Approx(1.0).epsilon(1e-7));
  }
  // The entry point lies on the dome sphere.
  auto rng = make_rng(61);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const SphericalCap k(random_sphere_point(rng, 2), 0.01 + 1.4 * frac(rng));
    Vec t0 = testsupport::random_point(rng, 3);
    t0 -= t0.dot(k.center().vec()) * k.center().vec();
    const SpherePoint x = offset(k.center(), t0.normalized(), frac(rng) * k.angle());
    const auto r = dome_entry_radius(k, x);
    REQUIRE(r);
    const Sphere dome = dome_sphere(k);
    CHECK((*r * x.vec() - dome.center).norm() == doctest::Approx(dome.radius).epsilon(1e-11));
    CHECK(std::abs(dome.center.squaredNorm() - 1.0 - dome.radius * dome.radius) < 1e-12 * dome.center.squaredNorm());
  }
}

TEST_CASE("height on a single cap and monotonicity") {
  const SphericalCap cap(pole(true), std::numbers::pi / 6);
  const auto F = DomeFamily::from_caps({cap});
  CHECK(height(F, pole(true)).f == doctest::Approx(0.57735026918962573).epsilon(1e-14));
  CHECK_THROWS_AS(height(F, pole(false)), Error);
  CHECK_FALSE(try_height(F, pole(false)));

  auto rng = make_rng(62);
  std::uniform_real_distribution<double> ang(0.02, 0.5);
  std::vector<SphericalCap> caps;
  for (int i = 0; i < 300; ++i) caps.emplace_back(random_sphere_point(rng, 2), ang(rng));
  const auto small = DomeFamily::from_caps(std::vector<SphericalCap>(caps.begin(), caps.begin() + 150));
  const auto big = DomeFamily::from_caps(caps);
  int covered = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto x = random_sphere_point(rng, 2);
    const auto hs = try_height(small, x);
    const auto hb = try_height(big, x);
    if (hs) {
      REQUIRE(hb);
      CHECK(hb->f <= hs->f);
      CHECK(hs->f > 0.0);
      CHECK(hs->f < 1.0);
      ++covered;
    }
  }
  CHECK(covered > 100);
}

TEST_CASE("propagation") {
  const auto L = poles_cloud();
  const auto seed = base_cap(on_circle(0.0), 0.1, L);

  SUBCASE("identity only") {
    const auto g = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
    const auto F = propagate({seed}, g, 0, L, 0.1);
    REQUIRE(F.caps().size() == 1);
    CHECK((F.caps()[0].center().vec() - seed.center().vec()).norm() == 0.0);
    CHECK(F.caps()[0].angle() == seed.angle());
  }

  SUBCASE("cyclic loxodromic, depth 3") {
    const auto dil = MobiusMap::dilation(2, 2.0);
    const auto g = GroupPresentation::cyclic(dil);
    const auto F = propagate({seed}, g, 3, L, 0.1);
    REQUIRE(F.caps().size() == 7);
    // Angular radius of γ^j(cap) is θ·|(γ^j)'(x)|_s to first order in θ.
    std::vector<double> by_power(7);
    for (std::size_t i = 0; i < 7; ++i) {
      const Word& w = F.words()[F.origins()[i].element];
      int j = 0;
      for (int l : w) j += l;
      MobiusMap m = MobiusMap::identity(2);
      for (int k = 0; k < std::abs(j); ++k) m = compose(m, j > 0 ? dil : inverse(dil));
      const double predicted = seed.angle() * deriv_sphere(m, seed.center());
      CHECK(F.caps()[i].angle() == doctest::Approx(predicted).epsilon(0.02));
      by_power[static_cast<std::size_t>(j + 3)] = F.caps()[i].angle();
    }
    for (int j = 0; j < 3; ++j) {
      CHECK(by_power[static_cast<std::size_t>(j)] < by_power[static_cast<std::size_t>(j + 1)]);
      CHECK(by_power[static_cast<std::size_t>(6 - j)] < by_power[static_cast<std::size_t>(5 - j)]);
    }
    CHECK(F.shape().verified == 7);
    CHECK(F.shape().max_ratio <= 0.5);
  }

  SUBCASE("image caps follow their boundary points") {
    const auto g = reference_schottky();
    const auto cloud = sample_limit_set(g, 6);
    auto rng = make_rng(63);
    std::vector<SphericalCap> seeds;
    const auto region = fundamental_region(g);
    while (seeds.size() < 5) {
      const auto x = random_sphere_point(rng, 2);
      if (region.contains(x)) seeds.push_back(base_cap(x, 0.1, cloud));
    }
    const auto F = propagate(seeds, g, 2, cloud, 0.1);
    double worst_rel = 0.0;
    for (std::size_t i = 0; i < F.caps().size(); ++i) {
      const auto& o = F.origins()[i];
      MobiusMap m = MobiusMap::identity(2);
      for (int l : F.words()[o.element]) m = compose(m, g.letter(l));
      const auto& s = seeds[o.seed];
      Vec t0 = Vec::Unit(3, 0) - s.center()[0] * s.center().vec();
      if (t0.norm() < 0.1) t0 = Vec::Unit(3, 1) - s.center()[1] * s.center().vec();
      const Vec t1 = Eigen::Vector3d(s.center().vec()).cross(Eigen::Vector3d(t0.normalized()));
      for (int k = 0; k < 20; ++k) {
        const double a = 2 * std::numbers::pi * k / 20;
        const Vec dir = std::cos(a) * t0.normalized() + std::sin(a) * t1;
        const SpherePoint image = apply_sphere(m, offset(s.center(), dir, s.angle()));
        const double got = chord(image, F.caps()[i].center());
        const double want = F.caps()[i].chordal_radius();
        CHECK(std::abs(got - want) < 1e-10);
        worst_rel = std::max(worst_rel, std::abs(got - want) / want);
      }
    }
    MESSAGE("worst relative boundary error: " << worst_rel);
    CHECK(worst_rel < 1e-6);
  }

  SUBCASE("shape bound violation asks for a smaller epsilon0") {
    const auto g = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
    CHECK_THROWS_WITH_AS(propagate({base_cap(on_circle(0.0), 0.5, L)}, g, 1, L, 0.5), doctest::Contains("epsilon0"),
                         Error);
  }
}

TEST_CASE("adaptive seeds cover the fundamental region") {
  const auto g = reference_schottky();
  const auto L = sample_limit_set(g, 6);
  const auto region = fundamental_region(g);
  SeedOptions opt;
  const auto mesh = seed_mesh(region, L, opt);
  CHECK(mesh.under_resolved == 0);
  CHECK(mesh.points.size() > 1000);
  for (const auto& p : mesh.points) CHECK(region.contains(p));
  const auto F = DomeFamily::from_caps(base_caps(mesh.points, opt.epsilon0, L), opt.epsilon0);
  // Every region point sits well inside some seed cap: 1 − f is at least a
  // fixed fraction of the local cap angle.
  auto rng = make_rng(64);
  double worst = INFINITY;
  for (int i = 0; i < 3000; ++i) {
    const auto x = random_sphere_point(rng, 2);
    if (!region.contains(x)) continue;
    const auto h = try_height(F, x);
    REQUIRE(h);
    const double theta = base_cap(x, opt.epsilon0, L).angle();
    worst = std::min(worst, h->gap / theta);
  }
  MESSAGE("min (1 - f)/theta over region samples: " << worst);
  CHECK(worst > 0.2);
}

TEST_CASE("fundamental regions") {
  SUBCASE("cyclic loxodromic shell") {
    const auto g = GroupPresentation::cyclic(MobiusMap::dilation(2, 3.0));
    const auto R = fundamental_region(g);
    auto rng = make_rng(65);
    for (int i = 0; i < 500; ++i) {
      const auto x = random_sphere_point(rng, 2);
      const double r = stereo_project(x).coords().norm();
      // The shell is bounded by a sphere about one fixed point and its image.
      const bool inside = R.contains(x);
      int images_inside = 0;
      for (int j = -6; j <= 6; ++j) {
        if (R.contains(stereo_unproject(ExtPoint(std::pow(3.0, j) * stereo_project(x).coords())))) ++images_inside;
      }
      CHECK(images_inside == 1);
      if (r > 1.0 + 1e-9 && r < 3.0 - 1e-9) CHECK(inside);
    }
  }
  SUBCASE("parabolic slab") {
    Vec h(2);
    h << 0.5, 0.0;
    const auto g = GroupPresentation::cyclic(MobiusMap::translation(h));
    const auto R = fundamental_region(g);
    auto rng = make_rng(66);
    for (int i = 0; i < 300; ++i) {
      const Vec y = testsupport::random_point(rng, 2);
      int hits = 0;
      for (int j = -40; j <= 40; ++j) {
        if (R.contains(stereo_unproject(ExtPoint(y + j * h)))) ++hits;
      }
      CHECK(hits == 1);
    }
  }
  SUBCASE("unsupported") {
    CHECK_THROWS_AS(fundamental_region(GroupPresentation::cyclic(MobiusMap::rotation(Mat::Identity(2, 2) * -1.0))),
                    Error);
  }
}

TEST_CASE("invariance of the graph for a cyclic group") {
  const auto g = GroupPresentation::cyclic(MobiusMap::dilation(2, 2.0));
  const auto L = sample_limit_set(g, 1);
  const auto mesh = seed_mesh(fundamental_region(g), L, SeedOptions{});
  const auto seeds = base_caps(mesh.points, 0.1, L);
  auto rng = make_rng(67);
  const auto xs = shell_samples(rng, 2000, 0.25, 4.0);

  const auto F0 = propagate(seeds, g, 3, L, 0.1);
  const auto id = check_invariance(F0, g, {}, xs, 0.0);
  CHECK(id.max_deviation == 0.0);
  CHECK(id.compared == xs.size());

  double prev = INFINITY;
  for (std::size_t d : {1u, 2u, 3u, 5u}) {
    const auto F = propagate(seeds, g, d, L, 0.1);
    for (const Word& gamma : {Word{1}, Word{-1}}) {
      const auto r = check_invariance(F, g, gamma, xs, 1e-9);
      CHECK(r.matched > 0);
      CHECK(r.matched_max_deviation < 1e-9);
      CHECK(r.within_tolerance);
      if (gamma[0] == 1) {
        CHECK(r.max_deviation <= prev);
        prev = r.max_deviation;
      }
    }
  }
  CHECK(prev < 1e-9);
}

TEST_CASE("Lipschitz estimate") {
  SUBCASE("single cap along a great circle") {
    const double theta = 0.4;
    const SphericalCap cap(pole(true), theta);
    const auto F = DomeFamily::from_caps({cap});
    std::vector<SpherePoint> xs;
    const double reach = 0.8 * theta;
    for (int k = 0; k <= 4000; ++k) {
      xs.push_back(offset(pole(true), Vec::Unit(3, 0), -reach + 2.0 * reach * k / 4000));
    }
    // t(φ) = d − sqrt(d² − 1) with d = cos φ / cos θ; the slope is largest at the ends.
    const double d = std::cos(reach) / std::cos(theta);
    const double slope = std::abs((1.0 - d / std::sqrt(d * d - 1.0)) * std::sin(reach) / std::cos(theta));
    const auto est = lipschitz_estimate(F, xs);
    CHECK(est.used == xs.size());
    CHECK(est.constant == doctest::Approx(slope).epsilon(0.1));
  }
  SUBCASE("rotation about the cap axis") {
    const auto F = DomeFamily::from_caps({SphericalCap(pole(true), 0.5)});
    auto rng = make_rng(68);
    std::vector<SpherePoint> xs, ys;
    Mat rot = Mat::Identity(3, 3);
    rot.topLeftCorner(2, 2) << std::cos(1.1), -std::sin(1.1), std::sin(1.1), std::cos(1.1);
    while (xs.size() < 300) {
      const auto x = random_sphere_point(rng, 2);
      if (x[2] < std::cos(0.45)) continue;
      xs.push_back(x);
      ys.push_back(SpherePoint::normalized(rot * x.vec()));
    }
    CHECK(lipschitz_estimate(F, xs).constant == doctest::Approx(lipschitz_estimate(F, ys).constant).epsilon(1e-9));
  }
  SUBCASE("too few samples") {
    const auto F = DomeFamily::from_caps({SphericalCap(pole(true), 0.5)});
    CHECK_THROWS_AS(lipschitz_estimate(F, {pole(true)}), Error);
  }
}

TEST_CASE("geodesics between ideal points") {
  auto rng = make_rng(69);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_sphere_point(rng, 2);
    const auto b = random_sphere_point(rng, 2);
    const double s1 = testsupport::random_point(rng, 1)[0] * 3.0;
    const double s2 = testsupport::random_point(rng, 1)[0] * 3.0;
    const auto p1 = geodesic_point(a, b, s1);
    const auto p2 = geodesic_point(a, b, s2);
    CHECK(hyperbolic_distance(p1, p2) == doctest::Approx(std::abs(s1 - s2)).epsilon(1e-8).scale(1e-9));
    CHECK((geodesic_point(a, b, -30.0).vec() - a.vec()).norm() < 1e-12);
    CHECK((geodesic_point(a, b, 30.0).vec() - b.vec()).norm() < 1e-12);
    // Three points of a geodesic: the distances add up.
    const auto p0 = geodesic_point(a, b, 0.0);
    CHECK(hyperbolic_distance(p1, p0) + hyperbolic_distance(p0, p2) >=
          hyperbolic_distance(p1, p2) * (1.0 - 1e-12));
  }
  // Antipodal endpoints: the diameter.
  const auto p = geodesic_point(pole(false), pole(true), 1.0);
  CHECK(p.vec()[0] == 0.0);
  CHECK(p.vec()[2] == doctest::Approx(std::tanh(0.5)).epsilon(1e-14));
  CHECK_THROWS_AS(geodesic_point(pole(true), pole(true), 0.0), Error);
}

TEST_CASE("separation of the hull from the domain") {
  SUBCASE("antipodal pair") {
    const auto L = poles_cloud();
    std::vector<SphericalCap> caps;
    for (int k = 0; k < 24; ++k) caps.push_back(base_cap(on_circle(k * std::numbers::pi / 12), 0.1, L));
    const auto F = DomeFamily::from_caps(caps);
    const auto r = separation_check(F, L, 50, 0.0, 1);
    CHECK(r.passed);
    CHECK(r.witnesses.empty());
    // The diameter's directions are the limit points themselves.
    CHECK(r.checked_points == 0);
    for (const auto& c : caps) CHECK(height(F, c.center()).f > 0.0);
  }
  SUBCASE("single-point cloud") {
    const auto L = LimitSetCloud::from_points({pole(true)}, 0.0);
    const auto F = DomeFamily::from_caps({SphericalCap(pole(false), 0.3)});
    const auto r = separation_check(F, L, 10, 0.0, 1);
    CHECK(r.passed);
    CHECK(r.geodesics == 0);
  }
  SUBCASE("domes placed over the limit set are caught") {
    const auto g = reference_schottky();
    const auto L = sample_limit_set(g, 3);
    // A cap over a cluster of limit points is not a legitimate dome.
    const auto F = DomeFamily::from_caps({SphericalCap(g.cap_pairs()[0].target.center(), 0.3)});
    const auto r = separation_check(F, L, 200, 0.0, 2);
    CHECK_FALSE(r.passed);
    CHECK_FALSE(r.witnesses.empty());
  }
}

TEST_CASE("graph volume") {
  SUBCASE("translation group on a bounded patch") {
    Vec h(2);
    h << 1.0, 0.0;
    const auto g = GroupPresentation::cyclic(MobiusMap::translation(h));
    const auto L = sample_limit_set(g, 1);
    const SphericalCap patch(pole(false), 0.6);
    const auto mesh = seed_mesh(cap_region(SphericalCap(pole(false), 0.9)), L, SeedOptions{});
    const auto F = propagate(base_caps(mesh.points, 0.1, L), g, 2, L, 0.1);
    const auto R = cap_region(patch);
    const auto mc = graph_volume(F, L, R, 40000, 5);
    CHECK(mc.in_region > 1000);

    // Midpoint rule in polar coordinates about the south pole.
    const int na = 240, nb = 480;
    double quad = 0.0;
    for (int i = 0; i < na; ++i) {
      const double alpha = patch.angle() * (i + 0.5) / na;
      for (int j = 0; j < nb; ++j) {
        const double beta = 2 * std::numbers::pi * (j + 0.5) / nb;
        Vec v(3);
        v << std::sin(alpha) * std::cos(beta), std::sin(alpha) * std::sin(beta), -std::cos(alpha);
        quad += graph_area_density(F, SpherePoint::normalized(v)) * std::sin(alpha);
      }
    }
    quad *= (patch.angle() / na) * (2 * std::numbers::pi / nb);
    MESSAGE("Monte-Carlo " << mc.value << " +- " << mc.stderr_ << ", quadrature " << quad);
    CHECK(std::abs(mc.value - quad) < 2.0 * mc.stderr_);

    const auto smaller = graph_volume(F, L, cap_region(SphericalCap(pole(false), 0.4)), 40000, 5);
    CHECK(smaller.value < mc.value);
  }
  SUBCASE("region inside the resolution band") {
    const auto g = reference_schottky();
    const auto L = sample_limit_set(g, 2);
    const auto F = DomeFamily::from_caps({SphericalCap(pole(true), 0.3)});
    CHECK_THROWS_AS(graph_volume(F, L, cap_region(g.cap_pairs()[0].target), 2000, 1), Error);
  }
}

TEST_CASE("reference Schottky graph") {
  const auto g = reference_schottky();
  const auto L = sample_limit_set(g, 6);
  const auto region = fundamental_region(g);
  const auto mesh = seed_mesh(region, L, SeedOptions{});
  const auto seeds = base_caps(mesh.points, 0.1, L);
  const auto F = propagate(seeds, g, 3, L, 0.1);
  CHECK(F.shape().max_ratio <= 0.5);
  CHECK(F.shape().min_ratio > 0.0);
  CHECK(F.shape().unverified == 0);

  auto rng = make_rng(70);
  std::vector<SpherePoint> xs;
  for (int i = 0; i < 3000; ++i) xs.push_back(random_sphere_point(rng, 2));
  const auto band = distance_band(F, L, xs);
  CHECK(band.used > 2900);
  CHECK(band.c1 > 0.0);
  CHECK(band.ratio() < 20.0);
  for (const auto& x : xs) {
    if (const auto h = try_height(F, x)) {
      CHECK(h->f > 0.0);
      CHECK(h->f < 1.0);
    }
  }

  const auto gen = check_invariance(F, g, {1}, xs, 1e-9);
  MESSAGE("Schottky invariance: max " << gen.max_deviation << ", matched " << gen.matched_max_deviation);
  CHECK(gen.within_tolerance);

  const auto sep = separation_check(F, L, 300, L.resolution(), 4);
  CHECK(sep.passed);
  CHECK(sep.checked_points > 0);

  std::ostringstream os;
  write_graph_csv(os, F, {xs.begin(), xs.begin() + 5});
  const std::string csv = os.str();
  CHECK(csv.rfind("x0,x1,x2,f\r\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}
