#include "kleinlab/lipgraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kleinlab/error.hpp"
#include "kleinlab/format.hpp"
#include "kleinlab/random.hpp"
#include "kleinlab/simd/kernels.hpp"
#include "kleinlab/stats.hpp"

namespace kleinlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Möbius map taking `to_inf` to ∞ via a rotation of the sphere.
MobiusMap send_to_infinity(const SpherePoint& to_inf) {
  const auto m = static_cast<Eigen::Index>(to_inf.vec().size());
  const Vec north = Vec::Unit(m, m - 1);
  const Vec v = to_inf.vec() - north;
  if (v.norm() < 1e-15) return MobiusMap::identity(static_cast<std::size_t>(m - 1));
  const Vec u = v.normalized();
  return from_sphere_orthogonal(Mat::Identity(m, m) - 2.0 * u * u.transpose());
}

Word reduced_product(const Word& a, const Word& b) {
  Word w = a;
  for (int l : b) {
    if (!w.empty() && w.back() == -l) {
      w.pop_back();
    } else {
      w.push_back(l);
    }
  }
  return w;
}

Word inverse_word(const Word& w) {
  Word r(w.rbegin(), w.rend());
  for (int& l : r) l = -l;
  return r;
}

MobiusMap word_map(const GroupPresentation& g, const Word& w) {
  MobiusMap m = MobiusMap::identity(g.dim());
  for (int l : w) m = compose(m, g.letter(l));
  return m;
}

// Orthonormal basis of the tangent space at x.
Mat tangent_basis(const Vec& x) {
  const auto m = x.size();
  Eigen::HouseholderQR<Mat> qr(x);
  const Mat q = qr.householderQ();
  return q.rightCols(m - 1);
}

}  // namespace

SphereRegion fundamental_region(const GroupPresentation& g) {
  if (g.kind() == GroupKind::schottky) {
    std::vector<SphericalCap> caps;
    for (const auto& p : g.cap_pairs()) {
      caps.push_back(p.source);
      caps.push_back(p.target);
    }
    return SphereRegion{[caps](const SpherePoint& x) {
                          for (const auto& c : caps) {
                            if (c.contains(x)) return false;
                          }
                          return true;
                        },
                        "complement of the defining caps"};
  }
  if (g.kind() == GroupKind::cyclic) {
    const MobiusMap& gen = g.generator(0);
    const auto cl = classify(gen);
    if (cl.kind == MobiusClass::loxodromic) {
      const MobiusMap rot = send_to_infinity(cl.fixed_points[1]);
      const Vec y0 = rot.apply(stereo_project(cl.fixed_points[0])).coords();
      const MobiusMap delta = compose(MobiusMap::translation(-y0), rot);
      const MobiusMap h = compose(compose(delta, gen), inverse(delta));
      // h fixes 0 and ∞, so |h(y)| = λ|y|.
      const Vec probe = Vec::Unit(static_cast<Eigen::Index>(g.dim()), 0);
      const double lambda = h.apply(ExtPoint(probe)).coords().norm();
      const double lo = std::min(1.0, lambda), hi = std::max(1.0, lambda);
      return SphereRegion{[delta, lo, hi](const SpherePoint& x) {
                            const ExtPoint y = delta.apply(stereo_project(x));
                            if (y.is_infinity()) return false;
                            const double r = y.coords().norm();
                            return r >= lo && r < hi;
                          },
                          "shell between a sphere about the repelling fixed point and its image"};
    }
    if (cl.kind == MobiusClass::parabolic) {
      const MobiusMap delta = send_to_infinity(cl.fixed_points[0]);
      const MobiusMap h = compose(compose(delta, gen), inverse(delta));
      // h(y) = A y + b; the translation part is b projected on ker(A − I).
      if (h.inversion()) throw Error(ErrorCode::domain, "fundamental_region: conjugated parabolic moved infinity");
      const Mat& A = h.rotation();
      const Vec& b = h.offset();
      const auto m = A.rows();
      Eigen::JacobiSVD<Mat> svd(A - Mat::Identity(m, m), Eigen::ComputeFullU);
      Vec tau = Vec::Zero(m);
      for (Eigen::Index k = 0; k < m; ++k) {
        if (svd.singularValues()[k] < 1e-9) tau += svd.matrixU().col(k) * svd.matrixU().col(k).dot(b);
      }
      const double t2 = tau.squaredNorm();
      if (!(t2 > 0.0)) throw Error(ErrorCode::domain, "fundamental_region: parabolic without translation part");
      return SphereRegion{[delta, tau, t2](const SpherePoint& x) {
                            const ExtPoint y = delta.apply(stereo_project(x));
                            if (y.is_infinity()) return false;
                            const double s = y.coords().dot(tau);
                            return s >= 0.0 && s < t2;
                          },
                          "slab between a hyperplane through the parabolic fixed point and its image"};
    }
  }
  throw Error(ErrorCode::domain, "fundamental_region: only Schottky and cyclic loxodromic/parabolic groups");
}

SphereRegion cap_region(const SphericalCap& cap) {
  return SphereRegion{[cap](const SpherePoint& x) { return cap.contains(x); }, "cap"};
}

SphereRegion region_difference(SphereRegion a, SphereRegion b) {
  std::string d = a.description + " minus " + b.description;
  return SphereRegion{[a = std::move(a), b = std::move(b)](const SpherePoint& x) {
                        return a.contains(x) && !b.contains(x);
                      },
                      std::move(d)};
}

SphericalCap base_cap(const SpherePoint& x, double epsilon0, const LimitSetCloud& L) {
  if (!(epsilon0 > 0.0 && epsilon0 <= 0.5)) throw Error(ErrorCode::domain, "base_cap: epsilon0 must lie in (0, 1/2]");
  const auto d = dist_to_limit_set(x, L);
  if (!d.certified || !(d.lower > 0.0)) {
    throw Error(ErrorCode::uncertified, "base_cap: sample lies within the resolution band of the cloud");
  }
  return SphericalCap::from_chordal_radius(x, epsilon0 * d.lower);
}

std::vector<SphericalCap> base_caps(const std::vector<SpherePoint>& samples, double epsilon0, const LimitSetCloud& L) {
  std::vector<SphericalCap> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(base_cap(x, epsilon0, L));
  return out;
}

SeedMesh seed_mesh(const SphereRegion& region, const LimitSetCloud& L, const SeedOptions& opt) {
  if (!(opt.spacing > 0.0)) throw Error(ErrorCode::domain, "seed_mesh: spacing must be positive");
  if (opt.base_count < 1) throw Error(ErrorCode::domain, "seed_mesh: base_count must be positive");
  const std::size_t n = L.sphere_dim();
  const double area = sphere_volume(n);
  const double per_level = std::pow(2.0, static_cast<double>(n));
  auto spacing_of = [&](std::size_t count) { return std::pow(area / static_cast<double>(count), 1.0 / static_cast<double>(n)); };

  SeedMesh mesh;
  std::size_t count = opt.base_count;
  double coarser = kInf;
  for (std::size_t level = 0;; ++level) {
    const double h = spacing_of(count);
    const std::size_t next = static_cast<std::size_t>(static_cast<double>(count) * per_level);
    const bool last = next > opt.max_level_count;
    bool finer_needed = false;
    for_each_quasi_uniform(n, count, opt.seed + level, [&](const SpherePoint& x) {
      if (!region.contains(x)) return;
      const auto d = dist_to_limit_set(x, L);
      if (!d.certified || !(d.lower > 0.0)) return;
      const double target = opt.spacing * chord_to_angle(std::min(2.0, opt.epsilon0 * d.lower));
      if (target >= coarser) return;  // a coarser level covers it
      if (h <= target) {
        mesh.points.push_back(x);
      } else if (last) {
        mesh.points.push_back(x);
        ++mesh.under_resolved;
      } else {
        finer_needed = true;
      }
    });
    mesh.levels = level + 1;
    if (!finer_needed || last) break;
    coarser = h;
    count = next;
  }
  return mesh;
}

std::optional<double> dome_entry_gap(const SphericalCap& cap, const SpherePoint& x) {
  require_same_dim(cap.center().sphere_dim(), x.sphere_dim(), "dome_entry_gap");
  const double h = std::sin(0.5 * cap.angle());
  const double s = (x.vec() - cap.center().vec()).squaredNorm();
  const double vers = 2.0 * h * h;
  const double sec = 1.0 / std::cos(cap.angle());
  const double e = (vers - 0.5 * s) * sec;
  if (!(e >= simd::kBoundarySlack * (vers * sec))) return std::nullopt;
  return std::sqrt(std::max(e * (e + 2.0), 0.0)) - e;
}

std::optional<double> dome_entry_radius(const SphericalCap& cap, const SpherePoint& x) {
  const auto g = dome_entry_gap(cap, x);
  if (!g) return std::nullopt;
  return 1.0 - *g;
}

DomeFamily DomeFamily::from_caps(std::vector<SphericalCap> caps, double epsilon0) {
  DomeFamily F;
  if (!caps.empty()) F.n_ = caps.front().center().sphere_dim();
  F.words_.push_back({});
  for (std::size_t i = 0; i < caps.size(); ++i) {
    require_same_dim(caps[i].center().sphere_dim(), F.n_, "DomeFamily");
    F.origins_.push_back(CapOrigin{0, i});
  }
  F.seed_count_ = caps.size();
  F.epsilon0_ = epsilon0;
  F.caps_ = std::move(caps);
  F.index_ = CapIndex(F.caps_);
  return F;
}

DomeFamily propagate(const std::vector<SphericalCap>& seeds, const GroupPresentation& g, std::size_t max_len,
                     const LimitSetCloud& L, double epsilon0) {
  DomeFamily F;
  F.n_ = g.dim();
  F.seed_count_ = seeds.size();
  F.max_len_ = max_len;
  F.epsilon0_ = epsilon0;
  for (const auto& s : seeds) require_same_dim(s.center().sphere_dim(), F.n_, "propagate");

  const bool certified = L.certified() && !L.empty();
  const double res = certified ? L.resolution() : 0.0;
  double min_ratio = kInf, max_ratio = 0.0;

  const auto els = enumerate_elements(g, max_len);
  F.words_.reserve(els.size());
  for (std::size_t e = 0; e < els.size(); ++e) {
    F.words_.push_back(els[e].word);
    const bool ident = els[e].word.empty();
    const ExtendedMap ext(els[e].map);
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      std::optional<SphericalCap> cap;
      if (ident) {
        cap = seeds[s];
      } else {
        try {
          cap = map_cap(ext, seeds[s]);
        } catch (const Error& err) {
          if (err.code() != ErrorCode::pole && err.code() != ErrorCode::shrink_epsilon0) throw;
          throw Error(ErrorCode::shrink_epsilon0, "propagate: image of seed " + std::to_string(s) + " under '" +
                                                      to_string(els[e].word) + "' is not a cap; shrink epsilon0");
        }
      }
      if (cap->angle() < DomeFamily::kMinCapAngle) {
        ++F.dropped_;
        continue;
      }
      if (certified) {
        const double ch = cap->chordal_radius();
        const double gap = L.nearest(cap->center()).distance - ch;
        if (gap > res) {
          const double ratio = cap->chordal_diameter() / gap;
          if (ratio > 0.5) {
            throw Error(ErrorCode::shrink_epsilon0,
                        "propagate: cap of '" + to_string(els[e].word) + "' has diam/dist = " + fmt17(ratio) +
                            " > 1/2; shrink epsilon0");
          }
          min_ratio = std::min(min_ratio, ratio);
          max_ratio = std::max(max_ratio, ratio);
          ++F.shape_.verified;
        } else {
          ++F.shape_.unverified;
        }
      } else {
        ++F.shape_.unverified;
      }
      F.caps_.push_back(*cap);
      F.origins_.push_back(CapOrigin{e, s});
    }
  }
  F.shape_.min_ratio = F.shape_.verified ? min_ratio : 0.0;
  F.shape_.max_ratio = max_ratio;
  F.index_ = CapIndex(F.caps_);
  return F;
}

std::optional<Height> try_height(const DomeFamily& F, const SpherePoint& x) {
  const auto e = F.index().lowest_dome(x);
  if (!e.hit()) return std::nullopt;
  return Height{e.radius(), e.gap, e.index};
}

Height height(const DomeFamily& F, const SpherePoint& x) {
  auto h = try_height(F, x);
  if (!h) throw Error(ErrorCode::not_covered, "height: no dome lies over the point");
  return *h;
}

InvarianceResult check_invariance(const DomeFamily& F, const GroupPresentation& g, const Word& gamma,
                                  const std::vector<SpherePoint>& samples, double tol) {
  InvarianceResult r;
  const ExtendedMap ext(word_map(g, gamma));
  const Word gamma_inv = inverse_word(gamma);
  auto image_in_family = [&](const Word& prefix, std::size_t cap) {
    const Word& w = F.words()[F.origins()[cap].element];
    return reduced_product(prefix, w).size() <= F.max_len();
  };
  const bool trivial = reduced_product({}, gamma).empty();
  for (const auto& x : samples) {
    const auto hx = try_height(F, x);
    if (!hx) {
      ++r.skipped;
      continue;
    }
    if (trivial) {
      ++r.compared;
      ++r.matched;
      continue;
    }
    const BallPoint q = ext.apply(BallPoint(hx->f * x.vec()));
    const double radius = q.vec().norm();
    if (!(radius > 0.0)) {
      ++r.skipped;
      continue;
    }
    const SpherePoint u = SpherePoint::normalized(q.vec());
    const auto hu = try_height(F, u);
    if (!hu) {
      ++r.skipped;
      continue;
    }
    const double dev = std::abs(radius - hu->f);
    ++r.compared;
    r.max_deviation = std::max(r.max_deviation, dev);
    if (image_in_family(gamma, hx->cap) && image_in_family(gamma_inv, hu->cap)) {
      ++r.matched;
      r.matched_max_deviation = std::max(r.matched_max_deviation, dev);
    }
  }
  r.within_tolerance = r.matched_max_deviation <= tol;
  return r;
}

LipschitzEstimate lipschitz_estimate(const DomeFamily& F, const std::vector<SpherePoint>& samples) {
  std::vector<const SpherePoint*> pts;
  std::vector<double> f;
  for (const auto& x : samples) {
    if (const auto h = try_height(F, x)) {
      pts.push_back(&x);
      f.push_back(h->f);
    }
  }
  LipschitzEstimate est;
  est.used = pts.size();
  if (pts.size() < 2) throw Error(ErrorCode::insufficient_data, "lipschitz_estimate: fewer than two covered samples");
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double q = chord(*pts[i], *pts[j]);
      if (q > 0.0) est.constant = std::max(est.constant, std::abs(f[i] - f[j]) / q);
    }
  }
  return est;
}

BandEstimate distance_band(const DomeFamily& F, const LimitSetCloud& L, const std::vector<SpherePoint>& samples) {
  BandEstimate b;
  b.c1 = kInf;
  for (const auto& x : samples) {
    const auto h = try_height(F, x);
    const auto d = dist_to_limit_set(x, L);
    if (!h || !d.certified || !(d.lower > 0.0)) {
      ++b.skipped;
      continue;
    }
    b.c1 = std::min(b.c1, h->gap / d.lower);
    b.c2 = std::max(b.c2, h->gap / d.upper);
    ++b.used;
  }
  if (b.used == 0) throw Error(ErrorCode::insufficient_data, "distance_band: no covered certified samples");
  return b;
}

namespace {

Vec geodesic_vec(const SpherePoint& a, const SpherePoint& b, double s) {
  require_same_dim(a.sphere_dim(), b.sphere_dim(), "geodesic_point");
  const Vec diff = b.vec() - a.vec();
  const double len = diff.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::domain, "geodesic_point: endpoints coincide");
  // Point of the geodesic nearest the origin, and the hyperbolic translation
  // T_w carrying the diameter along b − a onto the geodesic.
  const Vec w = (a.vec() + b.vec()) / (2.0 + len);
  const Vec x = std::tanh(0.5 * s) * diff / len;
  const double wx = w.dot(x), w2 = w.squaredNorm(), x2 = x.squaredNorm();
  return ((1.0 + 2.0 * wx + x2) * w + (1.0 - w2) * x) / (1.0 + 2.0 * wx + w2 * x2);
}

}  // namespace

BallPoint geodesic_point(const SpherePoint& a, const SpherePoint& b, double s) { return BallPoint(geodesic_vec(a, b, s)); }

SeparationResult separation_check(const DomeFamily& F, const LimitSetCloud& L, std::size_t trials, double tol,
                                  std::uint64_t seed) {
  SeparationResult r;
  if (L.size() < 2) return r;
  auto rng = make_rng(seed, 0x5e9);
  std::uniform_int_distribution<std::size_t> pick(0, L.size() - 1);
  constexpr int kSteps = 41;
  constexpr double kSpan = 12.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::size_t i = pick(rng), j = pick(rng);
    while (j == i) j = pick(rng);
    ++r.geodesics;
    for (int k = 0; k < kSteps; ++k) {
      const double s = -kSpan + 2.0 * kSpan * k / (kSteps - 1);
      const Vec p = geodesic_vec(L.points()[i], L.points()[j], s);
      const double radius = p.norm();
      // Far out the point rounds onto the sphere; nothing left to test there.
      if (!(radius > 0.0) || !(p.squaredNorm() < 1.0)) continue;
      const auto h = try_height(F, SpherePoint::normalized(p));
      if (!h) continue;
      ++r.checked_points;
      if (radius > h->f + tol) {
        r.passed = false;
        if (r.witnesses.size() < 16) r.witnesses.push_back(SeparationWitness{BallPoint(p), h->f});
      }
    }
  }
  return r;
}

double graph_area_density(const DomeFamily& F, const SpherePoint& x) {
  const Height h = height(F, x);
  const auto n = static_cast<Eigen::Index>(F.sphere_dim());
  const double step = 1e-4 * F.caps()[h.cap].angle();
  const Mat basis = tangent_basis(x.vec());
  double grad2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec e = basis.col(i);
    const SpherePoint xp = SpherePoint::normalized(std::cos(step) * x.vec() + std::sin(step) * e);
    const SpherePoint xm = SpherePoint::normalized(std::cos(step) * x.vec() - std::sin(step) * e);
    const double d = (height(F, xp).gap - height(F, xm).gap) / (2.0 * step);
    grad2 += d * d;
  }
  const double nn = static_cast<double>(n);
  const double conformal = 2.0 / (h.gap * (2.0 - h.gap));
  return std::pow(h.f * conformal, nn) * std::sqrt(1.0 + grad2 / (h.f * h.f));
}

VolumeEstimate graph_volume(const DomeFamily& F, const LimitSetCloud& L, const SphereRegion& region,
                            std::size_t samples, std::uint64_t seed) {
  if (samples < 2) throw Error(ErrorCode::insufficient_data, "graph_volume: need at least two samples");
  auto rng = make_rng(seed, 0x701);
  MeanAccumulator acc;
  VolumeEstimate v;
  v.samples = samples;
  for (std::size_t i = 0; i < samples; ++i) {
    const SpherePoint x = random_sphere_point(rng, F.sphere_dim());
    double value = 0.0;
    if (region.contains(x)) {
      const auto d = dist_to_limit_set(x, L);
      if (!(d.lower > 0.0)) {
        throw Error(ErrorCode::uncertified, "graph_volume: the region meets the resolution band of the cloud");
      }
      value = graph_area_density(F, x);
      ++v.in_region;
    }
    acc.add(value);
  }
  const double area = sphere_volume(F.sphere_dim());
  v.value = area * acc.mean();
  v.stderr_ = area * acc.stderr_of_mean();
  return v;
}

VolumeTrend volume_trend(const std::vector<SphericalCap>& seeds, const GroupPresentation& g, const LimitSetCloud& L,
                         const SphereRegion& region, const std::vector<std::size_t>& depths, std::size_t samples,
                         std::uint64_t seed) {
  VolumeTrend t;
  for (std::size_t d : depths) {
    const DomeFamily F = propagate(seeds, g, d, L, 0.0);
    t.depths.push_back(d);
    t.estimates.push_back(graph_volume(F, L, region, samples, seed));
    if (t.estimates.size() > 1) {
      const double prev = t.estimates[t.estimates.size() - 2].value;
      t.relative_changes.push_back(std::abs(t.estimates.back().value - prev) / prev);
    }
  }
  return t;
}

void write_graph_csv(std::ostream& os, const DomeFamily& F, const std::vector<SpherePoint>& samples) {
  const std::size_t m = F.sphere_dim() + 1;
  for (std::size_t k = 0; k < m; ++k) os << 'x' << k << ',';
  os << "f\r\n";
  for (const auto& x : samples) {
    const auto h = try_height(F, x);
    if (!h) continue;
    for (std::size_t k = 0; k < m; ++k) os << fmt17(x[static_cast<Eigen::Index>(k)]) << ',';
    os << fmt17(h->f) << "\r\n";
  }
}

}  // namespace kleinlab
