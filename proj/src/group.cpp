#include "kleinlab/group.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "kleinlab/error.hpp"
#include "kleinlab/random.hpp"
#include "kleinlab/spatial.hpp"

namespace kleinlab {

const char* to_string(GroupKind k) noexcept {
  switch (k) {
    case GroupKind::schottky: return "schottky";
    case GroupKind::cyclic: return "cyclic";
    case GroupKind::custom: return "custom";
  }
  return "unknown";
}

std::string to_string(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) s += ' ';
    s += (w[i] > 0 ? "g" : "G") + std::to_string(std::abs(w[i]));
  }
  return s;
}

namespace {

// A cap not containing the north pole as a Euclidean ball of R^n.
struct EuclidBall {
  Vec center;
  double radius;
};

EuclidBall cap_to_ball(const SphericalCap& cap) {
  const Vec& c = cap.center().vec();
  const auto n = c.size() - 1;
  const double alpha = c[n] - std::cos(cap.angle());
  if (!(alpha < 0.0)) throw Error(ErrorCode::domain, "cap_to_ball: cap contains the north pole");
  return EuclidBall{-c.head(n) / alpha, std::sin(cap.angle()) / -alpha};
}

MobiusMap pairing_map(const EuclidBall& a, const EuclidBall& b) {
  // x ↦ m_B + s_A s_B R ι(x − m_A): inversion in A followed by a similarity
  // A → B; the reflection R keeps the map orientation preserving.
  const auto n = a.center.size();
  Vec u = b.center - a.center;
  if (u.norm() < 1e-14) {
    u = Vec::Zero(n);
    u[0] = 1.0;
  }
  u.normalize();
  const Mat R = Mat::Identity(n, n) - 2.0 * u * u.transpose();
  return MobiusMap(true, a.center, a.radius * b.radius, R, b.center);
}

// Rotation of R^{n+1} taking unit vector p to the north pole.
Mat rotation_to_north(const Vec& p) {
  const auto m = p.size();
  Vec north = Vec::Zero(m);
  north[m - 1] = 1.0;
  const Vec v = p - north;
  if (v.norm() < 1e-14) return Mat::Identity(m, m);
  // A reflection; orientation is irrelevant for relabelling the caps.
  return Mat::Identity(m, m) - 2.0 * v * v.transpose() / v.squaredNorm();
}

double clearance(const std::vector<SphericalCap>& caps, const SpherePoint& p) {
  double best = std::numbers::pi;
  for (const auto& c : caps) best = std::min(best, angular_distance(c.center(), p) - c.angle());
  return best;
}

}  // namespace

const MobiusMap& GroupPresentation::letter(int l) const {
  if (l == 0 || static_cast<std::size_t>(std::abs(l)) > gens_.size()) {
    throw Error(ErrorCode::domain, "GroupPresentation::letter: no such generator");
  }
  const auto i = static_cast<std::size_t>(std::abs(l)) - 1;
  return l > 0 ? gens_[i] : invs_[i];
}

const SphericalCap& GroupPresentation::letter_cap(int l) const {
  if (kind_ != GroupKind::schottky) throw Error(ErrorCode::domain, "letter_cap: not a Schottky group");
  const auto i = static_cast<std::size_t>(std::abs(l)) - 1;
  if (l == 0 || i >= pairs_.size()) throw Error(ErrorCode::domain, "letter_cap: no such generator");
  return l > 0 ? pairs_[i].target : pairs_[i].source;
}

void GroupPresentation::finish() {
  alphabet_.clear();
  for (std::size_t i = 1; i <= gens_.size(); ++i) {
    alphabet_.push_back(static_cast<int>(i));
    alphabet_.push_back(-static_cast<int>(i));
  }
  if (kind_ == GroupKind::schottky) {
    elementary_ = gens_.size() < 2;
    return;
  }
  if (kind_ == GroupKind::cyclic) {
    elementary_ = true;
    return;
  }
  // Look for two loxodromics with different fixed-point pairs among words of
  // length ≤ 2.
  std::vector<Classification> lox;
  for (int a : alphabet_) {
    std::vector<MobiusMap> cands{letter(a)};
    for (int b : alphabet_) {
      if (b != -a) cands.push_back(compose(letter(a), letter(b)));
    }
    for (const auto& m : cands) {
      if (m.is_identity()) continue;
      try {
        auto c = classify(m);
        if (c.kind == MobiusClass::loxodromic) lox.push_back(std::move(c));
      } catch (const Error&) {
      }
    }
  }
  elementary_ = true;
  for (std::size_t i = 0; i < lox.size() && elementary_; ++i) {
    for (std::size_t j = i + 1; j < lox.size(); ++j) {
      const auto& p = lox[i].fixed_points;
      const auto& q = lox[j].fixed_points;
      const double same = std::max(chord(p[0], q[0]), chord(p[1], q[1]));
      const double swapped = std::max(chord(p[0], q[1]), chord(p[1], q[0]));
      if (std::min(same, swapped) > 1e-6) {
        elementary_ = false;
        break;
      }
    }
  }
}

GroupPresentation GroupPresentation::schottky(const std::vector<CapPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::invalid_group, "schottky: no cap pairs");
  std::vector<SphericalCap> caps;
  for (const auto& p : pairs) {
    caps.push_back(p.source);
    caps.push_back(p.target);
  }
  const std::size_t n = caps.front().center().sphere_dim();
  for (const auto& c : caps) require_same_dim(c.center().sphere_dim(), n, "schottky");
  auto name = [](std::size_t k) {
    return "cap " + std::to_string(k / 2 + 1) + (k % 2 ? "b" : "a");
  };
  for (std::size_t i = 0; i < caps.size(); ++i) {
    for (std::size_t j = i + 1; j < caps.size(); ++j) {
      const double gap = angular_distance(caps[i].center(), caps[j].center()) - caps[i].angle() - caps[j].angle();
      if (!(gap > 1e-12)) {
        throw Error(ErrorCode::invalid_group, "schottky: closures of " + name(i) + " and " + name(j) +
                                                  (gap > -1e-12 ? " are tangent" : " overlap"));
      }
    }
  }

  // Work in a rotated frame whose north pole is well clear of every cap.
  Vec north = Vec::Zero(static_cast<Eigen::Index>(n + 1));
  north[static_cast<Eigen::Index>(n)] = 1.0;
  Mat Q = Mat::Identity(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>(n + 1));
  if (clearance(caps, SpherePoint(north)) < 0.05) {
    SpherePoint best(north);
    double best_c = -1.0;
    for (const auto& p : quasi_uniform_sphere(n, 512, 7)) {
      const double c = clearance(caps, p);
      if (c > best_c) best_c = c, best = p;
    }
    Q = rotation_to_north(best.vec());
  }
  const bool rotated = !Q.isIdentity(0.0);
  std::optional<MobiusMap> phi, phi_inv;
  if (rotated) {
    phi = from_sphere_orthogonal(Q);
    phi_inv = inverse(*phi);
  }
  auto rotate_cap = [&](const SphericalCap& c) {
    return SphericalCap(SpherePoint::normalized(Q * c.center().vec()), c.angle());
  };

  GroupPresentation g;
  g.dim_ = n;
  g.kind_ = GroupKind::schottky;
  g.pairs_ = pairs;
  for (const auto& p : pairs) {
    MobiusMap m = pairing_map(cap_to_ball(rotate_cap(p.source)), cap_to_ball(rotate_cap(p.target)));
    if (rotated) m = compose(*phi_inv, compose(m, *phi));
    g.invs_.push_back(inverse(m));
    g.gens_.push_back(std::move(m));
  }

  // Ping-pong sample: the boundary of every cap other than source_i lands in target_i.
  auto rng = make_rng(0x5c077);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (std::size_t k = 0; k < caps.size(); ++k) {
      if (k == 2 * i) continue;
      for (int t = 0; t < 16; ++t) {
        const Vec c = caps[k].center().vec();
        Vec dir = random_normal(rng, n + 1);
        dir -= dir.dot(c) * c;
        const SpherePoint b =
            SpherePoint::normalized(std::cos(caps[k].angle()) * c + std::sin(caps[k].angle()) * dir.normalized());
        if (!pairs[i].target.contains(apply_sphere(g.gens_[i], b), 1e-9)) {
          throw Error(ErrorCode::invalid_group, "schottky: ping-pong check failed for generator " +
                                                    std::to_string(i + 1) + " on " + name(k));
        }
      }
    }
  }
  g.finish();
  return g;
}

GroupPresentation GroupPresentation::cyclic(const MobiusMap& m) {
  GroupPresentation g;
  g.dim_ = m.dim();
  g.kind_ = GroupKind::cyclic;
  g.gens_.push_back(m);
  g.invs_.push_back(inverse(m));
  g.finish();
  return g;
}

GroupPresentation GroupPresentation::custom(const std::vector<MobiusMap>& generators,
                                            const std::vector<std::optional<MobiusMap>>& inverses) {
  if (generators.empty()) throw Error(ErrorCode::invalid_group, "custom: no generators");
  if (!inverses.empty() && inverses.size() != generators.size()) {
    throw Error(ErrorCode::invalid_group, "custom: inverse list length differs from generator list");
  }
  GroupPresentation g;
  g.dim_ = generators.front().dim();
  g.kind_ = GroupKind::custom;
  for (std::size_t i = 0; i < generators.size(); ++i) {
    require_same_dim(generators[i].dim(), g.dim_, "custom");
    g.gens_.push_back(generators[i]);
    if (!inverses.empty() && inverses[i]) {
      if (!compose(generators[i], *inverses[i]).is_identity(MobiusMap::kIdentityTolerance)) {
        throw Error(ErrorCode::invalid_group,
                    "custom: generator " + std::to_string(i + 1) + " and its declared inverse do not compose to the identity");
      }
      g.invs_.push_back(*inverses[i]);
    } else {
      g.invs_.push_back(inverse(generators[i]));
    }
  }
  g.finish();
  return g;
}

GroupPresentation GroupPresentation::conjugated(const MobiusMap& delta) const {
  const MobiusMap dinv = inverse(delta);
  std::vector<MobiusMap> gens;
  for (const auto& m : gens_) gens.push_back(compose(delta, compose(m, dinv)));
  GroupPresentation g = custom(gens);
  if (kind_ == GroupKind::schottky) {
    // Carry the caps along when their images are still caps.
    try {
      const ExtendedMap ext(delta);
      std::vector<CapPair> pairs;
      for (const auto& p : pairs_) pairs.push_back(CapPair{map_cap(ext, p.source), map_cap(ext, p.target)});
      g.pairs_ = std::move(pairs);
      g.kind_ = GroupKind::schottky;
    } catch (const Error&) {
    }
  } else {
    g.kind_ = kind_;
  }
  g.finish();
  return g;
}

GroupPresentation reference_schottky(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::domain, "reference_schottky: needs n >= 2");
  const auto m = static_cast<Eigen::Index>(n + 1);
  auto e = [&](Eigen::Index i, double s) {
    Vec v = Vec::Zero(m);
    v[i] = s;
    return SphericalCap::from_chordal_radius(SpherePoint(v), 0.1);
  };
  return GroupPresentation::schottky({CapPair{e(0, 1.0), e(0, -1.0)}, CapPair{e(1, 1.0), e(1, -1.0)}});
}

namespace {

// Probe used to bucket elements: γ̂(0) in the ball model, via the half-space.
Vec probe_of(const MobiusMap& m) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  Vec h = Vec::Zero(n + 1);
  h[n] = 1.0;
  return halfspace_to_ball(*lift(m).apply_finite(h));
}

struct VecHash {
  std::size_t operator()(const std::vector<long long>& k) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (long long v : k) h = (h ^ static_cast<std::size_t>(v)) * 0x100000001b3ULL;
    return h;
  }
};

class ElementBuckets {
 public:
  static constexpr double kCell = 1e-6;
  static constexpr double kSlack = 1e-8;

  // Candidates whose probe may lie within kSlack of p.
  std::vector<std::size_t> candidates(const Vec& p) const {
    std::vector<std::size_t> out;
    std::vector<std::vector<long long>> keys{{}};
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      const auto lo = static_cast<long long>(std::floor((p[k] - kSlack) / kCell));
      const auto hi = static_cast<long long>(std::floor((p[k] + kSlack) / kCell));
      std::vector<std::vector<long long>> next;
      for (auto& key : keys) {
        for (long long c = lo; c <= hi; ++c) {
          auto k2 = key;
          k2.push_back(c);
          next.push_back(std::move(k2));
        }
      }
      keys = std::move(next);
    }
    for (const auto& key : keys) {
      const auto it = map_.find(key);
      if (it != map_.end()) out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
  }

  void insert(const Vec& p, std::size_t idx) {
    std::vector<long long> key;
    for (Eigen::Index k = 0; k < p.size(); ++k) key.push_back(static_cast<long long>(std::floor(p[k] / kCell)));
    map_[key].push_back(idx);
  }

 private:
  std::unordered_map<std::vector<long long>, std::vector<std::size_t>, VecHash> map_;
};

}  // namespace

std::vector<Element> enumerate_elements(const GroupPresentation& g, std::size_t max_len) {
  std::vector<Element> out;
  out.push_back(Element{{}, MobiusMap::identity(g.dim()), 0});
  ElementBuckets buckets;
  buckets.insert(probe_of(out[0].map), 0);
  std::size_t level_begin = 0, level_end = 1;
  for (std::size_t len = 1; len <= max_len; ++len) {
    for (std::size_t p = level_begin; p < level_end; ++p) {
      for (int l : g.alphabet()) {
        if (!out[p].word.empty() && out[p].word.back() == -l) continue;
        MobiusMap m = compose(out[p].map, g.letter(l));
        const Vec probe = probe_of(m);
        bool dup = false;
        for (std::size_t c : buckets.candidates(probe)) {
          if (compose(inverse(out[c].map), m).is_identity()) {
            if (g.kind() == GroupKind::schottky) {
              Word w = out[p].word;
              w.push_back(l);
              throw Error(ErrorCode::collision, "enumerate_elements: words '" + to_string(out[c].word) + "' and '" +
                                                    to_string(w) + "' give the same element");
            }
            dup = true;
            break;
          }
        }
        if (dup) continue;
        Word w = out[p].word;
        w.push_back(l);
        buckets.insert(probe, out.size());
        out.push_back(Element{std::move(w), std::move(m), p});
      }
    }
    level_begin = level_end;
    level_end = out.size();
    if (level_begin == level_end) break;  // finite group exhausted
  }
  return out;
}

std::vector<ExtPoint> orbit(const GroupPresentation& g, const ExtPoint& base, std::size_t max_len,
                            double tolerance) {
  require_same_dim(base.dim(), g.dim(), "orbit");
  std::vector<ExtPoint> pts;
  std::vector<Vec> sphere;
  for (const auto& e : enumerate_elements(g, max_len)) {
    ExtPoint p = e.map.apply(base);
    sphere.push_back(stereo_unproject(p).vec());
    pts.push_back(std::move(p));
  }
  const KdTree tree(sphere);
  std::vector<ExtPoint> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool first = true;
    for (std::size_t j : tree.within(sphere[i], tolerance)) {
      if (j < i) {
        first = false;
        break;
      }
    }
    if (first) out.push_back(pts[i]);
  }
  return out;
}

double displacement(const BallPoint& x, const MobiusMap& g) {
  require_same_dim(x.ambient_dim(), g.dim() + 1, "displacement");
  const Vec h = ball_to_halfspace(x.vec());
  const auto img = lift(g).apply_finite(h);
  if (!img) throw Error(ErrorCode::pole, "displacement: pole in the half-space");
  return halfspace_distance(h, *img);
}

OrbitProfile orbit_profile(const GroupPresentation& g, std::size_t max_len) {
  OrbitProfile p;
  p.max_len = max_len;
  p.horizon = std::numeric_limits<double>::infinity();
  const BallPoint o = BallPoint::origin(g.dim() + 1);
  for (const auto& e : enumerate_elements(g, max_len)) {
    const double d = displacement(o, e.map);
    p.distances.push_back(d);
    if (e.word.size() == max_len) p.horizon = std::min(p.horizon, d);
  }
  // Finite groups exhaust before max_len: every count is exact.
  std::sort(p.distances.begin(), p.distances.end());
  return p;
}

OrbitCount orbit_count(const OrbitProfile& p, double radius) {
  if (!(radius >= 0.0)) throw Error(ErrorCode::domain, "orbit_count: R must be >= 0");
  OrbitCount c;
  c.count = static_cast<std::size_t>(std::upper_bound(p.distances.begin(), p.distances.end(), radius) -
                                     p.distances.begin());
  c.horizon = p.horizon;
  c.reliable = radius <= p.horizon;
  return c;
}

OrbitCount orbit_count(const GroupPresentation& g, double radius, std::size_t max_len) {
  return orbit_count(orbit_profile(g, max_len), radius);
}

double poincare_series(const OrbitProfile& p, double s) {
  if (!(s >= 0.0)) throw Error(ErrorCode::domain, "poincare_series: s must be >= 0");
  // Sum smallest terms first.
  double sum = 0.0;
  for (auto it = p.distances.rbegin(); it != p.distances.rend(); ++it) sum += std::exp(-s * *it);
  return sum;
}

double poincare_series(const GroupPresentation& g, double s, std::size_t max_len) {
  return poincare_series(orbit_profile(g, max_len), s);
}

ExponentEstimate critical_exponent(const OrbitProfile& p, bool elementary) {
  ExponentEstimate est;
  est.elementary = elementary;
  if (elementary) return est;
  if (p.distances.size() < 10) {
    throw Error(ErrorCode::insufficient_data, "critical_exponent: fewer than 10 enumerated elements");
  }
  est.r_min = p.distances[9];
  est.r_max = std::isfinite(p.horizon) ? p.horizon : p.distances.back();
  constexpr int kGrid = 32;
  std::vector<double> xs, ys;
  std::size_t distinct = 0;
  std::size_t last = 0;
  if (est.r_max > est.r_min) {
    for (int k = 0; k < kGrid; ++k) {
      const double r = est.r_min + (est.r_max - est.r_min) * k / (kGrid - 1);
      const std::size_t n = orbit_count(p, r).count;
      if (n != last) ++distinct;
      last = n;
      xs.push_back(r);
      ys.push_back(std::log(static_cast<double>(n)));
    }
  }
  if (distinct < 5) {
    throw Error(ErrorCode::insufficient_data,
                "critical_exponent: fewer than 5 usable R samples below the truncation horizon");
  }
  const LinearFit fit = fit_line(xs, ys);
  est.delta = fit.slope;
  est.stderr_ = fit.slope_stderr;
  est.samples = distinct;
  return est;
}

ExponentEstimate critical_exponent(const GroupPresentation& g, std::size_t max_len) {
  if (g.is_elementary()) return critical_exponent(OrbitProfile{}, true);
  return critical_exponent(orbit_profile(g, max_len), false);
}

MargulisResult margulis_region_test(const BallPoint& x, const GroupPresentation& g, double epsilon,
                                    std::size_t max_len) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::domain, "margulis_region_test: epsilon must be positive");
  MargulisResult r;
  r.min_displacement = std::numeric_limits<double>::infinity();
  r.horizon = std::numeric_limits<double>::infinity();
  const BallPoint o = BallPoint::origin(g.dim() + 1);
  for (const auto& e : enumerate_elements(g, max_len)) {
    if (e.word.empty()) continue;
    r.min_displacement = std::min(r.min_displacement, displacement(x, e.map));
    if (e.word.size() == max_len) r.horizon = std::min(r.horizon, displacement(o, e.map));
  }
  r.inside = r.min_displacement < epsilon;
  return r;
}

}  // namespace kleinlab
