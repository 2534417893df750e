#include "kleinlab/limitset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "kleinlab/error.hpp"
#include "kleinlab/format.hpp"
#include "kleinlab/simd/kernels.hpp"
#include "kleinlab/stats.hpp"

namespace kleinlab {

namespace {

std::vector<Vec> as_vecs(const std::vector<SpherePoint>& pts) {
  std::vector<Vec> v;
  v.reserve(pts.size());
  for (const auto& p : pts) v.push_back(p.vec());
  return v;
}

}  // namespace

LimitSetCloud LimitSetCloud::from_points(std::vector<SpherePoint> points, std::optional<double> resolution,
                                         std::size_t depth) {
  LimitSetCloud c;
  if (!points.empty()) {
    c.n_ = points.front().sphere_dim();
    for (const auto& p : points) require_same_dim(p.sphere_dim(), c.n_, "LimitSetCloud");
  }
  if (resolution && !(*resolution >= 0.0)) throw Error(ErrorCode::domain, "LimitSetCloud: negative resolution");
  c.points_ = std::move(points);
  c.resolution_ = resolution;
  c.depth_ = depth;
  c.index_ = KdTree(as_vecs(c.points_));
  for (std::size_t i = 0; i < c.points_.size(); ++i) {
    for (std::size_t j = i + 1; j < c.points_.size(); ++j) {
      c.diameter_ = std::max(c.diameter_, chord(c.points_[i], c.points_[j]));
    }
  }
  return c;
}

double LimitSetCloud::resolution() const {
  if (!resolution_) throw Error(ErrorCode::uncertified, "LimitSetCloud: resolution is not certified");
  return *resolution_;
}

double LimitSetCloud::diameter() const { return diameter_; }

KdTree::Hit LimitSetCloud::nearest(const SpherePoint& p) const {
  if (empty()) throw Error(ErrorCode::domain, "LimitSetCloud: empty cloud");
  require_same_dim(p.sphere_dim(), n_, "LimitSetCloud::nearest");
  return index_.nearest(p.vec());
}

std::vector<SphericalCap> nested_caps(const GroupPresentation& g, std::size_t depth) {
  if (g.kind() != GroupKind::schottky) throw Error(ErrorCode::domain, "nested_caps: not a Schottky group");
  const auto els = enumerate_elements(g, depth);
  std::vector<SphericalCap> out;
  for (const auto& e : els) {
    if (e.word.size() != depth || depth == 0) continue;
    const ExtendedMap prefix(els[e.parent].map);
    out.push_back(map_cap(prefix, g.letter_cap(e.word.back())));
  }
  return out;
}

LimitSetCloud sample_limit_set(const GroupPresentation& g, std::size_t depth, const std::vector<ExtPoint>& seeds) {
  if (depth < 1) throw Error(ErrorCode::domain, "sample_limit_set: depth must be >= 1");
  std::vector<SpherePoint> pts;

  if (g.kind() == GroupKind::schottky) {
    std::unordered_map<int, SpherePoint> attract;
    for (int l : g.alphabet()) {
      const auto cl = classify(g.letter(l));
      if (cl.kind != MobiusClass::loxodromic) {
        throw Error(ErrorCode::invalid_group, "sample_limit_set: Schottky generator is not loxodromic");
      }
      attract.emplace(l, cl.fixed_points[1]);
    }
    const auto els = enumerate_elements(g, depth);
    double res = 0.0;
    for (const auto& e : els) {
      if (e.word.size() != depth) continue;
      const MobiusMap& prefix = els[e.parent].map;
      const int last = e.word.back();
      pts.push_back(apply_sphere(prefix, attract.at(last)));
      res = std::max(res, map_cap(ExtendedMap(prefix), g.letter_cap(last)).chordal_diameter());
    }
    auto cloud = LimitSetCloud::from_points(std::move(pts), res, depth);
    cloud.few_points_ = g.rank() < 2;
    return cloud;
  }

  if (g.kind() == GroupKind::cyclic) {
    const auto cl = classify(g.generator(0));
    auto cloud = LimitSetCloud::from_points(cl.fixed_points, 0.0, depth);
    cloud.few_points_ = true;
    return cloud;
  }

  if (seeds.empty()) throw Error(ErrorCode::domain, "sample_limit_set: custom groups need at least one seed");
  for (const auto& e : enumerate_elements(g, depth)) {
    if (e.word.size() != depth) continue;
    for (const auto& s : seeds) pts.push_back(stereo_unproject(e.map.apply(s)));
  }
  // Drop exact repeats (finite or non-free groups revisit points).
  const KdTree tree(as_vecs(pts));
  std::vector<SpherePoint> uniq;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool first = true;
    for (std::size_t j : tree.within(pts[i].vec(), 1e-14)) first = first && j >= i;
    if (first) uniq.push_back(pts[i]);
  }
  auto cloud = LimitSetCloud::from_points(std::move(uniq), std::nullopt, depth);
  cloud.few_points_ = g.is_elementary() && cloud.size() < 3;
  return cloud;
}

DistanceBounds dist_to_limit_set(const SpherePoint& x, const LimitSetCloud& L) {
  DistanceBounds b;
  b.upper = L.nearest(x).distance;
  b.certified = L.certified();
  b.lower = b.certified ? std::max(0.0, b.upper - L.resolution()) : 0.0;
  return b;
}

DistanceBounds dist_to_limit_set(const ExtPoint& x, const LimitSetCloud& L) {
  return dist_to_limit_set(stereo_unproject(x), L);
}

std::size_t greedy_net_size(const std::vector<SpherePoint>& pts, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::domain, "greedy_net_size: scale must be positive");
  if (pts.empty()) return 0;
  const std::size_t dim = pts.front().vec().size();
  struct Cell {
    std::vector<std::vector<double>> cols;
    std::vector<const double*> ptrs;
    std::size_t count = 0;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<long long>& k) const noexcept {
      std::size_t h = 1469598103934665603ULL;
      for (long long v : k) h = (h ^ static_cast<std::size_t>(v)) * 1099511628211ULL;
      return h;
    }
  };
  std::unordered_map<std::vector<long long>, Cell, KeyHash> cells;
  std::size_t net = 0;
  std::vector<long long> key(dim), probe(dim);
  const double r2 = eps * eps;
  for (const auto& p : pts) {
    const Vec& v = p.vec();
    for (std::size_t k = 0; k < dim; ++k) key[k] = static_cast<long long>(std::floor(v[static_cast<Eigen::Index>(k)] / eps));
    bool covered = false;
    // Scan the 3^dim neighbouring cells.
    std::size_t combos = 1;
    for (std::size_t k = 0; k < dim; ++k) combos *= 3;
    for (std::size_t c = 0; c < combos && !covered; ++c) {
      std::size_t t = c;
      for (std::size_t k = 0; k < dim; ++k) {
        probe[k] = key[k] + static_cast<long long>(t % 3) - 1;
        t /= 3;
      }
      const auto it = cells.find(probe);
      if (it == cells.end()) continue;
      const Cell& cell = it->second;
      covered = simd::any_within(simd::Columns{cell.ptrs.data(), dim, cell.count}, v.data(), r2);
    }
    if (covered) continue;
    ++net;
    Cell& cell = cells[key];
    if (cell.cols.empty()) cell.cols.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) cell.cols[k].push_back(v[static_cast<Eigen::Index>(k)]);
    ++cell.count;
    cell.ptrs.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) cell.ptrs[k] = cell.cols[k].data();
  }
  return net;
}

namespace {

double median_nn_gap(const LimitSetCloud& L) {
  const auto& pts = L.points();
  const KdTree tree(as_vecs(pts));
  std::vector<double> gaps;
  gaps.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    // Nearest other point: query a radius that grows until a neighbour appears.
    double r = 1e-15;
    for (;;) {
      const auto ids = tree.within(pts[i].vec(), r);
      double best = INFINITY;
      for (std::size_t j : ids) {
        if (j != i) best = std::min(best, chord(pts[i], pts[j]));
      }
      if (std::isfinite(best)) {
        gaps.push_back(best);
        break;
      }
      r *= 4.0;
      if (r > 4.0) break;
    }
  }
  if (gaps.empty()) return 0.0;
  std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
  return gaps[gaps.size() / 2];
}

}  // namespace

BoxDimension box_dimension(const LimitSetCloud& L, const std::vector<double>& scales) {
  BoxDimension out;
  // A single exact point (parabolic cyclic group): dimension 0, no scales.
  if (L.size() == 1 && L.certified() && L.resolution() == 0.0) {
    out.certified = true;
    return out;
  }
  if (L.size() < 2) throw Error(ErrorCode::insufficient_data, "box_dimension: need at least two points");
  out.certified = L.certified();
  const double hi = L.diameter() / 4.0;
  const double res_lo = L.certified() ? 4.0 * L.resolution() : 0.0;
  if (scales.empty()) {
    double lo;
    if (L.certified() && L.resolution() == 0.0) {
      lo = 1e-6 * hi;
    } else {
      lo = std::max(res_lo, 2.0 * median_nn_gap(L));
    }
    if (!(lo < hi)) {
      throw Error(ErrorCode::insufficient_data, "box_dimension: empty valid scale window [" + fmt17(lo) + ", " +
                                                    fmt17(hi) + "]");
    }
    constexpr int kScales = 24;
    for (int k = 0; k < kScales; ++k) {
      out.scales.push_back(std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * k / (kScales - 1)));
    }
    out.window_lo = lo;
    out.window_hi = hi;
  } else {
    for (double s : scales) {
      if (L.certified() && (s < res_lo * (1 - 1e-12) || s > hi * (1 + 1e-12))) {
        throw Error(ErrorCode::domain, "box_dimension: scale " + fmt17(s) + " outside the valid window");
      }
    }
    out.scales = scales;
    out.window_lo = *std::min_element(scales.begin(), scales.end());
    out.window_hi = *std::max_element(scales.begin(), scales.end());
  }
  std::vector<double> xs, ys;
  for (double s : out.scales) {
    const std::size_t c = greedy_net_size(L.points(), s);
    out.counts.push_back(c);
    xs.push_back(std::log(1.0 / s));
    ys.push_back(std::log(static_cast<double>(c)));
  }
  if (xs.size() < 2) throw Error(ErrorCode::insufficient_data, "box_dimension: need at least two scales");
  const LinearFit fit = fit_line(xs, ys);
  out.estimate = fit.slope;
  out.stderr_ = fit.slope_stderr;
  return out;
}

double sullivan_lambda0(double delta, std::size_t n) {
  const double nd = static_cast<double>(n);
  if (!(delta >= 0.0) || !(delta <= nd)) throw Error(ErrorCode::domain, "sullivan_lambda0: delta outside [0, n]");
  if (delta <= nd / 2.0) return nd * nd / 4.0;
  return delta * (nd - delta);
}

double distortion_ratio(const SpherePoint& x, const MobiusMap& g, const LimitSetCloud& L) {
  const SpherePoint gx = apply_sphere(g, x);
  const auto dx = dist_to_limit_set(x, L);
  const auto dgx = dist_to_limit_set(gx, L);
  const double band = L.certified() ? L.resolution() : 0.0;
  if (!(dx.upper > band) || !(dgx.upper > band)) {
    throw Error(ErrorCode::uncertified, "distortion_ratio: point within the resolution band of the cloud");
  }
  return deriv_sphere(g, x) * dx.upper / dgx.upper;
}

void write_cloud_csv(std::ostream& os, const LimitSetCloud& L) {
  const std::size_t m = L.sphere_dim() + 1;
  for (std::size_t k = 0; k < m; ++k) os << (k ? "," : "") << 'x' << k;
  os << "\r\n";
  for (const auto& p : L.points()) {
    for (std::size_t k = 0; k < m; ++k) os << (k ? "," : "") << fmt17(p[static_cast<Eigen::Index>(k)]);
    os << "\r\n";
  }
}

}  // namespace kleinlab
