#include "kleinlab/mobius.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "kleinlab/error.hpp"

namespace kleinlab {

namespace {

Mat nearest_orthogonal(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace

MobiusMap::MobiusMap(bool inversion, Vec a, double r, Mat rotation, Vec b)
    : inversion_(inversion), a_(std::move(a)), r_(r), A_(std::move(rotation)), b_(std::move(b)) {
  const auto n = b_.size();
  if (n < 1) throw Error(ErrorCode::domain, "MobiusMap: dimension must be >= 1");
  if (a_.size() != n || A_.rows() != n || A_.cols() != n) {
    throw Error(ErrorCode::dimension_mismatch, "MobiusMap: inconsistent field dimensions");
  }
  if (!(r_ > 0.0) || !std::isfinite(r_)) throw Error(ErrorCode::domain, "MobiusMap: scale must be positive");
  if (!a_.allFinite() || !b_.allFinite() || !A_.allFinite()) {
    throw Error(ErrorCode::domain, "MobiusMap: non-finite field");
  }
  const double orth = (A_.transpose() * A_ - Mat::Identity(n, n)).norm();
  if (orth > kOrthogonalityTolerance) {
    throw Error(ErrorCode::domain, "MobiusMap: rotation is not orthogonal (|AᵀA - I| = " +
                                       std::to_string(orth) + ")");
  }
  if (!inversion_) {
    // b + rA(x - a) = (b - rAa) + rAx
    b_ -= r_ * (A_ * a_);
    a_.setZero();
  }
}

MobiusMap MobiusMap::identity(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return MobiusMap(false, Vec::Zero(k), 1.0, Mat::Identity(k, k), Vec::Zero(k));
}

MobiusMap MobiusMap::inversion_unit(std::size_t n) {
  const auto k = static_cast<Eigen::Index>(n);
  return MobiusMap(true, Vec::Zero(k), 1.0, Mat::Identity(k, k), Vec::Zero(k));
}

MobiusMap MobiusMap::translation(const Vec& h) {
  const auto k = h.size();
  return MobiusMap(false, Vec::Zero(k), 1.0, Mat::Identity(k, k), h);
}

MobiusMap MobiusMap::dilation(std::size_t n, double factor) {
  const auto k = static_cast<Eigen::Index>(n);
  return MobiusMap(false, Vec::Zero(k), factor, Mat::Identity(k, k), Vec::Zero(k));
}

MobiusMap MobiusMap::rotation(const Mat& q) {
  const auto k = q.rows();
  return MobiusMap(false, Vec::Zero(k), 1.0, q, Vec::Zero(k));
}

MobiusMap MobiusMap::sphere_inversion(const Vec& m, double s) {
  const auto k = m.size();
  return MobiusMap(true, m, s * s, Mat::Identity(k, k), m);
}

std::optional<Vec> MobiusMap::apply_finite(const Vec& x) const {
  if (!inversion_) return Vec(b_ + r_ * (A_ * x));
  const Vec z = x - a_;
  const double z2 = z.squaredNorm();
  if (z2 == 0.0) return std::nullopt;
  Vec out = b_ + (r_ / z2) * (A_ * z);
  if (!out.allFinite()) return std::nullopt;
  return out;
}

ExtPoint MobiusMap::apply(const ExtPoint& x) const {
  require_same_dim(x.dim(), dim(), "MobiusMap::apply");
  if (x.is_infinity()) return inversion_ ? ExtPoint(b_) : ExtPoint::infinity(dim());
  auto y = apply_finite(x.coords());
  if (!y) return ExtPoint::infinity(dim());
  return ExtPoint(std::move(*y));
}

bool MobiusMap::is_identity(double tol) const {
  if (inversion_) return false;
  const auto n = static_cast<Eigen::Index>(dim());
  return std::abs(r_ - 1.0) < tol && (A_ - Mat::Identity(n, n)).norm() < tol && b_.norm() < tol;
}

MobiusMap compose(const MobiusMap& g1, const MobiusMap& g2) {
  require_same_dim(g1.dim(), g2.dim(), "compose");
  const auto n = static_cast<Eigen::Index>(g1.dim());
  const Vec zero = Vec::Zero(n);
  const Mat& A1 = g1.rotation();
  const Mat& A2 = g2.rotation();
  const double r1 = g1.scale();
  const double r2 = g2.scale();

  if (!g1.inversion() && !g2.inversion()) {
    return MobiusMap(false, zero, r1 * r2, nearest_orthogonal(A1 * A2), g1.offset() + r1 * (A1 * g2.offset()));
  }
  if (!g1.inversion()) {
    return MobiusMap(true, g2.pole(), r1 * r2, nearest_orthogonal(A1 * A2),
                     g1.offset() + r1 * (A1 * g2.offset()));
  }
  if (!g2.inversion()) {
    // y - a1 = r2 A2 (x - c) with c = A2ᵀ(a1 - b2)/r2, and ι(r2 A2 z) = A2 ι(z)/r2.
    const Vec c = A2.transpose() * (g1.pole() - g2.offset()) / r2;
    return MobiusMap(true, c, r1 / r2, nearest_orthogonal(A1 * A2), g1.offset());
  }
  // Both inversive. With w = b2 - a1 and v = A2ᵀw/r2,
  //   ι(v + ι(z)) = ι(v) + S_v ι(z + ι(v)) / |v|²,   S_v = I - 2vvᵀ/|v|².
  const Vec w = g2.offset() - g1.pole();
  const double scale_ref = 1.0 + g1.pole().norm() + g2.offset().norm();
  if (w.norm() <= 1e-13 * scale_ref) {
    // ι∘ι cancels: the composite is affine.
    const double r = r1 / r2;
    const Mat A = nearest_orthogonal(A1 * A2);
    return MobiusMap(false, zero, r, A, g1.offset() - r * (A * g2.pole()));
  }
  const Vec v = A2.transpose() * w / r2;
  const double v2 = v.squaredNorm();
  const Vec iv = v / v2;
  const Mat S = Mat::Identity(n, n) - 2.0 * v * v.transpose() / v2;
  const Mat A12 = A1 * A2;
  return MobiusMap(true, g2.pole() - iv, r1 / (r2 * v2), nearest_orthogonal(A12 * S),
                   g1.offset() + (r1 / r2) * (A12 * iv));
}

MobiusMap inverse(const MobiusMap& g) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  const Mat At = g.rotation().transpose();
  if (!g.inversion()) {
    return MobiusMap(false, Vec::Zero(n), 1.0 / g.scale(), At, -(At * g.offset()) / g.scale());
  }
  return MobiusMap(true, g.offset(), g.scale(), At, g.pole());
}

double deriv_euclid(const MobiusMap& g, const ExtPoint& x) {
  require_same_dim(x.dim(), g.dim(), "deriv_euclid");
  if (x.is_infinity()) throw Error(ErrorCode::pole, "deriv_euclid: undefined at infinity");
  if (!g.inversion()) return g.scale();
  const double z2 = (x.coords() - g.pole()).squaredNorm();
  if (z2 == 0.0) throw Error(ErrorCode::pole, "deriv_euclid: evaluation at the pole");
  return g.scale() / z2;
}

double deriv_sphere(const MobiusMap& g, const ExtPoint& x) {
  require_same_dim(x.dim(), g.dim(), "deriv_sphere");
  const double r = g.scale();
  const Vec& b = g.offset();
  if (!g.inversion()) {
    if (x.is_infinity()) return 1.0 / r;
    const Vec& p = x.coords();
    return r * (1.0 + p.squaredNorm()) / (1.0 + (b + r * (g.rotation() * p)).squaredNorm());
  }
  if (x.is_infinity()) return r / (1.0 + b.squaredNorm());
  const Vec& p = x.coords();
  const Vec z = p - g.pole();
  const double zn = z.norm();
  // |z|²(1 + |γx|²) = |z|² + | |z| b + r A z/|z| |², finite at the pole.
  double tail = r * r;
  if (zn > 0.0) tail = (zn * b + (r / zn) * (g.rotation() * z)).squaredNorm();
  return r * (1.0 + p.squaredNorm()) / (zn * zn + tail);
}

SpherePoint apply_sphere(const MobiusMap& g, const SpherePoint& p) {
  return stereo_unproject(g.apply(stereo_project(p)));
}

double deriv_sphere(const MobiusMap& g, const SpherePoint& p) { return deriv_sphere(g, stereo_project(p)); }

MobiusMap lift(const MobiusMap& g) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  Vec a = Vec::Zero(n + 1);
  Vec b = Vec::Zero(n + 1);
  Mat A = Mat::Identity(n + 1, n + 1);
  a.head(n) = g.pole();
  b.head(n) = g.offset();
  A.topLeftCorner(n, n) = g.rotation();
  return MobiusMap(g.inversion(), a, g.scale(), A, b);
}

MobiusMap restrict_to_boundary(const MobiusMap& g) {
  const auto m = static_cast<Eigen::Index>(g.dim());
  if (m < 2) throw Error(ErrorCode::domain, "restrict_to_boundary: dimension too small");
  const auto n = m - 1;
  const double tol = 1e-9 * (1.0 + g.pole().norm() + g.offset().norm());
  const Mat& A = g.rotation();
  if (std::abs(g.pole()[n]) > tol || std::abs(g.offset()[n]) > tol ||
      std::abs(std::abs(A(n, n)) - 1.0) > 1e-9) {
    throw Error(ErrorCode::domain, "restrict_to_boundary: map does not preserve the boundary hyperplane");
  }
  return MobiusMap(g.inversion(), g.pole().head(n), g.scale(), nearest_orthogonal(A.topLeftCorner(n, n)),
                   g.offset().head(n));
}

namespace {

MobiusMap north_inversion(std::size_t ambient_dim) {
  const auto m = static_cast<Eigen::Index>(ambient_dim);
  Vec north = Vec::Zero(m);
  north[m - 1] = 1.0;
  return MobiusMap::sphere_inversion(north, std::numbers::sqrt2);
}

MobiusMap vertical_reflection(std::size_t ambient_dim) {
  const auto m = static_cast<Eigen::Index>(ambient_dim);
  Mat R = Mat::Identity(m, m);
  R(m - 1, m - 1) = -1.0;
  return MobiusMap::rotation(R);
}

}  // namespace

MobiusMap cayley(std::size_t ambient_dim) {
  return compose(north_inversion(ambient_dim), vertical_reflection(ambient_dim));
}

MobiusMap cayley_inverse(std::size_t ambient_dim) {
  return compose(vertical_reflection(ambient_dim), north_inversion(ambient_dim));
}

MobiusMap from_sphere_orthogonal(const Mat& q) {
  const auto m = static_cast<std::size_t>(q.rows());
  const MobiusMap sigma = north_inversion(m);
  return restrict_to_boundary(compose(sigma, compose(MobiusMap::rotation(q), sigma)));
}

SphereImage map_sphere(const MobiusMap& g, const Sphere& s) {
  require_same_dim(static_cast<std::size_t>(s.center.size()), g.dim(), "map_sphere");
  Vec c = s.center;
  double rad = s.radius;
  bool preserved = true;
  if (g.inversion()) {
    c -= g.pole();
    const double c2 = c.squaredNorm();
    const double D = c2 - rad * rad;
    if (std::abs(D) <= 1e-14 * (c2 + rad * rad)) {
      throw Error(ErrorCode::pole, "map_sphere: sphere passes through the pole");
    }
    c /= D;
    rad /= std::abs(D);
    preserved = D > 0.0;
  }
  return SphereImage{Sphere{g.offset() + g.scale() * (g.rotation() * c), g.scale() * rad}, preserved};
}

ExtendedMap::ExtendedMap(const MobiusMap& g)
    : base_(g),
      halfspace_(lift(g)),
      ball_(compose(cayley(g.dim() + 1), compose(halfspace_, cayley_inverse(g.dim() + 1)))) {}

BallPoint ExtendedMap::apply(const BallPoint& p) const {
  require_same_dim(p.ambient_dim(), base_.dim() + 1, "ExtendedMap::apply");
  auto y = ball_.apply_finite(p.vec());
  if (!y) throw Error(ErrorCode::pole, "ExtendedMap::apply: pole inside the ball");
  // Rounding can push points within ~1e-16 of the sphere onto it.
  const double nrm = y->norm();
  if (nrm >= 1.0) *y *= std::nextafter(1.0, 0.0) / nrm;
  return BallPoint(std::move(*y));
}

BallPoint ExtendedMap::apply_conjugated(const BallPoint& p) const {
  require_same_dim(p.ambient_dim(), base_.dim() + 1, "ExtendedMap::apply_conjugated");
  auto h = halfspace_.apply_finite(ball_to_halfspace(p.vec()));
  if (!h) throw Error(ErrorCode::pole, "ExtendedMap::apply_conjugated: pole in the half-space");
  return BallPoint(halfspace_to_ball(*h));
}

ExtendedMap poincare_extend(const MobiusMap& g) { return ExtendedMap(g); }

Sphere dome_sphere(const SphericalCap& cap) {
  const double c = std::cos(cap.angle());
  return Sphere{cap.center().vec() / c, std::tan(cap.angle())};
}

SphericalCap map_cap(const ExtendedMap& g, const SphericalCap& cap) {
  const SphereImage img = map_sphere(g.ball_map(), dome_sphere(cap));
  if (!img.inside_preserved) {
    throw Error(ErrorCode::shrink_epsilon0, "map_cap: image cap is larger than a hemisphere");
  }
  const double angle = std::atan(img.sphere.radius);
  if (!(angle < std::numbers::pi / 2)) {
    throw Error(ErrorCode::shrink_epsilon0, "map_cap: image cap reaches a hemisphere");
  }
  return SphericalCap(SpherePoint::normalized(img.sphere.center), angle);
}

const char* to_string(MobiusClass c) noexcept {
  switch (c) {
    case MobiusClass::identity: return "identity";
    case MobiusClass::elliptic: return "elliptic";
    case MobiusClass::parabolic: return "parabolic";
    case MobiusClass::loxodromic: return "loxodromic";
  }
  return "unknown";
}

namespace {

// Hyperboloid coordinates (time first) of a ball point.
Vec hyperboloid(const Vec& p) {
  const double p2 = p.squaredNorm();
  Vec h(p.size() + 1);
  h[0] = (1.0 + p2) / (1.0 - p2);
  h.tail(p.size()) = 2.0 * p / (1.0 - p2);
  return h;
}

Vec from_hyperboloid(const Vec& h) { return h.tail(h.size() - 1) / (1.0 + h[0]); }

SpherePoint lightlike_to_sphere(const Vec& v) {
  Vec tail = v.tail(v.size() - 1);
  if (v[0] < 0) tail = -tail;
  return SpherePoint::normalized(tail);
}

Mat minkowski(Eigen::Index m) {
  Mat J = Mat::Identity(m, m);
  J(0, 0) = -1.0;
  return J;
}

// Linear map of R^{n+1,1} induced by the ball action.
Mat lorentz_matrix(const MobiusMap& ball) {
  const auto m = static_cast<Eigen::Index>(ball.dim());
  Mat P(m + 1, m + 1), Q(m + 1, m + 1);
  for (Eigen::Index j = 0; j <= m; ++j) {
    Vec p = Vec::Zero(m);
    if (j > 0) p[j - 1] = 0.5;
    P.col(j) = hyperboloid(p);
    Q.col(j) = hyperboloid(*ball.apply_finite(p));
  }
  return P.transpose().fullPivLu().solve(Q.transpose()).transpose();
}

double ball_distance_vec(const Vec& x, const Vec& y) {
  const double d = (x - y).norm();
  const double nx = x.norm(), ny = y.norm();
  return 2.0 * std::asinh(d / std::sqrt((1.0 - nx) * (1.0 + nx) * (1.0 - ny) * (1.0 + ny)));
}

Classification classify_affine(const MobiusMap& g) {
  const auto n = static_cast<Eigen::Index>(g.dim());
  const double r = g.scale();
  const Mat I = Mat::Identity(n, n);
  Classification out;
  if (std::abs(r - 1.0) > 1e-12) {
    out.kind = MobiusClass::loxodromic;
    out.translation_length = std::abs(std::log(r));
    const Vec x0 = (I - r * g.rotation()).fullPivLu().solve(g.offset());
    SpherePoint finite = stereo_unproject(ExtPoint(x0));
    SpherePoint inf = stereo_unproject(ExtPoint::infinity(g.dim()));
    // Expanding maps push points toward ∞.
    if (r > 1.0) {
      out.fixed_points = {finite, inf};
    } else {
      out.fixed_points = {inf, finite};
    }
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(g.rotation() - I, Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  Vec along = Vec::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sv[i] < 1e-9) {
      const Vec k = svd.matrixV().col(i);
      along += k.dot(g.offset()) * k;
    }
  }
  if (along.norm() > 1e-9 * (1.0 + g.offset().norm())) {
    out.kind = MobiusClass::parabolic;
    out.fixed_points = {stereo_unproject(ExtPoint::infinity(g.dim()))};
  } else {
    out.kind = MobiusClass::elliptic;
  }
  return out;
}

// Infimum of the displacement by iterating x ↦ midpoint(x, γ̂x), which moves
// toward the axis (loxodromic), the fixed set (elliptic) or the fixed point
// at infinity (parabolic).
std::pair<double, bool> displacement_search(const MobiusMap& ball) {
  const auto m = static_cast<Eigen::Index>(ball.dim());
  Vec x = Vec::Zero(m);
  double prev = 0.0, cur = 0.0;
  for (int it = 0; it < 4000; ++it) {
    auto y = ball.apply_finite(x);
    if (!y) break;
    cur = ball_distance_vec(x, *y);
    if (it > 0 && std::abs(cur - prev) <= 1e-13 * (1.0 + cur)) return {cur, true};
    prev = cur;
    Vec mid = hyperboloid(x) + hyperboloid(*y);
    const double q = std::sqrt(mid[0] * mid[0] - mid.tail(m).squaredNorm());
    x = from_hyperboloid(mid / q);
    if (x.norm() >= 1.0 - 1e-15) break;
  }
  return {cur, false};
}

}  // namespace

Classification classify(const MobiusMap& g) {
  if (g.is_identity()) return Classification{};
  if (!g.inversion()) return classify_affine(g);

  const ExtendedMap ext(g);
  const Mat L = lorentz_matrix(ext.ball_map());
  const auto m = L.rows();
  Eigen::EigenSolver<Mat> es(L);
  const auto& ev = es.eigenvalues();
  Eigen::Index imax = 0, imin = 0;
  for (Eigen::Index i = 1; i < m; ++i) {
    if (std::abs(ev[i]) > std::abs(ev[imax])) imax = i;
    if (std::abs(ev[i]) < std::abs(ev[imin])) imin = i;
  }
  const double ell = std::log(std::abs(ev[imax]));
  Classification out;
  auto real_vec = [&](Eigen::Index i) { return Vec(es.eigenvectors().col(i).real()); };

  // Fixed vectors first: the Jordan block of a parabolic perturbs its
  // eigenvalues by ~eps^(1/3), so the spectral radius alone misreads it.
  Eigen::JacobiSVD<Mat> svd(L - Mat::Identity(m, m), Eigen::ComputeFullV);
  const Vec& sv = svd.singularValues();
  std::vector<Eigen::Index> null_cols;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (sv[i] < 1e-6) null_cols.push_back(i);
  }
  if (!null_cols.empty()) {
    Mat N(m, static_cast<Eigen::Index>(null_cols.size()));
    for (std::size_t k = 0; k < null_cols.size(); ++k) {
      N.col(static_cast<Eigen::Index>(k)) = svd.matrixV().col(null_cols[k]);
    }
    const Mat G = N.transpose() * minkowski(m) * N;
    Eigen::SelfAdjointEigenSolver<Mat> gs(G);
    const double lo = gs.eigenvalues()[0];
    if (lo < -1e-6) {
      out.kind = MobiusClass::elliptic;
      return out;
    }
    if (std::abs(lo) < 1e-6) {
      out.kind = MobiusClass::parabolic;
      out.fixed_points = {lightlike_to_sphere(N * gs.eigenvectors().col(0))};
      return out;
    }
  }

  if (ell > 1e-4) {
    out.kind = MobiusClass::loxodromic;
    out.translation_length = ell;
    out.fixed_points = {lightlike_to_sphere(real_vec(imin)), lightlike_to_sphere(real_vec(imax))};
    return out;
  }

  const auto [inf, converged] = displacement_search(ext.ball_map());
  if (converged && inf > 1e-7) {
    out.kind = MobiusClass::loxodromic;
    out.translation_length = inf;
    out.fixed_points = {lightlike_to_sphere(real_vec(imin)), lightlike_to_sphere(real_vec(imax))};
    return out;
  }
  throw Error(ErrorCode::ambiguous, "classify: displacement infimum " + std::to_string(inf) +
                                        " is numerically indistinguishable from zero");
}

}  // namespace kleinlab
