#include "kleinlab/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kleinlab/error.hpp"

namespace kleinlab {

KdTree::KdTree(const std::vector<Vec>& points) {
  if (points.empty()) return;
  dim_ = static_cast<std::size_t>(points.front().size());
  const std::size_t count = points.size();
  order_.resize(count);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  cols_.assign(dim_, std::vector<double>(count));
  for (std::size_t i = 0; i < count; ++i) {
    require_same_dim(static_cast<std::size_t>(points[i].size()), dim_, "KdTree");
    for (std::size_t k = 0; k < dim_; ++k) cols_[k][i] = points[i][static_cast<Eigen::Index>(k)];
  }
  nodes_.reserve(2 * (count / kLeafSize + 1));
  build(0, count);
  // Columns are reordered in build; refresh pointers once at the end.
  for (auto& c : cols_) col_ptrs_.push_back(c.data());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo.assign(dim_, std::numeric_limits<double>::infinity());
  node.hi.assign(dim_, -std::numeric_limits<double>::infinity());
  for (std::size_t i = begin; i < end; ++i) {
    for (std::size_t k = 0; k < dim_; ++k) {
      node.lo[k] = std::min(node.lo[k], cols_[k][i]);
      node.hi[k] = std::max(node.hi[k], cols_[k][i]);
    }
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= kLeafSize) return id;

  std::size_t axis = 0;
  for (std::size_t k = 1; k < dim_; ++k) {
    if (node.hi[k] - node.lo[k] > node.hi[axis] - node.lo[axis]) axis = k;
  }
  // Median split on a permutation of the slot range, then apply it to every column.
  std::vector<std::size_t> perm(end - begin);
  std::iota(perm.begin(), perm.end(), begin);
  const std::size_t mid = (end - begin) / 2;
  const auto& key = cols_[axis];
  std::nth_element(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(mid), perm.end(),
                   [&](std::size_t a, std::size_t b) { return key[a] < key[b] || (key[a] == key[b] && a < b); });
  std::vector<double> tmp(end - begin);
  for (auto& col : cols_) {
    for (std::size_t i = 0; i < perm.size(); ++i) tmp[i] = col[perm[i]];
    std::copy(tmp.begin(), tmp.end(), col.begin() + static_cast<std::ptrdiff_t>(begin));
  }
  std::vector<std::size_t> ord(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) ord[i] = order_[perm[i]];
  std::copy(ord.begin(), ord.end(), order_.begin() + static_cast<std::ptrdiff_t>(begin));

  const int l = build(begin, begin + mid);
  const int r = build(begin + mid, end);
  nodes_[static_cast<std::size_t>(id)].left = l;
  nodes_[static_cast<std::size_t>(id)].right = r;
  return id;
}

double KdTree::box_sq_dist(const Node& node, const double* q) const {
  double s = 0.0;
  for (std::size_t k = 0; k < dim_; ++k) {
    double d = 0.0;
    if (q[k] < node.lo[k]) d = node.lo[k] - q[k];
    else if (q[k] > node.hi[k]) d = q[k] - node.hi[k];
    s += d * d;
  }
  return s;
}

simd::Columns KdTree::leaf_columns(const Node& node) const {
  // Pointers are offset per leaf; a small thread-local buffer keeps the
  // const query path allocation free.
  thread_local std::vector<const double*> ptrs;
  ptrs.resize(dim_);
  for (std::size_t k = 0; k < dim_; ++k) ptrs[k] = col_ptrs_[k] + node.begin;
  return simd::Columns{ptrs.data(), dim_, node.end - node.begin};
}

KdTree::Hit KdTree::nearest(const Vec& q) const {
  if (empty()) throw Error(ErrorCode::domain, "KdTree::nearest: empty tree");
  require_same_dim(static_cast<std::size_t>(q.size()), dim_, "KdTree::nearest");
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_slot = 0;
  // Explicit stack of (node, lower bound).
  std::vector<std::pair<int, double>> stack{{0, 0.0}};
  while (!stack.empty()) {
    const auto [id, bound] = stack.back();
    stack.pop_back();
    if (bound > best) continue;
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.left < 0) {
      const auto hit = simd::nearest(leaf_columns(node), q.data());
      const std::size_t slot = node.begin + hit.index;
      if (hit.sq_dist < best || (hit.sq_dist == best && slot < best_slot)) {
        best = hit.sq_dist;
        best_slot = slot;
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    const double dl = box_sq_dist(l, q.data());
    const double dr = box_sq_dist(r, q.data());
    // Push the farther child first so the nearer one is explored first.
    if (dl <= dr) {
      stack.emplace_back(node.right, dr);
      stack.emplace_back(node.left, dl);
    } else {
      stack.emplace_back(node.left, dl);
      stack.emplace_back(node.right, dr);
    }
  }
  return Hit{order_[best_slot], std::sqrt(best)};
}

bool KdTree::any_within(const Vec& q, double radius) const {
  if (empty()) return false;
  require_same_dim(static_cast<std::size_t>(q.size()), dim_, "KdTree::any_within");
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_sq_dist(node, q.data()) > r2) continue;
    if (node.left < 0) {
      if (simd::any_within(leaf_columns(node), q.data(), r2)) return true;
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  return false;
}

std::vector<std::size_t> KdTree::within(const Vec& q, double radius) const {
  std::vector<std::size_t> out;
  if (empty()) return out;
  require_same_dim(static_cast<std::size_t>(q.size()), dim_, "KdTree::within");
  const double r2 = radius * radius;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_sq_dist(node, q.data()) > r2) continue;
    if (node.left < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
          const double d = cols_[k][i] - q[static_cast<Eigen::Index>(k)];
          s += d * d;
        }
        if (s <= r2) out.push_back(order_[i]);
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  return out;
}

Vec KdTree::point(std::size_t i) const {
  const auto it = std::find(order_.begin(), order_.end(), i);
  if (it == order_.end()) throw Error(ErrorCode::domain, "KdTree::point: index out of range");
  const auto slot = static_cast<std::size_t>(it - order_.begin());
  Vec v(static_cast<Eigen::Index>(dim_));
  for (std::size_t k = 0; k < dim_; ++k) v[static_cast<Eigen::Index>(k)] = cols_[k][slot];
  return v;
}

namespace {
std::vector<Vec> cap_centers(const std::vector<SphericalCap>& caps) {
  std::vector<Vec> out;
  out.reserve(caps.size());
  for (const auto& c : caps) out.push_back(c.center().vec());
  return out;
}
}  // namespace

CapIndex::CapIndex(const std::vector<SphericalCap>& caps) : KdTree(cap_centers(caps)) {
  vers_.resize(caps.size());
  sec_.resize(caps.size());
  std::vector<double> reach(caps.size());
  for (std::size_t slot = 0; slot < caps.size(); ++slot) {
    const auto& cap = caps[order_[slot]];
    const double h = std::sin(0.5 * cap.angle());
    vers_[slot] = 2.0 * h * h;
    sec_[slot] = 1.0 / std::cos(cap.angle());
    reach[slot] = angle_to_chord(cap.angle());
  }
  // Children are stored after their parent, so a reverse sweep aggregates.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& node = nodes_[i];
    if (node.left < 0) {
      node.reach = *std::max_element(reach.begin() + static_cast<std::ptrdiff_t>(node.begin),
                                     reach.begin() + static_cast<std::ptrdiff_t>(node.end));
    } else {
      node.reach = std::max(nodes_[static_cast<std::size_t>(node.left)].reach,
                            nodes_[static_cast<std::size_t>(node.right)].reach);
    }
  }
}

CapIndex::Entry CapIndex::lowest_dome(const SpherePoint& x) const {
  Entry best;
  if (empty()) return best;
  const Vec& q = x.vec();
  require_same_dim(static_cast<std::size_t>(q.size()), dim_, "CapIndex::lowest_dome");
  std::size_t best_slot = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    // A cap can only contain x if its center is within its chordal radius.
    if (box_sq_dist(node, q.data()) > node.reach * node.reach * (1.0 + 1e-12)) continue;
    if (node.left < 0) {
      const auto hit =
          simd::max_dome_gap(leaf_columns(node), vers_.data() + node.begin, sec_.data() + node.begin, q.data());
      const std::size_t slot = node.begin + hit.index;
      if (hit.gap > best.gap || (hit.gap == best.gap && hit.gap >= 0.0 && slot < best_slot)) {
        best.gap = hit.gap;
        best_slot = slot;
      }
      continue;
    }
    stack.push_back(node.left);
    stack.push_back(node.right);
  }
  if (best.hit()) best.index = order_[best_slot];
  return best;
}

}  // namespace kleinlab
