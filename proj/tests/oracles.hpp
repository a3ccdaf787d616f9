#pragma once

// Independent reference implementations used to check the library. They are
// deliberately simple and slow.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <tuple>
#include <vector>

#include "panrec/clustering.hpp"
#include "panrec/geometry.hpp"
#include "panrec/metrics.hpp"
#include "panrec/sparse_volume.hpp"

namespace oracle {

using panrec::Vec3;

inline double point_segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

// Projection onto the supporting plane when it lands inside the triangle,
// otherwise the nearest of the three edges.
inline double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const double n2 = n.squaredNorm();
  if (n2 > 0.0) {
    const Vec3 q = p - n * ((p - a).dot(n) / n2);
    const bool s0 = (b - a).cross(q - a).dot(n) >= 0.0;
    const bool s1 = (c - b).cross(q - b).dot(n) >= 0.0;
    const bool s2 = (a - c).cross(q - c).dot(n) >= 0.0;
    if (s0 && s1 && s2) return (p - q).norm();
  }
  return std::min({point_segment_distance(p, a, b), point_segment_distance(p, b, c),
                   point_segment_distance(p, c, a)});
}

struct NearestTriangle {
  double distance = INFINITY;
  std::size_t index = 0;
};

inline NearestTriangle nearest_triangle(const panrec::TriangleMesh& m, const Vec3& p) {
  NearestTriangle best;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto& tri = m.triangles[t];
    const double d = point_triangle_distance(p, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
    if (d < best.distance) best = {d, t};
  }
  return best;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

using Partition = std::set<std::vector<std::size_t>>;

// Connected components of the same-category radius graph over things points,
// via a sort-and-sweep along x.
inline Partition radius_components(const std::vector<panrec::SurfacePoint>& pts, double r,
                                   const panrec::CategoryTable& cats) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (cats.is_thing(pts[i].category)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].position.x() < pts[b].position.x();
  });
  UnionFind uf(pts.size());
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const auto& p = pts[order[a]];
      const auto& q = pts[order[b]];
      if (q.position.x() - p.position.x() > r) break;
      if (p.category == q.category && (p.position - q.position).norm() <= r) uf.unite(order[a], order[b]);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i : order) groups[uf.find(i)].push_back(i);
  Partition out;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    out.insert(members);
  }
  return out;
}

inline double set_iou(const panrec::VoxelSet& a, const panrec::VoxelSet& b) {
  auto key = [](const panrec::VoxelCoord& c) { return std::make_tuple(c.i, c.j, c.k); };
  std::set<std::tuple<int, int, int>> sa, sb, all;
  for (const auto& c : a) sa.insert(key(c));
  for (const auto& c : b) sb.insert(key(c));
  all = sa;
  all.insert(sb.begin(), sb.end());
  std::size_t inter = 0;
  for (const auto& k : sa) inter += sb.count(k);
  return static_cast<double>(inter) / static_cast<double>(all.size());
}

struct ExhaustiveMatching {
  double total_iou = 0.0;
  std::set<std::pair<std::size_t, std::size_t>> pairs;
};

// Best one-to-one same-category matching by total IoU over every assignment.
inline ExhaustiveMatching max_total_iou_matching(const std::vector<panrec::Segment>& pred,
                                                 const std::vector<panrec::Segment>& gt,
                                                 double threshold) {
  std::vector<std::vector<double>> iou(pred.size(), std::vector<double>(gt.size(), 0.0));
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].category == gt[g].category) iou[p][g] = set_iou(pred[p].voxels, gt[g].voxels);
    }
  }
  ExhaustiveMatching best;
  std::vector<char> used(gt.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> current;
  std::function<void(std::size_t, double)> search = [&](std::size_t p, double total) {
    if (p == pred.size()) {
      if (total > best.total_iou + 1e-12) {
        best.total_iou = total;
        best.pairs = {current.begin(), current.end()};
      }
      return;
    }
    search(p + 1, total);
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g] || pred[p].category != gt[g].category || iou[p][g] < threshold) continue;
      used[g] = 1;
      current.emplace_back(p, g);
      search(p + 1, total + iou[p][g]);
      current.pop_back();
      used[g] = 0;
    }
  };
  search(0, 0.0);
  return best;
}

// Brute-force nearest labeled voxel; ties go to the canonically smaller one.
inline std::optional<panrec::VoxelCoord> nearest_voxel(const std::vector<panrec::VoxelCoord>& candidates,
                                                       const panrec::VoxelCoord& q) {
  std::optional<panrec::VoxelCoord> best;
  long long best_d = 0;
  for (const auto& c : candidates) {
    const long long di = c.i - q.i, dj = c.j - q.j, dk = c.k - q.k;
    const long long d = di * di + dj * dj + dk * dk;
    if (!best || d < best_d || (d == best_d && panrec::CanonicalLess{}(c, *best))) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

}  // namespace oracle
