#include "panrec/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <unordered_map>

#include "panrec/parallel.hpp"

namespace panrec {

namespace {

struct CellKey {
  std::int64_t x, y, z;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& c) const noexcept {
    return static_cast<std::size_t>(hash_combine(hash_combine(mix64(static_cast<std::uint64_t>(c.x)),
                                                              static_cast<std::uint64_t>(c.y)),
                                                 static_cast<std::uint64_t>(c.z)));
  }
};

CellKey cell_of(const Vec3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

// BFS over one category's points (given in ascending index order).
std::vector<Cluster> cluster_category(std::span<const SurfacePoint> points,
                                      const std::vector<std::size_t>& indices, double radius,
                                      CategoryId category) {
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> grid;
  grid.reserve(indices.size());
  for (std::size_t idx : indices) grid[cell_of(points[idx].position, radius)].push_back(idx);

  const double r2 = radius * radius;
  std::vector<char> visited(points.size(), 0);

  std::vector<Cluster> out;
  std::deque<std::size_t> queue;
  for (std::size_t seed : indices) {
    if (visited[seed]) continue;
    visited[seed] = 1;
    Cluster cluster{category, 0.0, {}};
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t cur = queue.front();
      queue.pop_front();
      cluster.members.push_back(cur);
      const Vec3& p = points[cur].position;
      const CellKey base = cell_of(p, radius);
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
          for (std::int64_t dx = -1; dx <= 1; ++dx) {
            auto it = grid.find({base.x + dx, base.y + dy, base.z + dz});
            if (it == grid.end()) continue;
            for (std::size_t other : it->second) {
              if (visited[other]) continue;
              if ((points[other].position - p).squaredNorm() <= r2) {
                visited[other] = 1;
                queue.push_back(other);
              }
            }
          }
        }
      }
    }
    std::sort(cluster.members.begin(), cluster.members.end());
    cluster.confidence = cluster_confidence(points, cluster.members);
    out.push_back(std::move(cluster));
  }
  return out;
}

}  // namespace

double cluster_confidence(std::span<const SurfacePoint> points,
                          std::span<const std::size_t> members) {
  if (members.empty()) throw InvalidArgument("cluster confidence of an empty cluster");
  double sum = 0.0;
  for (std::size_t m : members) sum += points[m].probability;
  return sum / static_cast<double>(members.size());
}

std::vector<Cluster> cluster_instances(std::span<const SurfacePoint> points, double radius,
                                       const CategoryTable& categories) {
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument("cluster radius must be positive");
  }
  std::map<CategoryId, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const SurfacePoint& p = points[i];
    if (!p.position.allFinite()) throw InvalidArgument("surface point position is not finite");
    if (!(p.probability >= 0.0f && p.probability <= 1.0f)) {
      throw InvalidArgument("surface point probability outside [0, 1]");
    }
    if (categories.is_thing(p.category)) by_category[p.category].push_back(i);
  }

  std::vector<std::pair<CategoryId, const std::vector<std::size_t>*>> jobs;
  for (const auto& [c, idx] : by_category) jobs.emplace_back(c, &idx);
  std::vector<std::vector<Cluster>> per_category(jobs.size());
  parallel_for(0, jobs.size(), [&](std::size_t j) {
    per_category[j] = cluster_category(points, *jobs[j].second, radius, jobs[j].first);
  });

  std::vector<Cluster> out;
  for (auto& cs : per_category) {
    for (auto& c : cs) out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const Cluster& a, const Cluster& b) { return a.members.front() < b.members.front(); });
  return out;
}

std::vector<SurfacePoint> surface_points(const PanopticVolume& v, float surface_threshold,
                                         const VectorVolume* semantic_logits) {
  std::vector<SurfacePoint> out;
  v.for_each([&](const VoxelCoord& c, const PanopticVoxel& voxel) {
    if (!(std::abs(voxel.sdf) < surface_threshold)) return;
    float prob = 1.0f;
    if (semantic_logits) {
      if (const auto* logits = semantic_logits->find(c); logits && voxel.semantic < logits->size()) {
        const float mx = *std::max_element(logits->begin(), logits->end());
        double z = 0.0;
        for (float l : *logits) z += std::exp(static_cast<double>(l - mx));
        prob = static_cast<float>(std::exp(static_cast<double>((*logits)[voxel.semantic] - mx)) / z);
      }
    }
    out.push_back({v.spec().center(c), voxel.semantic, prob});
  });
  return out;
}

PanopticVolume clusters_to_volume(const PanopticVolume& v, float surface_threshold,
                                  const std::vector<Cluster>& clusters,
                                  std::span<const SurfacePoint> points) {
  std::unordered_map<VoxelCoord, InstanceId, VoxelCoordHash> ids;
  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    for (std::size_t m : clusters[ci].members) {
      ids[v.spec().coord_of(points[m].position)] = static_cast<InstanceId>(ci + 1);
    }
  }
  PanopticVolume out(v.spec());
  for (const auto& [c, voxel] : v.unordered()) {
    if (!(std::abs(voxel.sdf) < surface_threshold)) continue;
    PanopticVoxel o = voxel;
    auto it = ids.find(c);
    o.instance = it == ids.end() ? kNoInstance : it->second;
    out.insert_or_assign(c, o);
  }
  return out;
}

nlohmann::json clusters_to_json(const std::vector<Cluster>& clusters,
                                std::span<const SurfacePoint> points, const GridSpec& spec) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Cluster& c : clusters) {
    nlohmann::json voxels = nlohmann::json::array();
    for (std::size_t m : c.members) {
      const VoxelCoord v = spec.coord_of(points[m].position);
      voxels.push_back({v.i, v.j, v.k});
    }
    arr.push_back({{"category", c.category}, {"confidence", c.confidence}, {"voxels", voxels}});
  }
  return {{"segments", arr}};
}

}  // namespace panrec
