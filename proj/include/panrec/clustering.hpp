#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "panrec/categories.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct SurfacePoint {
  Vec3 position = Vec3::Zero();  // meters
  CategoryId category = 0;
  float probability = 1.0f;  // semantic probability of `category`
};

struct Cluster {
  CategoryId category = 0;
  double confidence = 0.0;
  std::vector<std::size_t> members;  // indices into the input, ascending
};

inline constexpr double kClusterRadius = 0.02;  // meters

/// Greedy breadth-first growth over same-category things points: a point
/// joins a cluster when it lies within `radius` (inclusive) of any member.
/// Stuff and freespace points are skipped. Clusters come out ordered by their
/// smallest member index.
std::vector<Cluster> cluster_instances(std::span<const SurfacePoint> points, double radius,
                                       const CategoryTable& categories);

/// Mean member probability. Throws InvalidArgument for an empty cluster.
double cluster_confidence(std::span<const SurfacePoint> points,
                          std::span<const std::size_t> members);

/// Surface voxels {|sdf| < surface_threshold} as points at their centers.
/// Probabilities are the softmax of `semantic_logits` at the voxel's label;
/// without logits every point gets probability 1.
std::vector<SurfacePoint> surface_points(const PanopticVolume& v, float surface_threshold,
                                         const VectorVolume* semantic_logits = nullptr);

/// Panoptic volume with one instance per cluster (ids 1.. in cluster order);
/// stuff voxels keep their labels.
PanopticVolume clusters_to_volume(const PanopticVolume& v, float surface_threshold,
                                  const std::vector<Cluster>& clusters,
                                  std::span<const SurfacePoint> points);

nlohmann::json clusters_to_json(const std::vector<Cluster>& clusters,
                                std::span<const SurfacePoint> points, const GridSpec& spec);

}  // namespace panrec
