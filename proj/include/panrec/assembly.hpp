#pragma once

#include <cstddef>

#include "panrec/categories.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct AssemblyConfig {
  float surface_threshold = 1.0f;  // τ_s, voxel units
  CategoryTable categories = CategoryTable::synthetic();

  void validate(float tau) const;
};

struct AssemblyStats {
  std::size_t surface = 0;
  std::size_t stuff = 0;
  std::size_t things = 0;
  std::size_t filled = 0;         // labeled by nearest-label fill
  std::size_t disagreements = 0;  // voxel's things argmax differs from its instance majority
};

/// Surface voxels {|sdf| < τ_s} take a stuff argmax label when there is one;
/// otherwise the instance id with the instance's majority things category.
/// Voxels left without labels copy the nearest labeled voxel (Euclidean,
/// ties by canonical order).
PanopticVolume assemble_panoptic_surface(const DistanceVolume& sdf, const VectorVolume& semantic,
                                         const SparseVolume<InstanceId>& instances,
                                         const AssemblyConfig& cfg,
                                         AssemblyStats* stats = nullptr);

}  // namespace panrec
