#pragma once

#include <cstdint>
#include <vector>

#include "panrec/geometry.hpp"
#include "panrec/instance_propagation.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct TruncationConfig {
  float tau = 3.0f;  // voxel units

  void validate() const;
};

struct LiftConfig {
  TruncationConfig truncation;
  std::uint64_t seed = 0;
  int max_instances = 20;          // N_max
  float foreground_logit = 0.0f;   // σ_fg: a pixel belongs to no detection if every logit is below it
};

/// F = (F_d, F_f, F_i), all on one grid and one support.
struct LiftedVolumes {
  DistanceVolume distance;     // voxel units, in [-tau, tau]
  VectorVolume features;       // empty volume when no features were lifted
  InstanceChannelVolume instances;
};

/// Key of the keyed voxel-bin sampler: the contributor with the smallest key
/// wins, so the choice depends only on (seed, voxel, contributor set).
inline std::uint64_t lift_sample_key(std::uint64_t seed, const VoxelCoord& c,
                                     std::uint64_t pixel_index) {
  return keyed_hash(seed, static_cast<std::uint32_t>(c.i), static_cast<std::uint32_t>(c.j),
                    static_cast<std::uint32_t>(c.k), pixel_index);
}

/// Shared lifting pass. `features` and `masks` are optional rasters at the
/// depth map's resolution; `masks` holds N mask-logit channels.
LiftedVolumes lift_to_volumes(const DepthMap& depth, const CameraIntrinsics& K,
                              const GridSpec& spec, const LiftConfig& cfg,
                              const Raster* features, const Raster* masks);

/// View-direction TSDF: positive in front of the depth sample, zero at it,
/// negative behind it, measured along each pixel ray in voxel units.
DistanceVolume backproject_depth_to_tsdf(const DepthMap& depth, const CameraIntrinsics& K,
                                         const GridSpec& spec, float tau);

VectorVolume lift_features(const DepthMap& depth, const CameraIntrinsics& K,
                           const GridSpec& spec, float tau, const Raster& features,
                           std::uint64_t seed = 0);

InstanceChannelVolume lift_instance_logits(const DepthMap& depth, const CameraIntrinsics& K,
                                           const GridSpec& spec, float tau, const Raster& masks,
                                           std::uint64_t seed = 0, int max_instances = 20);

}  // namespace panrec
