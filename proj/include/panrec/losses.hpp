#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "panrec/geometry.hpp"
#include "panrec/instance_propagation.hpp"
#include "panrec/sparse_volume.hpp"
#include "panrec/supervision.hpp"

namespace panrec {

/// Sites for which a loss is evaluated. An empty mask keeps every site.
using SiteMask = std::function<bool(const VoxelCoord&)>;

/// Sites whose voxel centers lie inside the camera frustum.
SiteMask frustum_site_mask(const GridSpec& spec, const CameraIntrinsics& K);

inline constexpr double kProbabilityClamp = 1e-7;

/// Deterministic pairwise (tree) summation.
double pairwise_sum(std::span<const double> values);

/// Mean BCE of occupancy probabilities over masked sites, plus at level 0 the
/// mean absolute distance error over the masked ground-truth distance sites.
/// Prediction and target must cover the same sites.
double loss_geometry(const SparseVolume<float>& occ_pred, const SparseVolume<float>& occ_gt,
                     const DistanceVolume* sdf_pred, const DistanceVolume* sdf_gt, int level,
                     const SiteMask& mask = {});

/// Class-weighted cross entropy normalized by the summed target weights.
double loss_semantic(const VectorVolume& logits, const SparseVolume<CategoryId>& targets,
                     const ClassWeightTable& weights, const SiteMask& mask = {});

/// Mean cross entropy over the N + 1 instance channels.
double loss_instance(const InstanceChannelVolume& logits, const SparseVolume<std::int32_t>& targets,
                     const SiteMask& mask = {});

/// Depth-term stand-in: mean |ln pred - ln gt| over pixels valid in both.
double loss_depth_log_l1(const DepthMap& pred, const DepthMap& gt);

struct LossWeights {
  double depth = 1.0;       // w_d
  double instance_2d = 1.0; // w_i
  double geometry = 1.0;    // w_g
  double semantic = 1.0;    // w_s
  double instance = 1.0;    // w_o

  void validate() const;
};

struct LevelLoss {
  std::optional<double> geometry;
  std::optional<double> semantic;
  std::optional<double> instance;
};

struct LossParts {
  double depth = 0.0;        // L_d
  double instance_2d = 0.0;  // L_i
  std::vector<LevelLoss> levels;
};

/// w_d L_d + w_i L_i + Σ_h (w_g L_g^h + w_s L_s^h + w_o L_o^h). Every one of
/// the `levels` levels must supply all three terms.
double loss_total(const LossParts& parts, const LossWeights& w, int levels);

}  // namespace panrec
