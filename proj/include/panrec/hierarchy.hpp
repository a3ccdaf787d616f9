#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panrec/categories.hpp"
#include "panrec/geometry.hpp"
#include "panrec/lifting.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

// Level 0 is the finest grid; level `levels - 1` is the coarsest, dense one.

struct LevelInput {
  int level = 0;
  GridSpec spec;
  std::span<const VoxelCoord> sites;  // canonical order
  const LiftedVolumes* seed = nullptr;
};

/// Per-site head outputs, aligned with `sites`.
struct LevelOutput {
  std::vector<VoxelCoord> sites;
  std::vector<float> occupancy;                     // in [0, 1]
  std::vector<std::vector<float>> semantic_logits;  // category-table width
  std::vector<std::vector<float>> instance_logits;  // N + 1 channels
  std::vector<float> distance;                      // level 0 only, voxel units
};

/// Pluggable evaluator behind the coarse-to-fine control flow. Trained
/// networks, test stubs and file-backed replays all implement this.
class LevelPredictor {
 public:
  virtual ~LevelPredictor() = default;
  virtual LevelOutput predict(const LevelInput& input) = 0;
};

struct HierarchyConfig {
  int levels = 3;
  float occupancy_threshold = 0.5f;  // θ_occ
};

struct LevelResult {
  int level = 0;
  GridSpec spec;
  std::vector<VoxelCoord> sites;
  LevelOutput output;
};

struct HierarchyResult {
  PanopticVolume volume;  // level-0 sites with occupancy >= θ_occ
  // Level-0 heads on the same support, as consumed by panoptic assembly.
  DistanceVolume distance;
  VectorVolume semantic_logits;
  SparseVolume<InstanceId> instances;
  std::vector<LevelResult> levels;  // indexed by level
};

/// Accepts sites with occ >= θ_occ and expands each to its 8 children at the
/// next finer level. Output is canonical.
std::vector<VoxelCoord> occupancy_to_sites(std::span<const VoxelCoord> sites,
                                           std::span<const float> occupancy,
                                           float occupancy_threshold);

/// Dense coarsest-level sites: every coarse voxel whose box may touch the
/// frustum (every voxel when `frustum` is null).
std::vector<VoxelCoord> dense_sites(const GridSpec& coarse, const Frustum* frustum);

/// Level-h grid for a finest grid `finest`.
GridSpec level_spec(const GridSpec& finest, int level);

HierarchyResult run_coarse_to_fine(const LiftedVolumes& seed, LevelPredictor& predictor,
                                   const HierarchyConfig& cfg, const Frustum* frustum = nullptr);

/// Stored per-level head outputs. Sites missing from a level read back as
/// occupancy 0, zero logits and distance 0.
struct StoredHierarchy {
  struct Level {
    SparseVolume<float> occupancy;  // probabilities
    VectorVolume semantic_logits;
    VectorVolume instance_logits;
    DistanceVolume distance;  // level 0 only
  };
  std::vector<Level> levels;
  int semantic_width = 0;
  int instance_width = 1;

  void save(const std::string& dir) const;
  static StoredHierarchy load(const std::string& dir);
};

/// Ground-truth hierarchy for a panoptic volume: level 0 replays the volume,
/// coarser levels mark a voxel occupied when any descendant is and carry its
/// majority label. Instance channels are the volume's instance ids.
StoredHierarchy build_gt_hierarchy(const PanopticVolume& gt, int levels,
                                   const CategoryTable& categories);

class ReplayPredictor : public LevelPredictor {
 public:
  explicit ReplayPredictor(StoredHierarchy stored) : stored_(std::move(stored)) {}
  LevelOutput predict(const LevelInput& input) override;

 private:
  StoredHierarchy stored_;
};

/// Same occupancy, distance and labels at every site.
class ConstantPredictor : public LevelPredictor {
 public:
  ConstantPredictor(float occupancy, float distance, CategoryId semantic, int semantic_width,
                    InstanceId instance = kNoInstance, int instance_width = 1);
  LevelOutput predict(const LevelInput& input) override;

 private:
  float occupancy_;
  float distance_;
  CategoryId semantic_;
  int semantic_width_;
  InstanceId instance_;
  int instance_width_;
};

}  // namespace panrec
