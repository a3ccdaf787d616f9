#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "panrec/categories.hpp"
#include "panrec/geometry.hpp"
#include "panrec/instance_propagation.hpp"
#include "panrec/sparse_volume.hpp"
#include "panrec/supervision.hpp"

namespace panrec {

/// Axis-aligned labeled box in the world frame (y up, floor at y = 0).
struct LabeledBox {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  PanopticLabel label;
};

struct SyntheticScene {
  CameraIntrinsics K;
  Pose camera_to_world = Pose::Identity();
  double room_width = 0.0;  // x extent
  double room_depth = 0.0;  // z extent
  double wall_height = 0.0;
  // Floor slab, four wall slabs, then the objects (instance ids 1..n).
  std::vector<LabeledBox> boxes;

  /// Closed, outward-wound box meshes in world coordinates.
  TriangleMesh mesh_world() const;
  TriangleMesh mesh_camera() const;

  struct Hit {
    double depth = 0.0;  // camera z; 0 when nothing is hit
    std::optional<std::size_t> box;
  };
  /// Nearest entry of the ray through pixel (u, v) into any box.
  Hit raycast(double u, double v) const;
};

struct SynthConfig {
  int width = 320;
  int height = 240;
  double focal = 277.0;  // pixels, for the 320-wide image
  double voxel_size = 0.03;
  std::int32_t dims = 128;
  float tau = 3.0f;
};

struct SyntheticFrame {
  SyntheticScene scene;
  DepthMap depth;
  std::vector<std::uint32_t> hit_box;  // per pixel: box index + 1, 0 for no hit
  GridSpec spec;
  PanopticVolume gt;
  MaskSet2D masks;  // one mask per visible object
};

/// Deterministic per (seed, n_boxes, cfg): a room with up to `n_boxes`
/// non-overlapping objects on the floor, its exact depth map, ground-truth
/// volume and visible-object masks.
SyntheticFrame synth_scene(std::uint64_t seed, int n_boxes, const SynthConfig& cfg = {},
                           const CategoryTable& categories = CategoryTable::synthetic());

/// View-filter description of a synthetic frame.
ViewCandidate describe_view(const SyntheticFrame& frame, double central_fraction = 0.5);

}  // namespace panrec
