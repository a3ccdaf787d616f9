#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "panrec/geometry.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = 0.0;
  // Feature of the triangle holding `point`: 0 face, 1..3 edges ab/bc/ca,
  // 4..6 vertices a/b/c.
  int feature = 0;
};

ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Signed distance of `p` to a closed triangle mesh, signed by the
/// angle-weighted pseudo-normal of the nearest feature. Slow reference path
/// over all triangles.
double signed_distance_to_mesh(const TriangleMesh& m, const Vec3& p);

/// Ground-truth TSDF of a labeled camera-space mesh: every in-frustum voxel
/// center within tau voxels of the surface gets its signed distance in voxel
/// units, clamped to [-tau, tau]. Surface voxels (|sdf| < 1) take the label of
/// the nearest triangle (ties to the smaller index); the rest are freespace.
PanopticVolume mesh_to_tsdf_gt(const TriangleMesh& m, const CameraIntrinsics& K,
                               const GridSpec& spec, float tau, CategoryId freespace = 0);

struct FusionFrame {
  DepthMap depth;
  CameraIntrinsics K;
  Pose camera_to_world = Pose::Identity();
  std::vector<std::uint8_t> valid;  // optional per-pixel mask; empty keeps all
};

struct FusionConfig {
  double voxel_size = 0.03;
  float tau = 3.0f;  // voxel units

  void validate() const;
};

/// Weighted-average TSDF integration with projective distances: each frame
/// contributes clamp((d - z) / s) with unit weight when |d - z| / s < tau.
/// `spec.voxel_size` must equal `cfg.voxel_size` (to f32 precision).
DistanceVolume volumetric_fuse_depths(std::span<const FusionFrame> frames, const GridSpec& spec,
                                      const FusionConfig& cfg);

struct ClassWeightTable {
  std::vector<double> weights;  // indexed by category id
  std::optional<CategoryId> freespace;

  double at(CategoryId c) const;
};

inline constexpr double kFreespaceWeight = 0.001;

/// w_c = 1 / ln(1 + f_c), f_c = count_c / Σ counts (freespace excluded from
/// the sum). Zero-count categories get the largest computed weight and the
/// freespace category, when given, is pinned to 0.001.
ClassWeightTable class_weights_inverse_log(std::span<const std::uint64_t> counts,
                                           std::optional<CategoryId> freespace = 0);

/// Scene description for the view-sampling filter. World frame is y-up with
/// the floor at `floor_height`.
struct ViewObject {
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  std::size_t visible_pixels = 0;
  std::size_t central_pixels = 0;  // visible pixels inside the central region
};

struct ViewCandidate {
  Vec3 camera_position = Vec3::Zero();
  double floor_height = 0.0;
  std::vector<ViewObject> objects;
};

struct ViewFilterConfig {
  double camera_height = 0.75;
  double height_tolerance = 1e-6;
  double min_range = 1.0;
  double max_range = 7.0;
  std::size_t min_object_pixels = 200;
  double central_fraction = 0.5;  // side of the central window relative to the image
};

/// Keeps a view when the camera is at the sampling height, not inside or
/// above any object, some object has pixels in the central region, some
/// object lies 1-7 m away, and no rendered object covers fewer than 200
/// pixels.
bool accept_view(const ViewCandidate& view, const ViewFilterConfig& cfg = {});

/// Counts mask pixels inside the centered window of `central_fraction`.
std::size_t central_region_pixels(std::span<const std::uint8_t> mask, int width, int height,
                                  double central_fraction = 0.5);

}  // namespace panrec
