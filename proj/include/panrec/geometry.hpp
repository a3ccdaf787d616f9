#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "panrec/types.hpp"

namespace panrec {

/// Pinhole intrinsics. Camera frame is +x right, +y down, +z forward, and
/// integer pixel coordinates address pixel centers.
struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  double z_near = 0.1;
  double z_far = 10.0;

  /// Throws InvalidArgument when any invariant is broken.
  void validate() const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

/// Multi-channel float image, row-major with interleaved channels.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }

  float& at(int u, int v, int c = 0) { return data_[index(u, v) + c]; }
  float at(int u, int v, int c = 0) const { return data_[index(u, v) + c]; }

  std::span<const float> pixel(int u, int v) const {
    return {data_.data() + index(u, v), static_cast<std::size_t>(channels_)};
  }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }

 private:
  std::size_t index(int u, int v) const {
    return (static_cast<std::size_t>(v) * width_ + u) * channels_;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Per-pixel metric z-depth. Non-finite and non-positive values are invalid.
class DepthMap {
 public:
  static constexpr float kInvalid = 0.0f;

  DepthMap() = default;
  DepthMap(int width, int height, float fill = kInvalid);

  int width() const { return width_; }
  int height() const { return height_; }

  float& at(int u, int v) { return values_[static_cast<std::size_t>(v) * width_ + u]; }
  float at(int u, int v) const { return values_[static_cast<std::size_t>(v) * width_ + u]; }

  bool valid(int u, int v) const {
    const float d = at(u, v);
    return std::isfinite(d) && d > 0.0f;
  }

  std::span<float> values() { return values_; }
  std::span<const float> values() const { return values_; }

  std::size_t valid_count() const;

  /// Throws InvalidArgument unless dimensions match `K`.
  void check_matches(const CameraIntrinsics& K) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

Vec3 unproject_pixel(double u, double v, double d, const CameraIntrinsics& K);
PixelDepth project_point(const Vec3& p, const CameraIntrinsics& K);

/// Boundary tolerance of the half-space tests, in meters.
inline constexpr double kPlaneEpsilon = 1e-6;

struct Plane {
  Vec3 normal = Vec3::Zero();  // unit length, pointing inside
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) + offset; }
};

class Frustum {
 public:
  Frustum() = default;
  explicit Frustum(const CameraIntrinsics& K);

  const std::array<Plane, 6>& planes() const { return planes_; }

  bool contains(const Vec3& p) const {
    for (const Plane& plane : planes_) {
      if (plane.signed_distance(p) < -kPlaneEpsilon) return false;
    }
    return true;
  }

  /// Conservative AABB test: false only if the box is fully outside one plane.
  bool may_intersect_box(const Vec3& lo, const Vec3& hi) const;

 private:
  std::array<Plane, 6> planes_{};
};

inline bool frustum_contains(const Frustum& f, const Vec3& p) { return f.contains(p); }

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<PanopticLabel> labels;  // empty, or one per triangle

  bool has_labels() const { return !labels.empty(); }
  bool empty() const { return triangles.empty(); }

  /// Throws InvalidArgument on out-of-range indices or a label count mismatch.
  void validate() const;

  double triangle_area(std::size_t t) const;

  /// Appends `other`, offsetting its indices.
  void append(const TriangleMesh& other);
};

TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose);

/// Keeps every non-degenerate triangle with at least one vertex in `f`.
/// Unreferenced vertices are dropped; the surviving ones keep their order.
TriangleMesh cull_mesh_to_frustum(const TriangleMesh& m, const Frustum& f);

}  // namespace panrec
