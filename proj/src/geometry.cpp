#include "panrec/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "panrec/error.hpp"

namespace panrec {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw InvalidArgument("image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw InvalidArgument("principal point outside the image");
  }
  if (!(z_near > 0.0) || !(z_near < z_far)) {
    throw InvalidArgument("depth range requires 0 < z_near < z_far");
  }
}

Raster::Raster(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 0) {
    throw InvalidArgument("raster dimensions must be non-negative");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

DepthMap::DepthMap(int width, int height, float fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidArgument("depth map dimensions must be non-negative");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

std::size_t DepthMap::valid_count() const {
  std::size_t n = 0;
  for (float d : values_) n += (std::isfinite(d) && d > 0.0f) ? 1 : 0;
  return n;
}

void DepthMap::check_matches(const CameraIntrinsics& K) const {
  if (width_ != K.width || height_ != K.height) {
    throw InvalidArgument("depth map is " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " but intrinsics expect " +
                          std::to_string(K.width) + "x" + std::to_string(K.height));
  }
}

Vec3 unproject_pixel(double u, double v, double d, const CameraIntrinsics& K) {
  if (!(d > 0.0) || !std::isfinite(d)) throw InvalidArgument("depth must be positive");
  if (!(u >= 0.0 && u < K.width && v >= 0.0 && v < K.height)) {
    throw InvalidArgument("pixel outside image bounds");
  }
  return {(u - K.cx) * d / K.fx, (v - K.cy) * d / K.fy, d};
}

PixelDepth project_point(const Vec3& p, const CameraIntrinsics& K) {
  if (!(p.z() > 0.0)) throw BehindCamera("point is behind the camera");
  return {K.fx * p.x() / p.z() + K.cx, K.fy * p.y() / p.z() + K.cy, p.z()};
}

namespace {

Plane make_plane(const Vec3& n, double offset) {
  const double len = n.norm();
  return {n / len, offset / len};
}

}  // namespace

Frustum::Frustum(const CameraIntrinsics& K) {
  K.validate();
  const double w = K.width;
  const double h = K.height;
  // u >= 0, u <= W, v >= 0, v <= H rewritten as linear inequalities in (x, z).
  planes_[0] = make_plane({K.fx, 0.0, K.cx}, 0.0);
  planes_[1] = make_plane({-K.fx, 0.0, w - K.cx}, 0.0);
  planes_[2] = make_plane({0.0, K.fy, K.cy}, 0.0);
  planes_[3] = make_plane({0.0, -K.fy, h - K.cy}, 0.0);
  planes_[4] = {{0.0, 0.0, 1.0}, -K.z_near};
  planes_[5] = {{0.0, 0.0, -1.0}, K.z_far};
}

bool Frustum::may_intersect_box(const Vec3& lo, const Vec3& hi) const {
  for (const Plane& plane : planes_) {
    // Corner furthest along the inward normal.
    const Vec3 corner(plane.normal.x() >= 0 ? hi.x() : lo.x(),
                      plane.normal.y() >= 0 ? hi.y() : lo.y(),
                      plane.normal.z() >= 0 ? hi.z() : lo.z());
    if (plane.signed_distance(corner) < -kPlaneEpsilon) return false;
  }
  return true;
}

void TriangleMesh::validate() const {
  const auto n = vertices.size();
  for (const Triangle& t : triangles) {
    for (auto idx : t) {
      if (idx >= n) throw InvalidArgument("triangle index out of range");
    }
  }
  if (!labels.empty() && labels.size() != triangles.size()) {
    throw InvalidArgument("label count does not match triangle count");
  }
}

double TriangleMesh::triangle_area(std::size_t t) const {
  const Triangle& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

void TriangleMesh::append(const TriangleMesh& other) {
  if (has_labels() != other.has_labels() && !empty() && !other.empty()) {
    throw InvalidArgument("cannot append labeled and unlabeled meshes");
  }
  const auto base = static_cast<std::uint32_t>(vertices.size());
  vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
  for (const Triangle& t : other.triangles) {
    triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

TriangleMesh transformed(const TriangleMesh& mesh, const Pose& pose) {
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = pose * v;
  return out;
}

TriangleMesh cull_mesh_to_frustum(const TriangleMesh& m, const Frustum& f) {
  m.validate();
  std::vector<char> inside(m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) inside[i] = f.contains(m.vertices[i]);

  constexpr auto kUnused = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> remap(m.vertices.size(), kUnused);
  std::vector<std::size_t> kept;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Triangle& tri = m.triangles[t];
    if (!(inside[tri[0]] || inside[tri[1]] || inside[tri[2]])) continue;
    if (!(m.triangle_area(t) > 0.0)) continue;
    kept.push_back(t);
    for (auto idx : tri) remap[idx] = 0;
  }

  TriangleMesh out;
  for (std::size_t i = 0; i < m.vertices.size(); ++i) {
    if (remap[i] == kUnused) continue;
    remap[i] = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(m.vertices[i]);
  }
  for (std::size_t t : kept) {
    const Triangle& tri = m.triangles[t];
    out.triangles.push_back({remap[tri[0]], remap[tri[1]], remap[tri[2]]});
    if (m.has_labels()) out.labels.push_back(m.labels[t]);
  }
  return out;
}

}  // namespace panrec
