#include "panrec/sparse_volume.hpp"

#include <algorithm>
#include <cmath>

namespace panrec {

void GridSpec::validate() const {
  if (!(voxel_size > 0.0f) || !std::isfinite(voxel_size)) {
    throw InvalidArgument("voxel size must be positive");
  }
  for (auto d : dims) {
    if (d <= 0) throw InvalidArgument("grid dims must be positive");
  }
  for (auto o : origin) {
    if (!std::isfinite(o)) throw InvalidArgument("grid origin must be finite");
  }
}

GridSpec GridSpec::coarsened(int factor) const {
  GridSpec out = *this;
  out.voxel_size = voxel_size * static_cast<float>(factor);
  for (auto& d : out.dims) d /= factor;
  return out;
}

GridSpec frustum_grid(double voxel_size, std::int32_t dims) {
  return frustum_grid(voxel_size, {dims, dims, dims});
}

GridSpec frustum_grid(double voxel_size, std::array<std::int32_t, 3> dims) {
  GridSpec spec;
  spec.voxel_size = static_cast<float>(voxel_size);
  spec.dims = dims;
  spec.origin = {-0.5f * spec.voxel_size * static_cast<float>(dims[0]),
                 -0.5f * spec.voxel_size * static_cast<float>(dims[1]), 0.0f};
  spec.validate();
  return spec;
}

VoxelSet make_voxel_set(std::vector<VoxelCoord> coords) {
  std::sort(coords.begin(), coords.end(), CanonicalLess{});
  coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
  return coords;
}

bool is_voxel_set(std::span<const VoxelCoord> coords) {
  return std::adjacent_find(coords.begin(), coords.end(), [](const auto& a, const auto& b) {
           return !CanonicalLess{}(a, b);
         }) == coords.end();
}

std::size_t intersection_size(std::span<const VoxelCoord> a, std::span<const VoxelCoord> b) {
  std::size_t n = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  const CanonicalLess less;
  while (ia != a.end() && ib != b.end()) {
    if (less(*ia, *ib)) {
      ++ia;
    } else if (less(*ib, *ia)) {
      ++ib;
    } else {
      ++n;
      ++ia;
      ++ib;
    }
  }
  return n;
}

double iou_voxel_sets(std::span<const VoxelCoord> a, std::span<const VoxelCoord> b) {
  if (a.empty() && b.empty()) throw UndefinedIoU("IoU of two empty voxel sets");
  if (!is_voxel_set(a) || !is_voxel_set(b)) {
    throw InvalidArgument("IoU inputs must be canonical voxel sets");
  }
  const auto inter = intersection_size(a, b);
  const auto uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

bool axis_separates(const Vec3& axis, const Vec3& v0, const Vec3& v1, const Vec3& v2,
                    const Vec3& half) {
  const double p0 = axis.dot(v0);
  const double p1 = axis.dot(v1);
  const double p2 = axis.dot(v2);
  const double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
                   half.z() * std::abs(axis.z());
  const double lo = std::min({p0, p1, p2});
  const double hi = std::max({p0, p1, p2});
  return lo > r || hi < -r;
}

}  // namespace

bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half, const Vec3& a,
                          const Vec3& b, const Vec3& c) {
  const Vec3 v0 = a - box_center;
  const Vec3 v1 = b - box_center;
  const Vec3 v2 = c - box_center;
  const Vec3 half = box_half * (1.0 + 1e-9);

  // Box face normals.
  for (int axis = 0; axis < 3; ++axis) {
    const double lo = std::min({v0[axis], v1[axis], v2[axis]});
    const double hi = std::max({v0[axis], v1[axis], v2[axis]});
    if (lo > half[axis] || hi < -half[axis]) return false;
  }

  // Triangle plane.
  const Vec3 e0 = v1 - v0;
  const Vec3 e1 = v2 - v1;
  const Vec3 e2 = v0 - v2;
  const Vec3 normal = e0.cross(e1);
  const double r = half.x() * std::abs(normal.x()) + half.y() * std::abs(normal.y()) +
                   half.z() * std::abs(normal.z());
  if (std::abs(normal.dot(v0)) > r) return false;

  // Edge cross products.
  const Vec3 units[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  for (const Vec3& edge : {e0, e1, e2}) {
    for (const Vec3& u : units) {
      const Vec3 axis = u.cross(edge);
      if (axis.squaredNorm() == 0.0) continue;
      if (axis_separates(axis, v0, v1, v2, half)) return false;
    }
  }
  return true;
}

LabelVolume voxelize_mesh(const TriangleMesh& m, const GridSpec& spec) {
  m.validate();
  LabelVolume out(spec);
  const double s = spec.voxel_size;
  const Vec3 half = Vec3::Constant(0.5 * s);
  const Vec3 origin = spec.origin_vec();

  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Triangle& tri = m.triangles[t];
    const Vec3& a = m.vertices[tri[0]];
    const Vec3& b = m.vertices[tri[1]];
    const Vec3& c = m.vertices[tri[2]];
    const Vec3 lo = a.cwiseMin(b).cwiseMin(c);
    const Vec3 hi = a.cwiseMax(b).cwiseMax(c);

    std::array<std::int32_t, 3> first{}, last{};
    bool outside = false;
    for (int axis = 0; axis < 3; ++axis) {
      // One-voxel slack absorbs floor() at exact boundaries.
      const double f = std::floor((lo[axis] - origin[axis]) / s) - 1;
      const double l = std::floor((hi[axis] - origin[axis]) / s) + 1;
      first[axis] = static_cast<std::int32_t>(std::max(0.0, f));
      last[axis] = static_cast<std::int32_t>(std::min<double>(spec.dims[axis] - 1, l));
      if (first[axis] > last[axis]) outside = true;
    }
    if (outside) continue;

    const PanopticLabel label = m.has_labels() ? m.labels[t] : PanopticLabel{};
    for (std::int32_t k = first[2]; k <= last[2]; ++k) {
      for (std::int32_t j = first[1]; j <= last[1]; ++j) {
        for (std::int32_t i = first[0]; i <= last[0]; ++i) {
          const VoxelCoord vc{i, j, k};
          if (out.contains(vc)) continue;
          if (triangle_box_overlap(spec.center(vc), half, a, b, c)) out.try_emplace(vc, label);
        }
      }
    }
  }
  return out;
}

namespace {

struct FaceFrame {
  VoxelCoord step;
  Vec3 normal;
  Vec3 u;
  Vec3 v;
};

const std::array<FaceFrame, 6>& face_frames() {
  static const std::array<FaceFrame, 6> kFrames = {{
      {{1, 0, 0}, Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
      {{-1, 0, 0}, -Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY()},
      {{0, 1, 0}, Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX()},
      {{0, -1, 0}, -Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ()},
      {{0, 0, 1}, Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()},
      {{0, 0, -1}, -Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX()},
  }};
  return kFrames;
}

}  // namespace

TriangleMesh extract_surface_mesh(const PanopticVolume& v, float surface_threshold) {
  TriangleMesh mesh;
  auto on_surface = [&](const VoxelCoord& c) {
    const PanopticVoxel* p = v.find(c);
    return p != nullptr && std::abs(p->sdf) < surface_threshold;
  };

  const double h = 0.5 * v.spec().voxel_size * (1.0 - kFaceInset);
  v.for_each([&](const VoxelCoord& c, const PanopticVoxel& voxel) {
    if (!(std::abs(voxel.sdf) < surface_threshold)) return;
    const Vec3 center = v.spec().center(c);
    for (const FaceFrame& f : face_frames()) {
      if (on_surface({c.i + f.step.i, c.j + f.step.j, c.k + f.step.k})) continue;
      const Vec3 face_center = center + f.normal * h;
      const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
      mesh.vertices.push_back(face_center + (-f.u - f.v) * h);
      mesh.vertices.push_back(face_center + (f.u - f.v) * h);
      mesh.vertices.push_back(face_center + (f.u + f.v) * h);
      mesh.vertices.push_back(face_center + (-f.u + f.v) * h);
      mesh.triangles.push_back({base, base + 1, base + 2});
      mesh.triangles.push_back({base, base + 2, base + 3});
      mesh.labels.push_back(voxel.label());
      mesh.labels.push_back(voxel.label());
    }
  });
  return mesh;
}

std::array<VoxelCoord, 8> children_of(const VoxelCoord& c) {
  std::array<VoxelCoord, 8> out{};
  int n = 0;
  for (int dk = 0; dk < 2; ++dk) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int di = 0; di < 2; ++di) {
        out[n++] = {2 * c.i + di, 2 * c.j + dj, 2 * c.k + dk};
      }
    }
  }
  return out;
}

namespace detail {

void check_downsample(const GridSpec& spec, int factor) {
  if (factor != 2 && factor != 4) throw InvalidArgument("downsample factor must be 2 or 4");
  for (auto d : spec.dims) {
    if (d % factor != 0) throw InvalidArgument("grid dims not divisible by downsample factor");
  }
}

}  // namespace detail

}  // namespace panrec
