#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "panrec/error.hpp"
#include "panrec/geometry.hpp"
#include "panrec/keyed_hash.hpp"
#include "panrec/types.hpp"

namespace panrec {

struct VoxelCoord {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::int32_t k = 0;

  friend bool operator==(const VoxelCoord&, const VoxelCoord&) = default;
};

/// Canonical order: lexicographic by (k, j, i).
struct CanonicalLess {
  bool operator()(const VoxelCoord& a, const VoxelCoord& b) const noexcept {
    return std::tie(a.k, a.j, a.i) < std::tie(b.k, b.j, b.i);
  }
};

struct VoxelCoordHash {
  std::size_t operator()(const VoxelCoord& c) const noexcept {
    const auto packed = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.i)) * 0x9e3779b1ULL) ^
                        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.j)) << 21) ^
                        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.k)) << 42);
    return static_cast<std::size_t>(mix64(packed));
  }
};

/// Axis-aligned voxel grid. Sizes are stored as f32 so the on-disk header
/// reproduces the in-memory spec exactly.
struct GridSpec {
  float voxel_size = 0.03f;
  std::array<float, 3> origin{0.0f, 0.0f, 0.0f};
  std::array<std::int32_t, 3> dims{0, 0, 0};

  void validate() const;

  Vec3 origin_vec() const { return {origin[0], origin[1], origin[2]}; }

  bool contains(const VoxelCoord& c) const {
    return c.i >= 0 && c.j >= 0 && c.k >= 0 && c.i < dims[0] && c.j < dims[1] && c.k < dims[2];
  }

  Vec3 center(const VoxelCoord& c) const {
    const double s = voxel_size;
    return {(c.i + 0.5) * s + origin[0], (c.j + 0.5) * s + origin[1], (c.k + 0.5) * s + origin[2]};
  }

  Vec3 corner(const VoxelCoord& c) const {
    const double s = voxel_size;
    return {c.i * s + origin[0], c.j * s + origin[1], c.k * s + origin[2]};
  }

  /// Voxel containing `p` (may lie outside the grid).
  VoxelCoord coord_of(const Vec3& p) const {
    const double s = voxel_size;
    return {static_cast<std::int32_t>(std::floor((p.x() - origin[0]) / s)),
            static_cast<std::int32_t>(std::floor((p.y() - origin[1]) / s)),
            static_cast<std::int32_t>(std::floor((p.z() - origin[2]) / s))};
  }

  std::int64_t cell_count() const {
    return static_cast<std::int64_t>(dims[0]) * dims[1] * dims[2];
  }

  /// Same origin, voxel size times `factor`, dims divided by `factor`.
  GridSpec coarsened(int factor) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Grid whose x/y extents are centered on the optical axis and whose z range
/// starts at the camera.
GridSpec frustum_grid(double voxel_size, std::int32_t dims);
GridSpec frustum_grid(double voxel_size, std::array<std::int32_t, 3> dims);

/// Hash-indexed sparse voxel container. Lookups are O(1); every ordered view
/// (`coords`, `cells`, `for_each`) is canonical.
template <typename P>
class SparseVolume {
 public:
  using Payload = P;
  using Cell = std::pair<VoxelCoord, P>;
  using Map = std::unordered_map<VoxelCoord, P, VoxelCoordHash>;

  SparseVolume() = default;
  explicit SparseVolume(GridSpec spec) : spec_(spec) { spec_.validate(); }

  const GridSpec& spec() const { return spec_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }
  void reserve(std::size_t n) { cells_.reserve(n); }

  bool contains(const VoxelCoord& c) const { return cells_.find(c) != cells_.end(); }

  const P* find(const VoxelCoord& c) const {
    auto it = cells_.find(c);
    return it == cells_.end() ? nullptr : &it->second;
  }
  P* find(const VoxelCoord& c) {
    auto it = cells_.find(c);
    return it == cells_.end() ? nullptr : &it->second;
  }

  P& insert_or_assign(const VoxelCoord& c, P value) {
    check_bounds(c);
    return cells_.insert_or_assign(c, std::move(value)).first->second;
  }

  /// Inserts `value` only if `c` is absent. Returns the stored payload and
  /// whether an insertion happened.
  std::pair<P*, bool> try_emplace(const VoxelCoord& c, P value) {
    check_bounds(c);
    auto [it, inserted] = cells_.try_emplace(c, std::move(value));
    return {&it->second, inserted};
  }

  bool erase(const VoxelCoord& c) { return cells_.erase(c) > 0; }
  void clear() { cells_.clear(); }

  /// Unordered access for hot loops that do not depend on iteration order.
  const Map& unordered() const { return cells_; }

  std::vector<VoxelCoord> coords() const {
    std::vector<VoxelCoord> out;
    out.reserve(cells_.size());
    for (const auto& kv : cells_) out.push_back(kv.first);
    std::sort(out.begin(), out.end(), CanonicalLess{});
    return out;
  }

  std::vector<Cell> cells() const {
    std::vector<Cell> out(cells_.begin(), cells_.end());
    std::sort(out.begin(), out.end(),
              [](const Cell& a, const Cell& b) { return CanonicalLess{}(a.first, b.first); });
    return out;
  }

  template <typename F>
  void for_each(F&& f) const {
    for (const VoxelCoord& c : coords()) f(c, cells_.at(c));
  }

  friend bool operator==(const SparseVolume& a, const SparseVolume& b) {
    return a.spec_ == b.spec_ && a.cells_ == b.cells_;
  }

 private:
  void check_bounds(const VoxelCoord& c) const {
    if (!spec_.contains(c)) {
      throw InvalidArgument("voxel (" + std::to_string(c.i) + "," + std::to_string(c.j) + "," +
                            std::to_string(c.k) + ") outside grid");
    }
  }

  GridSpec spec_;
  Map cells_;
};

struct PanopticVoxel {
  float sdf = 0.0f;  // voxel units
  CategoryId semantic = 0;
  InstanceId instance = kNoInstance;

  PanopticLabel label() const { return {semantic, instance}; }
  friend bool operator==(const PanopticVoxel&, const PanopticVoxel&) = default;
};

using DistanceVolume = SparseVolume<float>;
using VectorVolume = SparseVolume<std::vector<float>>;
using OccupancyVolume = SparseVolume<std::uint8_t>;
using LabelVolume = SparseVolume<PanopticLabel>;
using PanopticVolume = SparseVolume<PanopticVoxel>;

/// Sorted (canonical), duplicate-free list of voxel coordinates.
using VoxelSet = std::vector<VoxelCoord>;

VoxelSet make_voxel_set(std::vector<VoxelCoord> coords);
bool is_voxel_set(std::span<const VoxelCoord> coords);

template <typename P>
VoxelSet support(const SparseVolume<P>& v) {
  return v.coords();
}

/// |a ∩ b| / |a ∪ b| over canonical voxel sets. Throws UndefinedIoU when both
/// are empty and InvalidArgument when an input is not canonical.
double iou_voxel_sets(std::span<const VoxelCoord> a, std::span<const VoxelCoord> b);
std::size_t intersection_size(std::span<const VoxelCoord> a, std::span<const VoxelCoord> b);

/// Separating-axis triangle/box overlap. Touching counts as overlapping.
bool triangle_box_overlap(const Vec3& box_center, const Vec3& box_half, const Vec3& a,
                          const Vec3& b, const Vec3& c);

/// Occupies every voxel whose cube intersects a triangle; the label comes from
/// the smallest intersecting triangle index.
LabelVolume voxelize_mesh(const TriangleMesh& m, const GridSpec& spec);

/// Fraction of the voxel size by which emitted faces are pulled toward their
/// voxel center, so each face lies strictly inside the voxel that owns it.
inline constexpr double kFaceInset = 1e-3;

/// Blocky meshing of {|sdf| < surface_threshold}: two triangles per exposed
/// voxel face, labeled with the voxel's (semantic, instance).
TriangleMesh extract_surface_mesh(const PanopticVolume& v, float surface_threshold);

/// Coarse voxel occupied iff any of its factor³ children is. factor ∈ {2, 4}.
template <typename P>
OccupancyVolume downsample_occupancy(const SparseVolume<P>& v, int factor);

/// Eight children of each coordinate at the next finer level.
std::array<VoxelCoord, 8> children_of(const VoxelCoord& c);

inline VoxelCoord parent_of(const VoxelCoord& c, int factor = 2) {
  auto fdiv = [factor](std::int32_t x) {
    return static_cast<std::int32_t>(x >= 0 ? x / factor : -((-x + factor - 1) / factor));
  };
  return {fdiv(c.i), fdiv(c.j), fdiv(c.k)};
}

namespace detail {
void check_downsample(const GridSpec& spec, int factor);
}

template <typename P>
OccupancyVolume downsample_occupancy(const SparseVolume<P>& v, int factor) {
  detail::check_downsample(v.spec(), factor);
  OccupancyVolume out(v.spec().coarsened(factor));
  out.reserve(v.size() / 4 + 1);
  for (const auto& kv : v.unordered()) out.insert_or_assign(parent_of(kv.first, factor), 1);
  return out;
}

}  // namespace panrec
