#include "panrec/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "panrec/parallel.hpp"

namespace panrec {

ClosestPoint closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Voronoi-region walk over the triangle's vertices, edges and face.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  auto done = [&p](const Vec3& q, int feature) { return ClosestPoint{q, (p - q).norm(), feature}; };
  if (d1 <= 0.0 && d2 <= 0.0) return done(a, 4);

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return done(b, 5);

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return done(a + ab * (d1 / (d1 - d3)), 1);

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return done(c, 6);

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return done(a + ac * (d2 / (d2 - d6)), 3);

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return done(b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6))), 2);
  }
  const double denom = 1.0 / (va + vb + vc);
  return done(a + ab * (vb * denom) + ac * (vc * denom), 0);
}

namespace {

// Welded connectivity with angle-weighted vertex and summed edge normals.
struct PseudoNormals {
  std::vector<std::array<std::uint32_t, 3>> welded;
  std::vector<Vec3> face;
  std::vector<Vec3> vertex;
  std::map<std::pair<std::uint32_t, std::uint32_t>, Vec3> edge;

  explicit PseudoNormals(const TriangleMesh& m) {
    std::map<std::array<double, 3>, std::uint32_t> ids;
    std::vector<std::uint32_t> remap(m.vertices.size());
    for (std::size_t v = 0; v < m.vertices.size(); ++v) {
      const Vec3& p = m.vertices[v];
      remap[v] = ids.try_emplace({p.x(), p.y(), p.z()}, static_cast<std::uint32_t>(ids.size()))
                     .first->second;
    }
    vertex.assign(ids.size(), Vec3::Zero());
    welded.reserve(m.triangles.size());
    face.reserve(m.triangles.size());
    for (const Triangle& t : m.triangles) {
      const std::array<std::uint32_t, 3> w{remap[t[0]], remap[t[1]], remap[t[2]]};
      welded.push_back(w);
      const Vec3 &a = m.vertices[t[0]], &b = m.vertices[t[1]], &c = m.vertices[t[2]];
      Vec3 n = (b - a).cross(c - a);
      const double len = n.norm();
      n = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
      face.push_back(n);
      if (len == 0.0) continue;
      const std::array<Vec3, 3> p{a, b, c};
      for (int i = 0; i < 3; ++i) {
        const Vec3 e1 = (p[(i + 1) % 3] - p[i]).normalized();
        const Vec3 e2 = (p[(i + 2) % 3] - p[i]).normalized();
        vertex[w[i]] += std::acos(std::clamp(e1.dot(e2), -1.0, 1.0)) * n;
        const auto key = std::minmax(w[i], w[(i + 1) % 3]);
        auto [it, inserted] = edge.try_emplace({key.first, key.second}, Vec3::Zero());
        it->second += n;
      }
    }
  }

  Vec3 normal(std::size_t t, int feature) const {
    const auto& w = welded[t];
    if (feature == 0) return face[t];
    if (feature <= 3) {
      const int i = feature - 1;  // ab, bc, ca
      const auto key = std::minmax(w[i], w[(i + 1) % 3]);
      return edge.at({key.first, key.second});
    }
    return vertex[w[feature - 4]];
  }
};

struct Nearest {
  double distance = std::numeric_limits<double>::infinity();
  std::uint32_t triangle = 0;
  int feature = 0;
  Vec3 point = Vec3::Zero();
};

double signed_from(const Nearest& n, const Vec3& p, const PseudoNormals& normals) {
  if (n.distance == 0.0) return 0.0;
  return normals.normal(n.triangle, n.feature).dot(p - n.point) < 0.0 ? -n.distance : n.distance;
}

}  // namespace

double signed_distance_to_mesh(const TriangleMesh& m, const Vec3& p) {
  m.validate();
  if (m.empty()) throw InvalidArgument("signed distance to an empty mesh");
  const PseudoNormals normals(m);
  Nearest best;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    if (normals.face[t].isZero()) continue;
    const Triangle& tri = m.triangles[t];
    const ClosestPoint cp =
        closest_point_on_triangle(p, m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
    if (cp.distance < best.distance) best = {cp.distance, static_cast<std::uint32_t>(t), cp.feature, cp.point};
  }
  return signed_from(best, p, normals);
}

PanopticVolume mesh_to_tsdf_gt(const TriangleMesh& m, const CameraIntrinsics& K,
                               const GridSpec& spec, float tau, CategoryId freespace) {
  K.validate();
  spec.validate();
  m.validate();
  if (!(tau > 0.0f)) throw InvalidArgument("truncation tau must be positive");
  PanopticVolume out(spec);
  if (m.empty()) return out;
  if (!m.has_labels()) throw InvalidArgument("ground-truth mesh carries no labels");

  const PseudoNormals normals(m);
  const Frustum frustum(K);
  const double s = spec.voxel_size;
  const double band = tau * s;

  // Voxel range touched by each triangle's band-expanded bounding box.
  struct Range {
    VoxelCoord lo, hi;
  };
  std::vector<Range> ranges(m.triangles.size());
  std::vector<char> usable(m.triangles.size(), 0);
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    if (normals.face[t].isZero()) continue;  // zero-area faces carry no surface
    const Triangle& tri = m.triangles[t];
    Vec3 lo = m.vertices[tri[0]], hi = lo;
    for (int i = 1; i < 3; ++i) {
      lo = lo.cwiseMin(m.vertices[tri[i]]);
      hi = hi.cwiseMax(m.vertices[tri[i]]);
    }
    const Vec3 pad = Vec3::Constant(band);
    VoxelCoord a = spec.coord_of(lo - pad), b = spec.coord_of(hi + pad);
    a = {std::max(a.i, 0), std::max(a.j, 0), std::max(a.k, 0)};
    b = {std::min(b.i, spec.dims[0] - 1), std::min(b.j, spec.dims[1] - 1),
         std::min(b.k, spec.dims[2] - 1)};
    if (a.i > b.i || a.j > b.j || a.k > b.k) continue;
    ranges[t] = {a, b};
    usable[t] = 1;
  }

  const auto nx = static_cast<std::size_t>(spec.dims[0]);
  const auto ny = static_cast<std::size_t>(spec.dims[1]);
  std::vector<std::vector<std::pair<VoxelCoord, PanopticVoxel>>> slices(spec.dims[2]);
  parallel_for(0, slices.size(), [&](std::size_t ks) {
    const auto k = static_cast<std::int32_t>(ks);
    std::vector<Nearest> best;
    std::vector<std::int8_t> inside;  // -1 unknown, 0 outside frustum, 1 inside
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      if (!usable[t] || k < ranges[t].lo.k || k > ranges[t].hi.k) continue;
      if (best.empty()) {
        best.assign(nx * ny, Nearest{});
        inside.assign(nx * ny, -1);
      }
      const Triangle& tri = m.triangles[t];
      const Vec3 &a = m.vertices[tri[0]], &b = m.vertices[tri[1]], &c = m.vertices[tri[2]];
      for (std::int32_t j = ranges[t].lo.j; j <= ranges[t].hi.j; ++j) {
        for (std::int32_t i = ranges[t].lo.i; i <= ranges[t].hi.i; ++i) {
          const std::size_t idx = static_cast<std::size_t>(j) * nx + i;
          const Vec3 p = spec.center({i, j, k});
          if (inside[idx] < 0) inside[idx] = frustum.contains(p) ? 1 : 0;
          if (!inside[idx]) continue;
          const ClosestPoint cp = closest_point_on_triangle(p, a, b, c);
          if (cp.distance < best[idx].distance) {
            best[idx] = {cp.distance, static_cast<std::uint32_t>(t), cp.feature, cp.point};
          }
        }
      }
    }
    if (best.empty()) return;
    auto& cells = slices[ks];
    for (std::int32_t j = 0; j < spec.dims[1]; ++j) {
      for (std::int32_t i = 0; i < spec.dims[0]; ++i) {
        const Nearest& n = best[static_cast<std::size_t>(j) * nx + i];
        if (!(n.distance < band)) continue;
        const VoxelCoord c{i, j, k};
        const double sd = signed_from(n, spec.center(c), normals) / s;
        PanopticVoxel v{static_cast<float>(std::clamp<double>(sd, -tau, tau)), freespace, kNoInstance};
        if (std::abs(v.sdf) < 1.0f) {
          v.semantic = m.labels[n.triangle].semantic;
          v.instance = m.labels[n.triangle].instance;
        }
        cells.emplace_back(c, v);
      }
    }
  });

  std::size_t total = 0;
  for (const auto& sl : slices) total += sl.size();
  out.reserve(total);
  for (const auto& sl : slices) {
    for (const auto& [c, v] : sl) out.insert_or_assign(c, v);
  }
  return out;
}

void FusionConfig::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw InvalidArgument("fusion voxel size must be positive");
  if (!(tau > 0.0f)) throw InvalidArgument("fusion truncation must be positive");
}

DistanceVolume volumetric_fuse_depths(std::span<const FusionFrame> frames, const GridSpec& spec,
                                      const FusionConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (frames.empty()) throw InvalidArgument("fusion needs at least one frame");
  if (static_cast<float>(cfg.voxel_size) != spec.voxel_size) {
    throw InvalidArgument("fusion voxel size differs from the grid voxel size");
  }
  std::vector<Pose> world_to_camera;
  for (const FusionFrame& f : frames) {
    f.K.validate();
    f.depth.check_matches(f.K);
    if (!f.valid.empty() && f.valid.size() != f.depth.values().size()) {
      throw InvalidArgument("fusion validity mask does not match its depth map");
    }
    world_to_camera.push_back(f.camera_to_world.inverse());
  }

  const double s = spec.voxel_size;
  std::vector<std::vector<std::pair<VoxelCoord, float>>> slices(spec.dims[2]);
  parallel_for(0, slices.size(), [&](std::size_t ks) {
    const auto k = static_cast<std::int32_t>(ks);
    for (std::int32_t j = 0; j < spec.dims[1]; ++j) {
      for (std::int32_t i = 0; i < spec.dims[0]; ++i) {
        const VoxelCoord c{i, j, k};
        const Vec3 world = spec.center(c);
        double sum = 0.0;
        int weight = 0;
        for (std::size_t f = 0; f < frames.size(); ++f) {
          const FusionFrame& frame = frames[f];
          const Vec3 p = world_to_camera[f] * world;
          if (!(p.z() > 0.0)) continue;
          const auto u = static_cast<long>(std::lround(frame.K.fx * p.x() / p.z() + frame.K.cx));
          const auto v = static_cast<long>(std::lround(frame.K.fy * p.y() / p.z() + frame.K.cy));
          if (u < 0 || v < 0 || u >= frame.K.width || v >= frame.K.height) continue;
          const int ui = static_cast<int>(u), vi = static_cast<int>(v);
          if (!frame.depth.valid(ui, vi)) continue;
          if (!frame.valid.empty() && !frame.valid[static_cast<std::size_t>(vi) * frame.K.width + ui]) continue;
          const double sd = (frame.depth.at(ui, vi) - p.z()) / s;
          if (!(std::abs(sd) < cfg.tau)) continue;
          sum += sd;
          ++weight;
        }
        if (weight > 0) slices[ks].emplace_back(c, static_cast<float>(sum / weight));
      }
    }
  });

  DistanceVolume out(spec);
  for (const auto& sl : slices) {
    for (const auto& [c, d] : sl) out.insert_or_assign(c, d);
  }
  return out;
}

double ClassWeightTable::at(CategoryId c) const {
  if (c >= weights.size()) throw InvalidArgument("no class weight for category " + std::to_string(c));
  return weights[c];
}

ClassWeightTable class_weights_inverse_log(std::span<const std::uint64_t> counts,
                                           std::optional<CategoryId> freespace) {
  if (freespace && *freespace >= counts.size()) throw InvalidArgument("freespace id outside the count table");
  double total = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (freespace && c == *freespace) continue;
    total += static_cast<double>(counts[c]);
  }
  if (!(total > 0.0)) throw InvalidArgument("class counts are all zero");

  ClassWeightTable out{std::vector<double>(counts.size(), 0.0), freespace};
  double max_weight = 0.0;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if ((freespace && c == *freespace) || counts[c] == 0) continue;
    out.weights[c] = 1.0 / std::log1p(static_cast<double>(counts[c]) / total);
    max_weight = std::max(max_weight, out.weights[c]);
  }
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] == 0) out.weights[c] = max_weight;
  }
  if (freespace) out.weights[*freespace] = kFreespaceWeight;
  return out;
}

std::size_t central_region_pixels(std::span<const std::uint8_t> mask, int width, int height,
                                  double central_fraction) {
  if (mask.size() != static_cast<std::size_t>(width) * height) {
    throw InvalidArgument("mask size does not match its image");
  }
  const double margin = (1.0 - central_fraction) / 2.0;
  const int u0 = static_cast<int>(std::floor(width * margin));
  const int v0 = static_cast<int>(std::floor(height * margin));
  const int u1 = width - u0, v1 = height - v0;
  std::size_t n = 0;
  for (int v = v0; v < v1; ++v) {
    for (int u = u0; u < u1; ++u) n += mask[static_cast<std::size_t>(v) * width + u] != 0;
  }
  return n;
}

bool accept_view(const ViewCandidate& view, const ViewFilterConfig& cfg) {
  const Vec3& cam = view.camera_position;
  if (std::abs(cam.y() - view.floor_height - cfg.camera_height) > cfg.height_tolerance) return false;

  bool central = false, in_range = false;
  for (const ViewObject& o : view.objects) {
    // Inside or above: the camera's floor position falls in the footprint.
    const bool over_footprint = cam.x() >= o.box_min.x() && cam.x() <= o.box_max.x() &&
                                cam.z() >= o.box_min.z() && cam.z() <= o.box_max.z();
    if (over_footprint && cam.y() >= o.box_min.y()) return false;
    if (o.visible_pixels > 0 && o.visible_pixels < cfg.min_object_pixels) return false;
    central = central || o.central_pixels > 0;
    const Vec3 nearest = cam.cwiseMax(o.box_min).cwiseMin(o.box_max);
    const double d = (nearest - cam).norm();
    in_range = in_range || (d >= cfg.min_range && d <= cfg.max_range);
  }
  return central && in_range;
}

}  // namespace panrec
