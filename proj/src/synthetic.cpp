#include "panrec/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "panrec/keyed_hash.hpp"

namespace panrec {

namespace {

constexpr double kSlab = 0.1;  // floor and wall thickness

TriangleMesh box_mesh(const LabeledBox& b) {
  TriangleMesh m;
  for (int n = 0; n < 8; ++n) {
    m.vertices.emplace_back(n & 1 ? b.max.x() : b.min.x(), n & 2 ? b.max.y() : b.min.y(),
                            n & 4 ? b.max.z() : b.min.z());
  }
  // Counter-clockwise seen from outside.
  m.triangles = {{0, 4, 6}, {0, 6, 2}, {1, 3, 7}, {1, 7, 5},   // -x, +x
                 {0, 1, 5}, {0, 5, 4}, {2, 6, 7}, {2, 7, 3},   // -y, +y
                 {0, 2, 3}, {0, 3, 1}, {4, 5, 7}, {4, 7, 6}};  // -z, +z
  m.labels.assign(m.triangles.size(), b.label);
  return m;
}

// Slab-method entry distance of the ray o + t d into the box, if any.
std::optional<double> ray_box(const Vec3& o, const Vec3& d, const LabeledBox& b) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < b.min[a] || o[a] > b.max[a]) return std::nullopt;
      continue;
    }
    double ta = (b.min[a] - o[a]) / d[a], tb = (b.max[a] - o[a]) / d[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  if (!(t0 > 0.0)) return std::nullopt;  // camera inside the box
  return t0;
}

bool footprints_overlap(const LabeledBox& a, const LabeledBox& b, double gap) {
  return a.min.x() < b.max.x() + gap && b.min.x() < a.max.x() + gap &&
         a.min.z() < b.max.z() + gap && b.min.z() < a.max.z() + gap;
}

}  // namespace

TriangleMesh SyntheticScene::mesh_world() const {
  TriangleMesh m;
  for (const LabeledBox& b : boxes) m.append(box_mesh(b));
  return m;
}

TriangleMesh SyntheticScene::mesh_camera() const {
  return transformed(mesh_world(), camera_to_world.inverse());
}

SyntheticScene::Hit SyntheticScene::raycast(double u, double v) const {
  // With the camera-space direction scaled to z = 1 the ray parameter is the
  // z-depth itself.
  const Vec3 dir_cam((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
  const Vec3 o = camera_to_world.translation();
  const Vec3 d = camera_to_world.linear() * dir_cam;
  Hit hit;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    const auto t = ray_box(o, d, boxes[b]);
    if (t && *t < best) {
      best = *t;
      hit.box = b;
    }
  }
  if (hit.box) hit.depth = best;
  return hit;
}

SyntheticFrame synth_scene(std::uint64_t seed, int n_boxes, const SynthConfig& cfg,
                           const CategoryTable& categories) {
  if (n_boxes < 0) throw InvalidArgument("box count must be non-negative");
  if (cfg.width <= 0 || cfg.height <= 0 || !(cfg.focal > 0.0)) {
    throw InvalidArgument("synthetic image size and focal length must be positive");
  }
  std::mt19937_64 rng(keyed_hash(seed, 0x73796e7468ULL));
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  SyntheticFrame out;
  SyntheticScene& s = out.scene;
  s.K = {cfg.focal, cfg.focal, (cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0, cfg.width, cfg.height, 0.1, 10.0};
  s.room_width = uniform(3.0, 3.6);
  s.room_depth = uniform(3.0, 3.6);
  s.wall_height = uniform(2.4, 2.8);

  const CategoryId wall = categories.id_of("wall");
  const CategoryId floor = categories.id_of("floor");
  const double hw = s.room_width / 2.0, D = s.room_depth, H = s.wall_height;
  s.boxes.push_back({{-hw, -kSlab, 0.0}, {hw, 0.0, D}, {floor, kNoInstance}});
  s.boxes.push_back({{-hw - kSlab, -kSlab, -kSlab}, {-hw, H, D + kSlab}, {wall, kNoInstance}});
  s.boxes.push_back({{hw, -kSlab, -kSlab}, {hw + kSlab, H, D + kSlab}, {wall, kNoInstance}});
  s.boxes.push_back({{-hw, -kSlab, -kSlab}, {hw, H, 0.0}, {wall, kNoInstance}});
  s.boxes.push_back({{-hw, -kSlab, D}, {hw, H, D + kSlab}, {wall, kNoInstance}});

  // Camera at 0.75 m near the back wall, looking along +z and slightly down.
  const Vec3 cam(uniform(-0.3, 0.3), 0.75, uniform(0.15, 0.3));
  const double pitch = uniform(0.15, 0.3);
  const Vec3 forward(0.0, -std::sin(pitch), std::cos(pitch));
  const Vec3 down(0.0, -std::cos(pitch), -std::sin(pitch));
  const Vec3 right = down.cross(forward);
  Eigen::Matrix3d R;
  R << right, down, forward;
  s.camera_to_world = Pose::Identity();
  s.camera_to_world.linear() = R;
  s.camera_to_world.translation() = cam;

  const std::vector<CategoryId> things = categories.things();
  InstanceId next_id = 1;
  for (int n = 0; n < n_boxes; ++n) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double sx = uniform(0.3, 0.9), sz = uniform(0.3, 0.9), sy = uniform(0.3, 1.2);
      const double x0 = uniform(-hw + 0.05, hw - 0.05 - sx);
      const double z0 = uniform(1.0, D - 0.05 - sz);
      LabeledBox b{{x0, 0.0, z0}, {x0 + sx, sy, z0 + sz}, {}};
      bool clear = true;
      for (std::size_t o = 5; o < s.boxes.size() && clear; ++o) {
        clear = !footprints_overlap(b, s.boxes[o], 0.05);
      }
      if (!clear) continue;
      const auto cat = things[std::uniform_int_distribution<std::size_t>(0, things.size() - 1)(rng)];
      b.label = {cat, next_id++};
      s.boxes.push_back(b);
      break;
    }
  }

  out.depth = DepthMap(cfg.width, cfg.height);
  out.hit_box.assign(static_cast<std::size_t>(cfg.width) * cfg.height, 0);
  for (int v = 0; v < cfg.height; ++v) {
    for (int u = 0; u < cfg.width; ++u) {
      const auto hit = s.raycast(u, v);
      if (!hit.box || hit.depth > s.K.z_far) continue;
      out.depth.at(u, v) = static_cast<float>(hit.depth);
      out.hit_box[static_cast<std::size_t>(v) * cfg.width + u] = static_cast<std::uint32_t>(*hit.box + 1);
    }
  }

  out.masks.width = cfg.width;
  out.masks.height = cfg.height;
  for (std::size_t b = 5; b < s.boxes.size(); ++b) {
    Mask2D mask;
    mask.pixels.assign(out.hit_box.size(), 0);
    for (std::size_t p = 0; p < out.hit_box.size(); ++p) mask.pixels[p] = out.hit_box[p] == b + 1;
    if (mask.area() == 0) continue;
    mask.category = s.boxes[b].label.semantic;
    mask.instance = s.boxes[b].label.instance;
    out.masks.masks.push_back(std::move(mask));
  }

  out.spec = frustum_grid(cfg.voxel_size, cfg.dims);
  out.gt = mesh_to_tsdf_gt(s.mesh_camera(), s.K, out.spec, cfg.tau, categories.freespace());
  return out;
}

ViewCandidate describe_view(const SyntheticFrame& frame, double central_fraction) {
  const SyntheticScene& s = frame.scene;
  ViewCandidate view;
  view.camera_position = s.camera_to_world.translation();
  view.floor_height = 0.0;
  std::vector<std::uint8_t> mask(frame.hit_box.size());
  for (std::size_t b = 5; b < s.boxes.size(); ++b) {
    for (std::size_t p = 0; p < mask.size(); ++p) mask[p] = frame.hit_box[p] == b + 1;
    ViewObject o{s.boxes[b].min, s.boxes[b].max, 0, 0};
    o.visible_pixels = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1));
    o.central_pixels = central_region_pixels(mask, s.K.width, s.K.height, central_fraction);
    view.objects.push_back(o);
  }
  return view;
}

}  // namespace panrec
