#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "panrec/lifting.hpp"

using namespace panrec;

namespace {

CameraIntrinsics camera() { return {80.0, 80.0, 39.5, 29.5, 80, 60, 0.1, 10.0}; }

// Depth of the plane n·x = offset along each pixel ray, as z-depth.
DepthMap plane_depth(const CameraIntrinsics& K, const Vec3& n, double offset) {
  DepthMap d(K.width, K.height);
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) {
      const Vec3 ray((u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0);
      d.at(u, v) = static_cast<float>(offset / n.dot(ray));
    }
  }
  return d;
}

// Clamped to the tau = 3 band used throughout.
double along_ray_oracle(const Vec3& center, const Vec3& n, double offset, double s) {
  const Vec3 dir = center.normalized();
  return std::clamp((offset / n.dot(dir) - center.norm()) / s, -3.0, 3.0);
}

}  // namespace

TEST_CASE("planar TSDF matches the along-ray oracle") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  for (const Vec3& n : {Vec3(0, 0, 1), Vec3(0.2, -0.3, 1.0).normalized()}) {
    const double offset = 1.6;
    const DistanceVolume tsdf = backproject_depth_to_tsdf(plane_depth(K, n, offset), K, spec, 3.0f);
    REQUIRE(tsdf.size() > 1000);
    for (const auto& [c, value] : tsdf.unordered()) {
      CHECK(std::abs(value - along_ray_oracle(spec.center(c), n, offset, spec.voxel_size)) <= 0.5);
      CHECK(std::abs(value) <= 3.0f);
    }
  }
}

TEST_CASE("band voxels well inside the truncation are all present") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  const Vec3 n(0, 0, 1);
  const DistanceVolume tsdf = backproject_depth_to_tsdf(plane_depth(K, n, 1.5), K, spec, 3.0f);
  const Frustum f(K);
  std::size_t expected = 0;
  for (int k = 0; k < 64; ++k) {
    for (int j = 0; j < 64; ++j) {
      for (int i = 0; i < 64; ++i) {
        const Vec3 c = spec.center({i, j, k});
        if (c.z() <= 0.0) continue;
        const PixelDepth px = project_point(c, K);
        if (px.u < 1.0 || px.v < 1.0 || px.u > K.width - 2.0 || px.v > K.height - 2.0) continue;
        if (std::abs(along_ray_oracle(c, n, 1.5, spec.voxel_size)) >= 2.0) continue;
        ++expected;
        CHECK(tsdf.contains({i, j, k}));
      }
    }
  }
  CHECK(expected > 500);
}

TEST_CASE("TSDF is positive in front of the surface") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  const DistanceVolume tsdf = backproject_depth_to_tsdf(plane_depth(K, {0, 0, 1}, 2.0), K, spec, 3.0f);
  for (const auto& [c, value] : tsdf.unordered()) {
    const double z = spec.center(c).z();
    if (z < 1.9) CHECK(value > 0.0f);
    if (z > 2.1) CHECK(value < 0.0f);
  }
}

TEST_CASE("support equality and determinism on random frames") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> tilt(-0.3, 0.3), off(1.0, 2.5);
  std::normal_distribution<float> noise(0.0f, 1.0f);
  for (int frame = 0; frame < 5; ++frame) {
    DepthMap d = plane_depth(K, Vec3(tilt(rng), tilt(rng), 1.0).normalized(), off(rng));
    for (int k = 0; k < 100; ++k) d.at(static_cast<int>(rng() % 80), static_cast<int>(rng() % 60)) = 0.0f;
    Raster feats(K.width, K.height, 4), masks(K.width, K.height, 3);
    for (auto& x : feats.data()) x = noise(rng);
    for (auto& x : masks.data()) x = noise(rng);

    LiftConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(frame);
    const LiftedVolumes a = lift_to_volumes(d, K, spec, cfg, &feats, &masks);
    CHECK(a.features.coords() == a.distance.coords());
    CHECK(a.instances.logits.coords() == a.distance.coords());
    CHECK(a.instances.channels == 4);
    CHECK_NOTHROW(a.instances.validate());

    const LiftedVolumes b = lift_to_volumes(d, K, spec, cfg, &feats, &masks);
    CHECK(a.distance == b.distance);
    CHECK(a.features == b.features);
    CHECK(a.instances.logits == b.instances.logits);
  }
}

TEST_CASE("sampled contributor comes from a pixel that reaches the voxel") {
  // A two-valued feature raster split down the middle: every voxel takes one
  // of the two values and voxels far from the split take their side's value.
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  const DepthMap d = plane_depth(K, {0, 0, 1}, 1.5);
  Raster feats(K.width, K.height, 1);
  for (int v = 0; v < K.height; ++v) {
    for (int u = 0; u < K.width; ++u) feats.at(u, v) = u < 40 ? -1.0f : 1.0f;
  }
  const VectorVolume f = lift_features(d, K, spec, 3.0f, feats, 9);
  for (const auto& [c, value] : f.unordered()) {
    REQUIRE(value.size() == 1);
    const double u = project_point(spec.center(c), K).u;
    if (u < 35.0) CHECK(value[0] == -1.0f);
    if (u > 45.0) CHECK(value[0] == 1.0f);
  }
}

TEST_CASE("unassociated pixels encode the no-instance channel") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  const DepthMap d = plane_depth(K, {0, 0, 1}, 1.5);
  Raster masks(K.width, K.height, 2, -5.0f);
  const InstanceChannelVolume inst = lift_instance_logits(d, K, spec, 3.0f, masks);
  CHECK(inst.channels == 3);
  for (const auto& [c, logits] : inst.logits.unordered()) CHECK(logits == std::vector<float>{1.0f, 0.0f, 0.0f});
}

TEST_CASE("lifting rejects bad inputs") {
  const auto K = camera();
  const GridSpec spec = frustum_grid(0.05, 64);
  const DepthMap d = plane_depth(K, {0, 0, 1}, 1.5);
  Raster too_many(K.width, K.height, 21);
  CHECK_THROWS_AS(lift_instance_logits(d, K, spec, 3.0f, too_many), CapacityError);
  Raster wrong_size(10, 10, 2);
  CHECK_THROWS_AS(lift_features(d, K, spec, 3.0f, wrong_size), InvalidArgument);
  CHECK_THROWS_AS(backproject_depth_to_tsdf(d, K, spec, 0.0f), InvalidArgument);
  CHECK_THROWS_AS(backproject_depth_to_tsdf(DepthMap(3, 3), K, spec, 3.0f), InvalidArgument);
}

TEST_CASE("no valid depth gives empty volumes") {
  const auto K = camera();
  const LiftedVolumes v = lift_to_volumes(DepthMap(K.width, K.height), K, frustum_grid(0.05, 32), {}, nullptr, nullptr);
  CHECK(v.distance.empty());
  CHECK(v.features.empty());
}
