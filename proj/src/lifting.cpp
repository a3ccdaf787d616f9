#include "panrec/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace panrec {

void TruncationConfig::validate() const {
  if (!(tau > 0.0f) || !std::isfinite(tau)) throw InvalidArgument("truncation tau must be positive");
}

namespace {

struct Bin {
  float value;
  double ray_offset;  // perpendicular distance from the voxel center to the ray
  std::int32_t value_pixel;
  std::uint64_t sample_key;
  std::int32_t sample_pixel;
};

using BinMap = std::unordered_map<VoxelCoord, Bin, VoxelCoordHash>;

void check_raster(const Raster& r, const DepthMap& depth, const char* what) {
  if (r.width() != depth.width() || r.height() != depth.height()) {
    throw InvalidArgument(std::string(what) + " raster is " + std::to_string(r.width()) + "x" +
                          std::to_string(r.height()) + ", depth map is " +
                          std::to_string(depth.width()) + "x" + std::to_string(depth.height()));
  }
}

// Marches each valid pixel ray through [D - (tau+1)s, D + (tau+1)s] at half-voxel
// steps and keeps voxels whose center lies within tau voxels of the depth
// sample along the ray. When several rays reach one voxel, the distance comes
// from the ray passing closest to its center.
BinMap march_rays(const DepthMap& depth, const CameraIntrinsics& K, const GridSpec& spec,
                  float tau, std::uint64_t seed) {
  const double s = spec.voxel_size;
  const double band = (tau + 1.0) * s;
  const double step = 0.5 * s;
  const int steps = static_cast<int>(std::ceil(2.0 * band / step));

  BinMap bins;
  bins.reserve(depth.valid_count() * 8);
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.valid(u, v)) continue;
      const auto pixel = static_cast<std::int32_t>(v * depth.width() + u);
      const Vec3 surface = unproject_pixel(u, v, depth.at(u, v), K);
      const double ray_depth = surface.norm();
      const Vec3 dir = surface / ray_depth;

      VoxelCoord last{std::numeric_limits<std::int32_t>::min(), 0, 0};
      for (int n = 0; n <= steps; ++n) {
        const double t = ray_depth - band + n * step;
        if (t <= 0.0) continue;
        const VoxelCoord c = spec.coord_of(dir * t);
        if (c == last) continue;
        last = c;
        if (!spec.contains(c)) continue;

        const Vec3 center = spec.center(c);
        const double along = dir.dot(center);
        const double delta = (ray_depth - along) / s;
        if (!(std::abs(delta) < tau)) continue;
        const auto value = static_cast<float>(std::clamp<double>(delta, -tau, tau));
        const std::uint64_t key = lift_sample_key(seed, c, static_cast<std::uint64_t>(pixel));

        const double offset = (center - dir * along).norm();

        auto [it, inserted] = bins.try_emplace(c, Bin{value, offset, pixel, key, pixel});
        if (inserted) continue;
        Bin& b = it->second;
        if (offset < b.ray_offset || (offset == b.ray_offset && pixel < b.value_pixel)) {
          b.value = value;
          b.ray_offset = offset;
          b.value_pixel = pixel;
        }
        if (key < b.sample_key || (key == b.sample_key && pixel < b.sample_pixel)) {
          b.sample_key = key;
          b.sample_pixel = pixel;
        }
      }
    }
  }
  return bins;
}

// Distance along the voxel's own center ray, with the surface depth taken from
// inverse depth interpolated over the enclosing 2x2 pixel block (affine in
// pixel coordinates for planar surfaces). Falls back to the marched value when
// the block straddles a depth discontinuity or is too far to extrapolate.
float center_ray_value(const DepthMap& depth, const CameraIntrinsics& K, const GridSpec& spec,
                       float tau, const VoxelCoord& c, float fallback) {
  if (depth.width() < 2 || depth.height() < 2) return fallback;
  const Vec3 center = spec.center(c);
  if (!(center.z() > 0.0)) return fallback;
  const PixelDepth px = project_point(center, K);
  const int u0 = std::clamp(static_cast<int>(std::floor(px.u)), 0, depth.width() - 2);
  const int v0 = std::clamp(static_cast<int>(std::floor(px.v)), 0, depth.height() - 2);
  const double fu = px.u - u0;
  const double fv = px.v - v0;
  // Centers can sit outside the pixel grid by up to half a voxel diagonal.
  const double reach = 1.0 + 0.87 * spec.voxel_size * std::max(K.fx, K.fy) / center.z();
  if (fu < -reach || fu > 1.0 + reach || fv < -reach || fv > 1.0 + reach) return fallback;

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double inv[2][2];
  for (int dv = 0; dv < 2; ++dv) {
    for (int du = 0; du < 2; ++du) {
      if (!depth.valid(u0 + du, v0 + dv)) return fallback;
      const double d = depth.at(u0 + du, v0 + dv);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
      inv[dv][du] = 1.0 / d;
    }
  }
  const double s = spec.voxel_size;
  if (hi - lo > tau * s) return fallback;

  const double inv_z = (1 - fv) * ((1 - fu) * inv[0][0] + fu * inv[0][1]) +
                       fv * ((1 - fu) * inv[1][0] + fu * inv[1][1]);
  if (!(inv_z > 0.0)) return fallback;
  const double surface = center.norm() / center.z() / inv_z;
  const double delta = (surface - center.norm()) / s;
  return static_cast<float>(std::clamp<double>(delta, -tau, tau));
}

}  // namespace

LiftedVolumes lift_to_volumes(const DepthMap& depth, const CameraIntrinsics& K,
                              const GridSpec& spec, const LiftConfig& cfg,
                              const Raster* features, const Raster* masks) {
  K.validate();
  spec.validate();
  cfg.truncation.validate();
  depth.check_matches(K);
  if (features) check_raster(*features, depth, "feature");
  int n_instances = 0;
  if (masks) {
    check_raster(*masks, depth, "mask-logit");
    n_instances = masks->channels();
    if (n_instances > cfg.max_instances) {
      throw CapacityError(std::to_string(n_instances) + " detections exceed N_max = " +
                          std::to_string(cfg.max_instances));
    }
  }

  const BinMap bins = march_rays(depth, K, spec, cfg.truncation.tau, cfg.seed);

  LiftedVolumes out{DistanceVolume(spec), VectorVolume(spec),
                    InstanceChannelVolume{n_instances + 1, VectorVolume(spec)}};
  out.distance.reserve(bins.size());
  out.features.reserve(bins.size());
  out.instances.logits.reserve(bins.size());

  const auto channels = static_cast<std::size_t>(n_instances) + 1;
  for (const auto& [coord, bin] : bins) {
    out.distance.insert_or_assign(
        coord, center_ray_value(depth, K, spec, cfg.truncation.tau, coord, bin.value));

    const int u = bin.sample_pixel % depth.width();
    const int v = bin.sample_pixel / depth.width();
    if (features) {
      const auto px = features->pixel(u, v);
      out.features.insert_or_assign(coord, std::vector<float>(px.begin(), px.end()));
    } else {
      out.features.insert_or_assign(coord, std::vector<float>{});
    }

    std::vector<float> logits(channels, 0.0f);
    bool associated = false;
    if (masks) {
      const auto px = masks->pixel(u, v);
      for (std::size_t c = 0; c < px.size(); ++c) {
        logits[c + 1] = px[c];
        associated = associated || !(px[c] < cfg.foreground_logit);
      }
    }
    if (!associated) {
      std::fill(logits.begin(), logits.end(), 0.0f);
      logits[0] = 1.0f;
    }
    out.instances.logits.insert_or_assign(coord, std::move(logits));
  }
  return out;
}

DistanceVolume backproject_depth_to_tsdf(const DepthMap& depth, const CameraIntrinsics& K,
                                         const GridSpec& spec, float tau) {
  LiftConfig cfg;
  cfg.truncation.tau = tau;
  return lift_to_volumes(depth, K, spec, cfg, nullptr, nullptr).distance;
}

VectorVolume lift_features(const DepthMap& depth, const CameraIntrinsics& K,
                           const GridSpec& spec, float tau, const Raster& features,
                           std::uint64_t seed) {
  LiftConfig cfg;
  cfg.truncation.tau = tau;
  cfg.seed = seed;
  return lift_to_volumes(depth, K, spec, cfg, &features, nullptr).features;
}

InstanceChannelVolume lift_instance_logits(const DepthMap& depth, const CameraIntrinsics& K,
                                           const GridSpec& spec, float tau, const Raster& masks,
                                           std::uint64_t seed, int max_instances) {
  LiftConfig cfg;
  cfg.truncation.tau = tau;
  cfg.seed = seed;
  cfg.max_instances = max_instances;
  return lift_to_volumes(depth, K, spec, cfg, nullptr, &masks).instances;
}

}  // namespace panrec
