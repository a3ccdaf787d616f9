#include "panrec/raster_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "binary_io.hpp"
#include "panrec/error.hpp"

namespace panrec {

using detail::read_pod;
using detail::write_pod;

void write_raster(const std::string& path, const Raster& raster) {
  auto out = detail::open_output(path);
  detail::write_magic(out, "DPTH");
  write_pod(out, static_cast<std::uint32_t>(raster.width()));
  write_pod(out, static_cast<std::uint32_t>(raster.height()));
  write_pod(out, static_cast<std::uint32_t>(raster.channels()));
  const auto data = raster.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size_bytes()));
  detail::finish_output(out, path);
}

Raster read_raster(const std::string& path) {
  auto in = detail::open_input(path);
  detail::expect_magic(in, "DPTH", path);
  const auto width = read_pod<std::uint32_t>(in, "raster width");
  const auto height = read_pod<std::uint32_t>(in, "raster height");
  const auto channels = read_pod<std::uint32_t>(in, "raster channels");
  if (width > 1u << 16 || height > 1u << 16 || channels > 1u << 12) {
    throw IoError(path + ": implausible raster dimensions");
  }
  Raster raster(static_cast<int>(width), static_cast<int>(height), static_cast<int>(channels));
  auto data = raster.data();
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  if (!in) throw IoError(path + ": truncated raster payload");
  return raster;
}

void write_depth(const std::string& path, const DepthMap& depth) {
  Raster raster(depth.width(), depth.height(), 1);
  std::copy(depth.values().begin(), depth.values().end(), raster.data().begin());
  write_raster(path, raster);
}

DepthMap read_depth(const std::string& path) {
  const Raster raster = read_raster(path);
  if (raster.channels() != 1) throw IoError(path + ": depth raster must have one channel");
  DepthMap depth(raster.width(), raster.height());
  std::copy(raster.data().begin(), raster.data().end(), depth.values().begin());
  return depth;
}

void write_depth_raw_u16(const std::string& path, const DepthMap& depth) {
  auto out = detail::open_output(path);
  for (float d : depth.values()) {
    std::uint16_t mm = 0;
    if (std::isfinite(d) && d > 0.0f) {
      mm = static_cast<std::uint16_t>(std::clamp(std::lround(d * 1000.0f), 1L, 65535L));
    }
    write_pod(out, mm);
  }
  detail::finish_output(out, path);
}

DepthMap read_depth_raw_u16(const std::string& path, int width, int height) {
  auto in = detail::open_input(path);
  DepthMap depth(width, height);
  for (float& d : depth.values()) {
    const auto mm = read_pod<std::uint16_t>(in, "u16 depth sample");
    d = mm == 0 ? DepthMap::kInvalid : static_cast<float>(mm) / 1000.0f;
  }
  return depth;
}

nlohmann::json intrinsics_to_json(const CameraIntrinsics& K) {
  return {{"fx", K.fx},         {"fy", K.fy},          {"cx", K.cx},
          {"cy", K.cy},         {"width", K.width},    {"height", K.height},
          {"z_near", K.z_near}, {"z_far", K.z_far}};
}

CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
  CameraIntrinsics K;
  try {
    K.fx = j.at("fx").get<double>();
    K.fy = j.at("fy").get<double>();
    K.cx = j.at("cx").get<double>();
    K.cy = j.at("cy").get<double>();
    K.width = j.at("width").get<int>();
    K.height = j.at("height").get<int>();
    K.z_near = j.at("z_near").get<double>();
    K.z_far = j.at("z_far").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed intrinsics: ") + e.what());
  }
  K.validate();
  return K;
}

void write_intrinsics(const std::string& path, const CameraIntrinsics& K) {
  auto out = detail::open_output(path, false);
  out << intrinsics_to_json(K).dump(2) << '\n';
  detail::finish_output(out, path);
}

CameraIntrinsics read_intrinsics(const std::string& path) {
  auto in = detail::open_input(path, false);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return intrinsics_from_json(j);
}

}  // namespace panrec
