#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "panrec/geometry.hpp"

namespace panrec {

// Raster files: 16-byte header (magic "DPTH", u32 width, u32 height,
// u32 channels) followed by little-endian f32 samples, channel-interleaved.

void write_raster(const std::string& path, const Raster& raster);
Raster read_raster(const std::string& path);

void write_depth(const std::string& path, const DepthMap& depth);
DepthMap read_depth(const std::string& path);

/// Headerless u16 millimeter depth; 0 marks invalid pixels.
void write_depth_raw_u16(const std::string& path, const DepthMap& depth);
DepthMap read_depth_raw_u16(const std::string& path, int width, int height);

nlohmann::json intrinsics_to_json(const CameraIntrinsics& K);
CameraIntrinsics intrinsics_from_json(const nlohmann::json& j);
void write_intrinsics(const std::string& path, const CameraIntrinsics& K);
CameraIntrinsics read_intrinsics(const std::string& path);

}  // namespace panrec
