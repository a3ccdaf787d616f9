#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "panrec/categories.hpp"

namespace panrec {

enum class DatasetProfile { Synthetic, Real };

const char* to_string(DatasetProfile p);
DatasetProfile profile_from_string(const std::string& s);

struct RunConfig {
  DatasetProfile profile = DatasetProfile::Synthetic;
  double voxel_size = 0.03;       // reconstruction grid, meters
  double eval_voxel_size = 0.03;  // 0.03 synthetic, 0.06 real
  std::int32_t dims = 128;
  float tau = 3.0f;               // voxels
  float tau_s = 1.0f;             // voxels
  float theta_occ = 0.5f;
  double theta_iou = 0.25;
  int max_instances = 20;
  int levels = 3;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> paths;

  /// Profile defaults for the evaluation voxel size.
  static RunConfig for_profile(DatasetProfile p);

  CategoryTable categories() const;
  /// Throws InvalidArgument when a value is outside its documented range.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

nlohmann::json config_to_json(const RunConfig& c);
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);

}  // namespace panrec
