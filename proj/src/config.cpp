#include "panrec/config.hpp"

#include <cmath>
#include <set>

#include "panrec/error.hpp"

namespace panrec {

const char* to_string(DatasetProfile p) {
  return p == DatasetProfile::Synthetic ? "synthetic" : "real";
}

DatasetProfile profile_from_string(const std::string& s) {
  if (s == "synthetic") return DatasetProfile::Synthetic;
  if (s == "real") return DatasetProfile::Real;
  throw InvalidArgument("unknown dataset profile '" + s + "'");
}

RunConfig RunConfig::for_profile(DatasetProfile p) {
  RunConfig c;
  c.profile = p;
  c.eval_voxel_size = p == DatasetProfile::Synthetic ? 0.03 : 0.06;
  return c;
}

CategoryTable RunConfig::categories() const {
  return profile == DatasetProfile::Synthetic ? CategoryTable::synthetic() : CategoryTable::real();
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidArgument(what);
  };
  require(voxel_size > 0.0 && std::isfinite(voxel_size), "voxel_size must be positive");
  require(eval_voxel_size > 0.0 && std::isfinite(eval_voxel_size), "eval_voxel_size must be positive");
  require(dims > 0, "dims must be positive");
  require(tau > 0.0f && std::isfinite(tau), "tau must be positive");
  require(tau_s > 0.0f && tau_s <= tau, "tau_s must satisfy 0 < tau_s <= tau");
  require(theta_occ > 0.0f && theta_occ < 1.0f, "theta_occ must lie in (0, 1)");
  require(theta_iou > 0.0 && theta_iou <= 1.0, "theta_iou must lie in (0, 1]");
  require(max_instances >= 1, "max_instances must be at least 1");
  require(levels >= 1 && levels <= 8, "levels must lie in [1, 8]");
  require(dims % (1 << (levels - 1)) == 0, "dims must be divisible by 2^(levels-1)");
}

nlohmann::json config_to_json(const RunConfig& c) {
  return {{"profile", to_string(c.profile)},
          {"voxel_size", c.voxel_size},
          {"eval_voxel_size", c.eval_voxel_size},
          {"dims", c.dims},
          {"tau", c.tau},
          {"tau_s", c.tau_s},
          {"theta_occ", c.theta_occ},
          {"theta_iou", c.theta_iou},
          {"max_instances", c.max_instances},
          {"levels", c.levels},
          {"seed", c.seed},
          {"paths", c.paths}};
}

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidArgument("run config must be a JSON object");
  static const std::set<std::string> known{"profile", "voxel_size", "eval_voxel_size", "dims",
                                           "tau", "tau_s", "theta_occ", "theta_iou",
                                           "max_instances", "levels", "seed", "paths"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InvalidArgument("unknown run config key '" + key + "'");
  }
  RunConfig c = RunConfig::for_profile(
      profile_from_string(j.value("profile", std::string(to_string(DatasetProfile::Synthetic)))));
  try {
    c.voxel_size = j.value("voxel_size", c.voxel_size);
    c.eval_voxel_size = j.value("eval_voxel_size", c.eval_voxel_size);
    c.dims = j.value("dims", c.dims);
    c.tau = j.value("tau", c.tau);
    c.tau_s = j.value("tau_s", c.tau_s);
    c.theta_occ = j.value("theta_occ", c.theta_occ);
    c.theta_iou = j.value("theta_iou", c.theta_iou);
    c.max_instances = j.value("max_instances", c.max_instances);
    c.levels = j.value("levels", c.levels);
    c.seed = j.value("seed", c.seed);
    c.paths = j.value("paths", c.paths);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed run config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace panrec
