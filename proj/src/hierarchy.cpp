#include "panrec/hierarchy.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "panrec/volume_io.hpp"

namespace panrec {

namespace {

std::size_t argmax(const std::vector<float>& v) {
  if (v.empty()) return 0;
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_output(const LevelInput& in, const LevelOutput& out) {
  const auto n = in.sites.size();
  const auto where = " at level " + std::to_string(in.level);
  if (out.sites.size() != n || !std::equal(out.sites.begin(), out.sites.end(), in.sites.begin())) {
    throw ContractViolation("predictor output site set differs from its input" + where);
  }
  if (out.occupancy.size() != n || out.semantic_logits.size() != n ||
      out.instance_logits.size() != n) {
    throw ContractViolation("predictor head sizes differ from the site count" + where);
  }
  if (in.level == 0 && out.distance.size() != n) {
    throw ContractViolation("level-0 predictor must emit one distance per site");
  }
  for (float p : out.occupancy) {
    if (!(p >= 0.0f && p <= 1.0f)) throw ContractViolation("occupancy outside [0, 1]" + where);
  }
}

std::vector<float> one_hot(std::size_t width, std::size_t hot) {
  std::vector<float> v(width, 0.0f);
  if (hot < width) v[hot] = 1.0f;
  return v;
}

std::string level_file(const std::string& dir, const char* head, int level) {
  return (std::filesystem::path(dir) / (std::string(head) + "_" + std::to_string(level) + ".spvl"))
      .string();
}

}  // namespace

std::vector<VoxelCoord> occupancy_to_sites(std::span<const VoxelCoord> sites,
                                           std::span<const float> occupancy,
                                           float occupancy_threshold) {
  if (!(occupancy_threshold > 0.0f && occupancy_threshold < 1.0f)) {
    throw InvalidArgument("occupancy threshold must lie in (0, 1)");
  }
  if (sites.size() != occupancy.size()) {
    throw InvalidArgument("occupancy must align with the site list");
  }
  std::vector<VoxelCoord> next;
  for (std::size_t s = 0; s < sites.size(); ++s) {
    if (occupancy[s] >= occupancy_threshold) {
      for (const VoxelCoord& child : children_of(sites[s])) next.push_back(child);
    }
  }
  return make_voxel_set(std::move(next));
}

GridSpec level_spec(const GridSpec& finest, int level) {
  return level == 0 ? finest : finest.coarsened(1 << level);
}

std::vector<VoxelCoord> dense_sites(const GridSpec& coarse, const Frustum* frustum) {
  std::vector<VoxelCoord> sites;
  const Vec3 extent = Vec3::Constant(coarse.voxel_size);
  for (std::int32_t k = 0; k < coarse.dims[2]; ++k) {
    for (std::int32_t j = 0; j < coarse.dims[1]; ++j) {
      for (std::int32_t i = 0; i < coarse.dims[0]; ++i) {
        const VoxelCoord c{i, j, k};
        if (frustum) {
          const Vec3 lo = coarse.corner(c);
          if (!frustum->may_intersect_box(lo, lo + extent)) continue;
        }
        sites.push_back(c);
      }
    }
  }
  return sites;
}

HierarchyResult run_coarse_to_fine(const LiftedVolumes& seed, LevelPredictor& predictor,
                                   const HierarchyConfig& cfg, const Frustum* frustum) {
  if (cfg.levels < 1 || cfg.levels > 8) throw InvalidArgument("hierarchy needs 1..8 levels");
  if (!(cfg.occupancy_threshold > 0.0f && cfg.occupancy_threshold < 1.0f)) {
    throw InvalidArgument("occupancy threshold must lie in (0, 1)");
  }
  const GridSpec& finest = seed.distance.spec();
  const int top = cfg.levels - 1;
  for (auto d : finest.dims) {
    if (d % (1 << top) != 0) throw InvalidArgument("finest dims not divisible by the level ladder");
  }

  HierarchyResult result;
  result.levels.resize(static_cast<std::size_t>(cfg.levels));
  std::vector<VoxelCoord> sites = dense_sites(level_spec(finest, top), frustum);

  for (int h = top; h >= 0; --h) {
    LevelInput input{h, level_spec(finest, h), sites, &seed};
    LevelOutput output = predictor.predict(input);
    check_output(input, output);

    std::vector<VoxelCoord> next;
    if (h > 0) next = occupancy_to_sites(sites, output.occupancy, cfg.occupancy_threshold);
    result.levels[static_cast<std::size_t>(h)] =
        LevelResult{h, input.spec, std::move(sites), std::move(output)};
    sites = std::move(next);
  }

  const LevelResult& finest_level = result.levels.front();
  const LevelOutput& out = finest_level.output;
  result.volume = PanopticVolume(finest);
  result.distance = DistanceVolume(finest);
  result.semantic_logits = VectorVolume(finest);
  result.instances = SparseVolume<InstanceId>(finest);
  for (std::size_t s = 0; s < finest_level.sites.size(); ++s) {
    if (!(out.occupancy[s] >= cfg.occupancy_threshold)) continue;
    const VoxelCoord& c = finest_level.sites[s];
    const auto semantic = static_cast<CategoryId>(argmax(out.semantic_logits[s]));
    const auto instance = static_cast<InstanceId>(argmax(out.instance_logits[s]));
    result.volume.insert_or_assign(c, PanopticVoxel{out.distance[s], semantic, instance});
    result.distance.insert_or_assign(c, out.distance[s]);
    result.semantic_logits.insert_or_assign(c, out.semantic_logits[s]);
    result.instances.insert_or_assign(c, instance);
  }
  return result;
}

void StoredHierarchy::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  for (std::size_t h = 0; h < levels.size(); ++h) {
    const int level = static_cast<int>(h);
    write_volume(level_file(dir, "occupancy", level), levels[h].occupancy, PayloadKind::Probability);
    write_volume(level_file(dir, "semantic", level), levels[h].semantic_logits,
                 PayloadKind::LogitVector);
    write_volume(level_file(dir, "instance", level), levels[h].instance_logits,
                 PayloadKind::LogitVector);
    if (h == 0) write_volume(level_file(dir, "distance", 0), levels[h].distance);
  }
  const nlohmann::json meta = {{"levels", levels.size()},
                               {"semantic_width", semantic_width},
                               {"instance_width", instance_width}};
  std::ofstream out(std::filesystem::path(dir) / "hierarchy.json");
  out << meta.dump(2) << '\n';
  if (!out) throw IoError("cannot write hierarchy manifest in " + dir);
}

StoredHierarchy StoredHierarchy::load(const std::string& dir) {
  const auto meta_path = std::filesystem::path(dir) / "hierarchy.json";
  std::ifstream in(meta_path);
  if (!in) throw IoError("cannot open " + meta_path.string());
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(meta_path.string() + ": " + e.what());
  }
  StoredHierarchy stored;
  const int levels = meta.at("levels").get<int>();
  stored.semantic_width = meta.at("semantic_width").get<int>();
  stored.instance_width = meta.at("instance_width").get<int>();
  for (int h = 0; h < levels; ++h) {
    Level level;
    level.occupancy = read_volume<float>(level_file(dir, "occupancy", h));
    level.semantic_logits = read_volume<std::vector<float>>(level_file(dir, "semantic", h));
    level.instance_logits = read_volume<std::vector<float>>(level_file(dir, "instance", h));
    if (h == 0) level.distance = read_volume<float>(level_file(dir, "distance", 0));
    stored.levels.push_back(std::move(level));
  }
  return stored;
}

StoredHierarchy build_gt_hierarchy(const PanopticVolume& gt, int levels,
                                   const CategoryTable& categories) {
  if (levels < 1) throw InvalidArgument("hierarchy needs at least one level");
  InstanceId max_instance = 0;
  for (const auto& kv : gt.unordered()) {
    if (!categories.contains(kv.second.semantic)) {
      throw InvalidArgument("GT volume uses unknown category " + std::to_string(kv.second.semantic));
    }
    max_instance = std::max(max_instance, kv.second.instance);
  }

  StoredHierarchy stored;
  stored.semantic_width = static_cast<int>(categories.size());
  stored.instance_width = static_cast<int>(max_instance) + 1;
  const auto sem_w = static_cast<std::size_t>(stored.semantic_width);
  const auto inst_w = static_cast<std::size_t>(stored.instance_width);

  for (int h = 0; h < levels; ++h) {
    const GridSpec spec = level_spec(gt.spec(), h);
    StoredHierarchy::Level level{SparseVolume<float>(spec), VectorVolume(spec), VectorVolume(spec),
                                 DistanceVolume(spec)};
    if (h == 0) {
      for (const auto& [c, voxel] : gt.unordered()) {
        level.occupancy.insert_or_assign(c, 1.0f);
        level.semantic_logits.insert_or_assign(c, one_hot(sem_w, voxel.semantic));
        level.instance_logits.insert_or_assign(c, one_hot(inst_w, voxel.instance));
        level.distance.insert_or_assign(c, voxel.sdf);
      }
    } else {
      struct Votes {
        std::map<CategoryId, int> semantic;
        std::map<InstanceId, int> instance;
      };
      std::unordered_map<VoxelCoord, Votes, VoxelCoordHash> votes;
      for (const auto& [c, voxel] : gt.unordered()) {
        Votes& v = votes[parent_of(c, 1 << h)];
        ++v.semantic[voxel.semantic];
        ++v.instance[voxel.instance];
      }
      auto majority = [](const auto& counts) {
        // std::map iterates ascending, so strict > keeps the lowest id on ties.
        auto best = counts.begin();
        for (auto it = counts.begin(); it != counts.end(); ++it) {
          if (it->second > best->second) best = it;
        }
        return best->first;
      };
      for (const auto& [c, v] : votes) {
        level.occupancy.insert_or_assign(c, 1.0f);
        level.semantic_logits.insert_or_assign(c, one_hot(sem_w, majority(v.semantic)));
        level.instance_logits.insert_or_assign(c, one_hot(inst_w, majority(v.instance)));
      }
    }
    stored.levels.push_back(std::move(level));
  }
  return stored;
}

LevelOutput ReplayPredictor::predict(const LevelInput& input) {
  if (input.level < 0 || static_cast<std::size_t>(input.level) >= stored_.levels.size()) {
    throw ContractViolation("replay has no stored level " + std::to_string(input.level));
  }
  const StoredHierarchy::Level& level = stored_.levels[static_cast<std::size_t>(input.level)];
  const std::vector<float> zero_sem(static_cast<std::size_t>(stored_.semantic_width), 0.0f);
  const std::vector<float> zero_inst(static_cast<std::size_t>(stored_.instance_width), 0.0f);

  LevelOutput out;
  const auto n = input.sites.size();
  out.sites.assign(input.sites.begin(), input.sites.end());
  out.occupancy.reserve(n);
  out.semantic_logits.reserve(n);
  out.instance_logits.reserve(n);
  for (const VoxelCoord& c : input.sites) {
    const float* occ = level.occupancy.find(c);
    out.occupancy.push_back(occ ? *occ : 0.0f);
    const auto* sem = level.semantic_logits.find(c);
    out.semantic_logits.push_back(sem ? *sem : zero_sem);
    const auto* inst = level.instance_logits.find(c);
    out.instance_logits.push_back(inst ? *inst : zero_inst);
    if (input.level == 0) {
      const float* d = level.distance.find(c);
      out.distance.push_back(d ? *d : 0.0f);
    }
  }
  return out;
}

ConstantPredictor::ConstantPredictor(float occupancy, float distance, CategoryId semantic,
                                     int semantic_width, InstanceId instance, int instance_width)
    : occupancy_(occupancy),
      distance_(distance),
      semantic_(semantic),
      semantic_width_(semantic_width),
      instance_(instance),
      instance_width_(instance_width) {}

LevelOutput ConstantPredictor::predict(const LevelInput& input) {
  LevelOutput out;
  const auto n = input.sites.size();
  out.sites.assign(input.sites.begin(), input.sites.end());
  out.occupancy.assign(n, occupancy_);
  out.semantic_logits.assign(n, one_hot(static_cast<std::size_t>(semantic_width_), semantic_));
  out.instance_logits.assign(n, one_hot(static_cast<std::size_t>(instance_width_), instance_));
  if (input.level == 0) out.distance.assign(n, distance_);
  return out;
}

}  // namespace panrec
