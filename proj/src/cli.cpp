#include "panrec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "panrec/assembly.hpp"
#include "panrec/clustering.hpp"
#include "panrec/config.hpp"
#include "panrec/hierarchy.hpp"
#include "panrec/lifting.hpp"
#include "panrec/losses.hpp"
#include "panrec/mesh_io.hpp"
#include "panrec/metrics.hpp"
#include "panrec/raster_io.hpp"
#include "panrec/supervision.hpp"
#include "panrec/synthetic.hpp"
#include "panrec/volume_io.hpp"

namespace panrec {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitContract = 4;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void emit_error(const char* kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

const std::string& need(const RunConfig& cfg, const std::string& key) {
  auto it = cfg.paths.find(key);
  if (it == cfg.paths.end() || it->second.empty()) throw UsageError("--" + key + " is required");
  return it->second;
}

std::string path_or(const RunConfig& cfg, const std::string& key) {
  auto it = cfg.paths.find(key);
  return it == cfg.paths.end() ? std::string() : it->second;
}

bool has_ext(const std::string& path, const char* ext) {
  std::string e = fs::path(path).extension().string();
  std::transform(e.begin(), e.end(), e.begin(), [](unsigned char c) { return std::tolower(c); });
  return e == ext;
}

DepthMap load_depth(const std::string& path, const CameraIntrinsics& K) {
  if (has_ext(path, ".dpth")) return read_depth(path);
  return read_depth_raw_u16(path, K.width, K.height);
}

Pose pose_from_json(const json& j) {
  std::vector<double> m;
  try {
    if (j.is_array() && j.size() == 4 && j[0].is_array()) {
      for (const auto& row : j) {
        for (const auto& v : row) m.push_back(v.get<double>());
      }
    } else {
      m = j.get<std::vector<double>>();
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed pose: ") + e.what());
  }
  if (m.size() != 16) throw InvalidArgument("pose must hold 16 numbers (row-major 4x4)");
  Eigen::Matrix4d mat;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) mat(r, c) = m[static_cast<std::size_t>(r * 4 + c)];
  }
  Pose p = Pose::Identity();
  p.linear() = mat.block<3, 3>(0, 0);
  p.translation() = mat.block<3, 1>(0, 3);
  return p;
}

// ---- subcommands -----------------------------------------------------------

int run_synth_scene(const RunConfig& cfg, int boxes, const SynthConfig& base) {
  const std::string dir = need(cfg, "out");
  SynthConfig sc = base;
  sc.voxel_size = cfg.voxel_size;
  sc.dims = cfg.dims;
  sc.tau = cfg.tau;
  const CategoryTable cats = cfg.categories();
  const SyntheticFrame frame = synth_scene(cfg.seed, boxes, sc, cats);

  fs::create_directories(dir);
  const fs::path d(dir);
  write_intrinsics((d / "intrinsics.json").string(), frame.scene.K);
  write_depth((d / "depth.dpth").string(), frame.depth);
  write_ply((d / "scene.ply").string(), frame.scene.mesh_camera());
  write_mask_set((d / "masks.json").string(), frame.masks);
  write_volume((d / "gt.spvl").string(), frame.gt);

  const ViewCandidate view = describe_view(frame);
  json objects = json::array();
  for (std::size_t b = 5; b < frame.scene.boxes.size(); ++b) {
    const LabeledBox& box = frame.scene.boxes[b];
    objects.push_back({{"category", box.label.semantic},
                       {"instance", box.label.instance},
                       {"min", {box.min.x(), box.min.y(), box.min.z()}},
                       {"max", {box.max.x(), box.max.y(), box.max.z()}},
                       {"visible_pixels", view.objects[b - 5].visible_pixels}});
  }
  const json summary = {{"seed", cfg.seed},
                        {"objects", objects},
                        {"visible_masks", frame.masks.masks.size()},
                        {"gt_voxels", frame.gt.size()},
                        {"view_accepted", accept_view(view)}};
  write_text((d / "scene.json").string(), summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  return 0;
}

int run_make_gt(const RunConfig& cfg) {
  const TriangleMesh mesh = read_mesh(need(cfg, "mesh"));
  const CameraIntrinsics K = read_intrinsics(need(cfg, "intrinsics"));
  const CategoryTable cats = cfg.categories();
  const GridSpec spec = frustum_grid(cfg.voxel_size, cfg.dims);
  const PanopticVolume gt = mesh_to_tsdf_gt(mesh, K, spec, cfg.tau, cats.freespace());
  write_volume(need(cfg, "out"), gt);
  if (const std::string h = path_or(cfg, "hierarchy-out"); !h.empty()) {
    build_gt_hierarchy(gt, cfg.levels, cats).save(h);
  }
  std::cout << json{{"voxels", gt.size()}}.dump() << '\n';
  return 0;
}

int run_backproject(const RunConfig& cfg, bool permute) {
  const CameraIntrinsics K = read_intrinsics(need(cfg, "intrinsics"));
  const DepthMap depth = load_depth(need(cfg, "depth"), K);
  const GridSpec spec = frustum_grid(cfg.voxel_size, cfg.dims);

  Raster features, logits;
  bool have_masks = false;
  if (const auto f = path_or(cfg, "features"); !f.empty()) features = read_raster(f);

  const std::string dir = need(cfg, "out");
  fs::create_directories(dir);
  if (const auto m = path_or(cfg, "masks"); !m.empty()) {
    const MaskSet2D pred = read_mask_set(m);
    ChannelAssignment assign;
    if (const auto g = path_or(cfg, "gt-masks"); !g.empty()) {
      assign = match_masks_2d(pred, read_mask_set(g));
    } else {
      for (std::size_t i = 0; i < pred.masks.size(); ++i) assign.pred_channel.push_back(static_cast<int>(i) + 1);
    }
    if (permute) assign = permute_channels(assign, cfg.seed);
    logits = masks_to_logit_raster(pred, assign);
    have_masks = true;
    write_text((fs::path(dir) / "assignment.json").string(), assignment_to_json(assign).dump(2) + "\n");
  }

  LiftConfig lc;
  lc.truncation.tau = cfg.tau;
  lc.seed = cfg.seed;
  lc.max_instances = cfg.max_instances;
  const LiftedVolumes lifted = lift_to_volumes(depth, K, spec, lc, features.empty() ? nullptr : &features,
                                               have_masks ? &logits : nullptr);
  const fs::path d(dir);
  write_volume((d / "tsdf.spvl").string(), lifted.distance);
  write_volume((d / "features.spvl").string(), lifted.features, PayloadKind::FeatureVector);
  write_volume((d / "instances.spvl").string(), lifted.instances.logits, PayloadKind::LogitVector);
  std::cout << json{{"cells", lifted.distance.size()}, {"instance_channels", lifted.instances.channels}}.dump()
            << '\n';
  return 0;
}

LiftedVolumes load_seed(const std::string& dir) {
  const fs::path d(dir);
  LiftedVolumes seed{read_volume<float>((d / "tsdf.spvl").string()), VectorVolume(), InstanceChannelVolume{}};
  seed.features = VectorVolume(seed.distance.spec());
  seed.instances.logits = VectorVolume(seed.distance.spec());
  if (fs::exists(d / "features.spvl")) seed.features = read_volume<std::vector<float>>((d / "features.spvl").string());
  if (fs::exists(d / "instances.spvl")) {
    seed.instances.logits = read_volume<std::vector<float>>((d / "instances.spvl").string());
    if (!seed.instances.logits.empty()) {
      seed.instances.channels = static_cast<int>(seed.instances.logits.unordered().begin()->second.size());
    }
  }
  return seed;
}

int run_assemble(const RunConfig& cfg, const std::string& predictor_spec, const std::string& mesh_out) {
  const LiftedVolumes seed = load_seed(need(cfg, "seed"));
  const CategoryTable cats = cfg.categories();

  std::unique_ptr<LevelPredictor> predictor;
  if (predictor_spec.rfind("replay:", 0) == 0) {
    StoredHierarchy stored = StoredHierarchy::load(predictor_spec.substr(7));
    if (stored.levels.empty() || !(stored.levels.front().occupancy.spec() == seed.distance.spec())) {
      throw ContractViolation("replay hierarchy grid differs from the seed grid");
    }
    if (static_cast<int>(stored.levels.size()) < cfg.levels) {
      throw ContractViolation("replay hierarchy has fewer levels than configured");
    }
    predictor = std::make_unique<ReplayPredictor>(std::move(stored));
  } else {
    throw UsageError("unknown predictor '" + predictor_spec + "' (expected replay:DIR)");
  }

  std::optional<Frustum> frustum;
  if (const auto k = path_or(cfg, "intrinsics"); !k.empty()) frustum.emplace(read_intrinsics(k));

  HierarchyConfig hc{cfg.levels, cfg.theta_occ};
  const HierarchyResult res = run_coarse_to_fine(seed, *predictor, hc, frustum ? &*frustum : nullptr);

  AssemblyConfig ac{cfg.tau_s, cats};
  ac.validate(cfg.tau);
  AssemblyStats stats;
  const PanopticVolume pan = assemble_panoptic_surface(res.distance, res.semantic_logits, res.instances, ac, &stats);
  write_volume(need(cfg, "out"), pan);
  if (!mesh_out.empty()) write_mesh(mesh_out, extract_surface_mesh(pan, cfg.tau_s));

  json sites = json::array();
  for (const LevelResult& l : res.levels) sites.push_back(l.sites.size());
  std::cout << json{{"surface", stats.surface},   {"stuff", stats.stuff},
                    {"things", stats.things},     {"filled", stats.filled},
                    {"disagreements", stats.disagreements}, {"sites_per_level", sites}}
                   .dump()
            << '\n';
  return 0;
}

int run_cluster(const RunConfig& cfg, double radius) {
  const PanopticVolume vol = read_volume<PanopticVoxel>(need(cfg, "in"));
  std::optional<VectorVolume> logits;
  if (const auto l = path_or(cfg, "logits"); !l.empty()) logits = read_volume<std::vector<float>>(l);
  const CategoryTable cats = cfg.categories();
  const auto points = surface_points(vol, cfg.tau_s, logits ? &*logits : nullptr);
  const auto clusters = cluster_instances(points, radius, cats);
  write_text(need(cfg, "out"), clusters_to_json(clusters, points, vol.spec()).dump(2) + "\n");
  if (const auto v = path_or(cfg, "volume-out"); !v.empty()) {
    write_volume(v, clusters_to_volume(vol, cfg.tau_s, clusters, points));
  }
  std::cout << json{{"points", points.size()}, {"clusters", clusters.size()}}.dump() << '\n';
  return 0;
}

LabelVolume load_labels(const std::string& path, const RunConfig& cfg) {
  LabelVolume labels;
  if (has_ext(path, ".spvl")) {
    const VolumeHeader h = read_volume_header(path);
    if (h.kind == PayloadKind::Panoptic) {
      labels = to_labels(read_volume<PanopticVoxel>(path));
    } else if (h.kind == PayloadKind::Label) {
      labels = read_volume<PanopticLabel>(path);
    } else {
      throw InvalidArgument(path + ": expected a panoptic or label volume, got " + to_string(h.kind));
    }
  } else if (has_ext(path, ".ply") || has_ext(path, ".obj")) {
    const TriangleMesh mesh = read_mesh(path);
    if (!mesh.empty() && !mesh.has_labels()) throw InvalidArgument(path + ": mesh carries no labels");
    labels = voxelize_mesh(mesh, frustum_grid(cfg.eval_voxel_size, cfg.dims));
  } else {
    throw InvalidArgument(path + ": unsupported input type");
  }
  if (static_cast<float>(cfg.eval_voxel_size) != labels.spec().voxel_size) {
    GridSpec target = labels.spec();
    const double extent = labels.spec().voxel_size;
    target.voxel_size = static_cast<float>(cfg.eval_voxel_size);
    for (auto& d : target.dims) {
      d = static_cast<std::int32_t>(std::ceil(d * extent / cfg.eval_voxel_size - 1e-9));
    }
    labels = resample_labels(labels, target);
  }
  return labels;
}

std::vector<std::pair<std::string, std::string>> pair_inputs(const std::string& pred, const std::string& gt) {
  const bool pred_dir = fs::is_directory(pred), gt_dir = fs::is_directory(gt);
  if (!fs::exists(pred)) throw IoError("no such file or directory: " + pred);
  if (!fs::exists(gt)) throw IoError("no such file or directory: " + gt);
  if (pred_dir != gt_dir) throw UsageError("--pred and --gt must both be files or both directories");
  if (!pred_dir) return {{pred, gt}};

  std::vector<std::pair<std::string, std::string>> out;
  std::vector<fs::path> gts;
  for (const auto& e : fs::directory_iterator(gt)) {
    const std::string p = e.path().string();
    if (e.is_regular_file() && (has_ext(p, ".spvl") || has_ext(p, ".ply") || has_ext(p, ".obj"))) gts.push_back(e.path());
  }
  std::sort(gts.begin(), gts.end());
  for (const fs::path& g : gts) {
    const fs::path p = fs::path(pred) / g.filename();
    if (!fs::exists(p)) throw IoError("prediction missing for " + g.filename().string());
    out.emplace_back(p.string(), g.string());
  }
  if (out.empty()) throw IoError("no ground-truth volumes in " + gt);
  return out;
}

int run_evaluate(const RunConfig& cfg, bool macro, const std::string& csv) {
  const CategoryTable cats = cfg.categories();
  std::optional<CameraIntrinsics> K;
  if (const auto k = path_or(cfg, "intrinsics"); !k.empty()) K = read_intrinsics(k);

  std::vector<ScenePair> scenes;
  for (const auto& [p, g] : pair_inputs(need(cfg, "pred"), need(cfg, "gt"))) {
    ScenePair s{fs::path(g).filename().string(), load_labels(p, cfg), load_labels(g, cfg), std::nullopt};
    if (K) s.mask = frustum_voxel_mask(s.gt.spec(), *K);
    scenes.push_back(std::move(s));
  }
  const ClassReport report = evaluate_scenes(scenes, cats, {cfg.theta_iou, macro});
  json j = report_to_json(report, cats);
  j["scenes"] = scenes.size();
  j["mode"] = macro ? "per_scene_macro" : "pooled";
  j["eval_voxel_size"] = cfg.eval_voxel_size;
  j["iou_threshold"] = cfg.theta_iou;
  const std::string out = path_or(cfg, "out");
  if (!out.empty()) {
    write_text(out, j.dump(2) + "\n");
  }
  if (!csv.empty()) write_text(csv, report_to_csv(report, cats));
  std::cout << json{{"prq", report.all.prq}, {"rsq", report.all.rsq}, {"rrq", report.all.rrq}}.dump() << '\n';
  return 0;
}

int run_loss(const RunConfig& cfg) {
  const std::string config_path = need(cfg, "config");
  const json j = read_json(config_path);
  const fs::path base = fs::path(config_path).parent_path();
  auto file = [&](const json& node, const char* key) -> std::string {
    if (!node.contains(key)) return {};
    const fs::path p(node.at(key).get<std::string>());
    return (p.is_absolute() ? p : base / p).string();
  };

  try {
    const CategoryTable cats = cfg.categories();
    ClassWeightTable weights;
    if (j.contains("class_weights")) {
      weights.weights = j.at("class_weights").get<std::vector<double>>();
    } else if (j.contains("class_counts")) {
      const auto counts = j.at("class_counts").get<std::vector<std::uint64_t>>();
      weights = class_weights_inverse_log(counts, cats.freespace());
    } else {
      weights.weights.assign(cats.size(), 1.0);
      weights.weights[cats.freespace()] = kFreespaceWeight;
    }

    LossWeights w;
    if (j.contains("weights")) {
      const json& jw = j.at("weights");
      w.depth = jw.value("depth", w.depth);
      w.instance_2d = jw.value("instance_2d", w.instance_2d);
      w.geometry = jw.value("geometry", w.geometry);
      w.semantic = jw.value("semantic", w.semantic);
      w.instance = jw.value("instance", w.instance);
    }

    LossParts parts;
    parts.instance_2d = j.value("instance_2d_loss", 0.0);
    parts.depth = j.value("depth_loss", 0.0);
    if (j.contains("depth_pred") && j.contains("depth_gt")) {
      parts.depth = loss_depth_log_l1(read_depth(file(j, "depth_pred")), read_depth(file(j, "depth_gt")));
    }
    std::optional<CameraIntrinsics> K;
    if (j.contains("intrinsics")) K = read_intrinsics(file(j, "intrinsics"));

    json per_level = json::array();
    const json& levels = j.at("levels");
    for (std::size_t h = 0; h < levels.size(); ++h) {
      const json& L = levels[h];
      LevelLoss l;
      SiteMask mask;
      auto with_mask = [&](const GridSpec& spec) {
        if (K) mask = frustum_site_mask(spec, *K);
      };
      if (L.contains("occupancy_pred")) {
        const auto pred = read_volume<float>(file(L, "occupancy_pred"));
        const auto gt = read_volume<float>(file(L, "occupancy_gt"));
        with_mask(gt.spec());
        std::optional<DistanceVolume> sp, sg;
        if (h == 0) {
          if (!L.contains("sdf_pred") || !L.contains("sdf_gt")) {
            throw InvalidArgument("level 0 needs sdf_pred and sdf_gt");
          }
          sp = read_volume<float>(file(L, "sdf_pred"));
          sg = read_volume<float>(file(L, "sdf_gt"));
        }
        l.geometry = loss_geometry(pred, gt, sp ? &*sp : nullptr, sg ? &*sg : nullptr, static_cast<int>(h), mask);
      }
      if (L.contains("semantic_logits")) {
        const auto logits = read_volume<std::vector<float>>(file(L, "semantic_logits"));
        const auto targets = read_volume<std::uint32_t>(file(L, "semantic_targets"));
        with_mask(targets.spec());
        l.semantic = loss_semantic(logits, targets, weights, mask);
      }
      if (L.contains("instance_logits")) {
        InstanceChannelVolume logits{1, read_volume<std::vector<float>>(file(L, "instance_logits"))};
        if (!logits.logits.empty()) logits.channels = static_cast<int>(logits.logits.unordered().begin()->second.size());
        const auto targets = read_volume<std::int32_t>(file(L, "instance_targets"));
        with_mask(targets.spec());
        l.instance = loss_instance(logits, targets, mask);
      }
      per_level.push_back({{"level", h},
                           {"geometry", l.geometry ? json(*l.geometry) : json()},
                           {"semantic", l.semantic ? json(*l.semantic) : json()},
                           {"instance", l.instance ? json(*l.instance) : json()}});
      parts.levels.push_back(l);
    }
    const int expected = j.value("hierarchy_levels", static_cast<int>(parts.levels.size()));
    const double total = loss_total(parts, w, expected);
    const json out = {{"total", total}, {"depth", parts.depth}, {"instance_2d", parts.instance_2d},
                      {"levels", per_level}};
    if (const auto o = path_or(cfg, "out"); !o.empty()) write_text(o, out.dump(2) + "\n");
    std::cout << out.dump() << '\n';
  } catch (const json::exception& e) {
    throw InvalidArgument(config_path + ": " + e.what());
  }
  return 0;
}

int run_fuse(const RunConfig& cfg) {
  const std::string manifest_path = need(cfg, "frames");
  const json manifest = read_json(manifest_path);
  const fs::path base = fs::path(manifest_path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };

  std::vector<FusionFrame> frames;
  try {
    for (const json& f : manifest.at("frames")) {
      FusionFrame frame;
      frame.K = read_intrinsics(resolve(f.at("intrinsics").get<std::string>()));
      frame.depth = load_depth(resolve(f.at("depth").get<std::string>()), frame.K);
      if (f.contains("pose")) frame.camera_to_world = pose_from_json(f.at("pose"));
      if (f.contains("valid")) {
        const DepthMap valid = read_depth(resolve(f.at("valid").get<std::string>()));
        for (float v : valid.values()) frame.valid.push_back(v > 0.0f ? 1 : 0);
      }
      frames.push_back(std::move(frame));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(manifest_path + ": " + e.what());
  }
  const GridSpec spec = frustum_grid(cfg.voxel_size, cfg.dims);
  const DistanceVolume fused = volumetric_fuse_depths(frames, spec, {cfg.voxel_size, cfg.tau});
  write_volume(need(cfg, "out"), fused);
  std::cout << json{{"frames", frames.size()}, {"cells", fused.size()}}.dump() << '\n';
  return 0;
}

// Pre-scan for --config so the file supplies defaults that flags override.
RunConfig initial_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--run-config") return config_from_json(read_json(argv[i + 1]));
  }
  return RunConfig{};
}

int dispatch(int argc, char** argv) {
  RunConfig cfg = initial_config(argc, argv);
  std::string profile = to_string(cfg.profile);
  std::string run_config_path;
  bool dump_config = false;

  CLI::App app{"Panoptic 3D scene reconstruction toolkit"};
  app.require_subcommand(1);
  app.add_option("--run-config", run_config_path, "RunConfig JSON supplying defaults");
  app.add_flag("--dump-config", dump_config, "Print the effective RunConfig as JSON and exit");

  auto path = [&cfg](CLI::App* sub, const std::string& name, const std::string& help) {
    return sub->add_option("--" + name, cfg.paths[name], help);
  };
  auto common = [&](CLI::App* sub, bool random_seed = true) {
    sub->add_option("--profile", profile, "Dataset profile: synthetic or real");
    if (random_seed) sub->add_option("--seed", cfg.seed, "Random seed");
  };
  auto grid = [&](CLI::App* sub) {
    sub->add_option("--voxel", cfg.voxel_size, "Voxel size in meters");
    sub->add_option("--dims", cfg.dims, "Grid dimension per axis");
    sub->add_option("--tau", cfg.tau, "Truncation in voxels");
  };

  auto* synth = app.add_subcommand("synth-scene", "Generate a synthetic room, its depth, masks and GT");
  int boxes = 3;
  SynthConfig synth_cfg;
  common(synth);
  grid(synth);
  synth->add_option("--boxes", boxes, "Number of objects");
  synth->add_option("--width", synth_cfg.width, "Image width");
  synth->add_option("--height", synth_cfg.height, "Image height");
  synth->add_option("--focal", synth_cfg.focal, "Focal length in pixels");
  path(synth, "out", "Output directory");

  auto* make_gt = app.add_subcommand("make-gt", "Ground-truth panoptic TSDF from a labeled camera-space mesh");
  common(make_gt);
  grid(make_gt);
  make_gt->add_option("--levels", cfg.levels, "Hierarchy levels for --hierarchy-out");
  path(make_gt, "mesh", "Labeled mesh (.ply/.obj), camera space");
  path(make_gt, "intrinsics", "Intrinsics JSON");
  path(make_gt, "out", "Output panoptic volume (.spvl)");
  path(make_gt, "hierarchy-out", "Also store the GT hierarchy in this directory");

  auto* backproject = app.add_subcommand("backproject", "Lift depth, features and masks into sparse volumes");
  bool permute = false;
  common(backproject);
  grid(backproject);
  backproject->add_option("--max-instances", cfg.max_instances, "Maximum instance channels");
  backproject->add_flag("--permute-channels", permute, "Shuffle instance channels with --seed");
  path(backproject, "depth", "Depth raster (.dpth) or raw u16 millimeters");
  path(backproject, "intrinsics", "Intrinsics JSON");
  path(backproject, "features", "Feature raster (.dpth layout)");
  path(backproject, "masks", "Predicted mask manifest");
  path(backproject, "gt-masks", "Ground-truth mask manifest for channel matching");
  path(backproject, "out", "Output directory");

  auto* assemble = app.add_subcommand("assemble", "Run the coarse-to-fine hierarchy and assemble the panoptic surface");
  std::string predictor_spec, mesh_out;
  common(assemble, false);  // --seed names the lifted input here
  assemble->add_option("--theta-occ", cfg.theta_occ, "Occupancy threshold");
  assemble->add_option("--tau-s", cfg.tau_s, "Surface band in voxels");
  assemble->add_option("--tau", cfg.tau, "Truncation in voxels");
  assemble->add_option("--levels", cfg.levels, "Hierarchy levels");
  assemble->add_option("--predictor", predictor_spec, "replay:DIR")->required();
  assemble->add_option("--mesh-out", mesh_out, "Also write the labeled surface mesh");
  path(assemble, "seed", "Directory written by backproject");
  path(assemble, "intrinsics", "Intrinsics JSON restricting the coarsest level to the frustum");
  path(assemble, "out", "Output panoptic volume");

  auto* cluster = app.add_subcommand("cluster", "Greedy BFS instance clustering of a labeled surface");
  double radius = kClusterRadius;
  common(cluster);
  cluster->add_option("--radius", radius, "Cluster radius in meters");
  cluster->add_option("--tau-s", cfg.tau_s, "Surface band in voxels");
  path(cluster, "in", "Panoptic volume");
  path(cluster, "logits", "Semantic logit volume for confidences");
  path(cluster, "out", "Segments JSON");
  path(cluster, "volume-out", "Panoptic volume with cluster ids");

  auto* evaluate = app.add_subcommand("evaluate", "PRQ/RSQ/RRQ of predictions against ground truth");
  bool macro = false;
  std::string csv;
  bool voxel_given = false;
  common(evaluate);
  evaluate->add_option("--voxel", cfg.eval_voxel_size, "Evaluation voxel size in meters")
      ->each([&voxel_given](const std::string&) { voxel_given = true; });
  evaluate->add_option("--dims", cfg.dims, "Grid dimension for voxelizing meshes");
  evaluate->add_option("--iou", cfg.theta_iou, "IoU match threshold");
  evaluate->add_flag("--per-scene-macro", macro, "Average per-scene reports instead of pooling");
  evaluate->add_option("--csv", csv, "Also write a CSV table");
  path(evaluate, "pred", "Prediction file or directory");
  path(evaluate, "gt", "Ground-truth file or directory");
  path(evaluate, "intrinsics", "Intrinsics JSON for frustum masking");
  path(evaluate, "out", "Report JSON");

  auto* loss = app.add_subcommand("loss", "Evaluate loss terms from prediction/target volumes");
  common(loss);
  path(loss, "config", "Loss configuration JSON");
  path(loss, "out", "Output JSON");

  auto* fuse = app.add_subcommand("fuse", "Volumetric TSDF fusion of posed depth frames");
  common(fuse);
  grid(fuse);
  path(fuse, "frames", "Frame manifest JSON");
  path(fuse, "out", "Output distance volume");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  const DatasetProfile chosen = profile_from_string(profile);
  if (chosen != cfg.profile && !voxel_given) {
    cfg.eval_voxel_size = RunConfig::for_profile(chosen).eval_voxel_size;
  }
  cfg.profile = chosen;
  std::erase_if(cfg.paths, [](const auto& kv) { return kv.second.empty(); });
  cfg.validate();

  if (dump_config) {
    std::cout << config_to_json(cfg).dump(2) << '\n';
    return 0;
  }
  if (synth->parsed()) return run_synth_scene(cfg, boxes, synth_cfg);
  if (make_gt->parsed()) return run_make_gt(cfg);
  if (backproject->parsed()) return run_backproject(cfg, permute);
  if (assemble->parsed()) return run_assemble(cfg, predictor_spec, mesh_out);
  if (cluster->parsed()) return run_cluster(cfg, radius);
  if (evaluate->parsed()) return run_evaluate(cfg, macro, csv);
  if (loss->parsed()) return run_loss(cfg);
  if (fuse->parsed()) return run_fuse(cfg);
  throw UsageError("no subcommand given");
}

}  // namespace

int cli_main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const UsageError& e) {
    emit_error("usage", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    emit_error(to_string(e.kind()), e.what());
    return e.kind() == ErrorKind::Io ? kExitIo : kExitContract;
  } catch (const fs::filesystem_error& e) {
    emit_error("io", e.what());
    return kExitIo;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kExitFailure;
  }
}

}  // namespace panrec
