#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "panrec/categories.hpp"
#include "panrec/geometry.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct Segment {
  CategoryId category = 0;
  InstanceId instance = kNoInstance;  // none for stuff
  VoxelSet voxels;
  std::optional<double> confidence;  // carried, never used for matching
};

/// Voxels of `spec` whose centers lie inside the frustum.
VoxelSet frustum_voxel_mask(const GridSpec& spec, const CameraIntrinsics& K);

/// Things segments group by (category, instance), stuff segments by
/// category. Freespace voxels and things voxels without an instance are
/// ignored; so is everything outside `mask` when one is given.
std::vector<Segment> extract_segments(const LabelVolume& v, const CategoryTable& categories,
                                      const VoxelSet* mask = nullptr);
std::vector<Segment> extract_segments(const PanopticVolume& v, const CategoryTable& categories,
                                      const VoxelSet* mask = nullptr);

/// Re-bins labels onto `target` by voxel center; voxels that collide keep the
/// most frequent label (ties to the smaller label).
LabelVolume resample_labels(const LabelVolume& v, const GridSpec& target);
LabelVolume to_labels(const PanopticVolume& v);

inline constexpr double kMatchIoU = 0.25;

struct MatchPair {
  std::size_t pred = 0;  // index into the predicted segment list
  std::size_t gt = 0;
  double iou = 0.0;
};

struct CategoryMatch {
  std::vector<MatchPair> tp;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t gt_segments = 0;
  std::size_t pred_segments = 0;
};

struct MatchResult {
  std::map<CategoryId, CategoryMatch> categories;  // every category seen on either side
};

/// Repeatedly takes the highest-IoU unmatched same-category pair with
/// IoU >= iou_threshold. Equal IoUs resolve by (pred, gt) index.
MatchResult greedy_match(const std::vector<Segment>& pred, const std::vector<Segment>& gt,
                         double iou_threshold = kMatchIoU);

/// Additive per-category tallies; pooling scenes is a plain sum.
struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double iou_sum = 0.0;
  bool in_gt = false;

  MatchCounts& operator+=(const MatchCounts& o);
};

std::map<CategoryId, MatchCounts> match_counts(const MatchResult& m);

struct CategoryScore {
  double prq = 0.0;  // percent
  double rsq = 0.0;
  double rrq = 0.0;
  MatchCounts counts;
};

struct AggregateScore {
  double prq = 0.0;
  double rsq = 0.0;
  double rrq = 0.0;
  std::size_t categories = 0;  // how many categories were averaged
};

struct ClassReport {
  std::map<CategoryId, CategoryScore> categories;
  AggregateScore all;
  AggregateScore things;
  AggregateScore stuff;
};

CategoryScore score_counts(const MatchCounts& c);

/// Per-category PRQ/RSQ/RRQ in percent plus unweighted category means.
/// Categories with no segments on either side are left out.
ClassReport prq_rsq_rrq(const std::map<CategoryId, MatchCounts>& counts,
                        const CategoryTable& categories);
ClassReport prq_rsq_rrq(const MatchResult& m, const CategoryTable& categories);

/// Per-scene reports averaged category by category (each category over the
/// scenes where it appears), then aggregated.
ClassReport macro_average(const std::vector<ClassReport>& scenes, const CategoryTable& categories);

struct EvalConfig {
  double iou_threshold = kMatchIoU;
  bool per_scene_macro = false;
};

struct ScenePair {
  std::string name;
  LabelVolume pred;
  LabelVolume gt;
  std::optional<VoxelSet> mask;  // frustum voxels; all voxels when absent
};

/// Matches every scene (in parallel) and reports pooled counts, or the
/// macro average when `per_scene_macro` is set.
ClassReport evaluate_scenes(const std::vector<ScenePair>& scenes, const CategoryTable& categories,
                            const EvalConfig& cfg);

nlohmann::json report_to_json(const ClassReport& r, const CategoryTable& categories);
/// Rows PRQ/RSQ/RRQ; columns mean, things, stuff, then each category.
std::string report_to_csv(const ClassReport& r, const CategoryTable& categories);

}  // namespace panrec
