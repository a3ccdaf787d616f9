#include "panrec/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "panrec/parallel.hpp"

namespace panrec {

VoxelSet frustum_voxel_mask(const GridSpec& spec, const CameraIntrinsics& K) {
  spec.validate();
  K.validate();
  const Frustum f(K);
  VoxelSet out;
  for (std::int32_t k = 0; k < spec.dims[2]; ++k) {
    for (std::int32_t j = 0; j < spec.dims[1]; ++j) {
      for (std::int32_t i = 0; i < spec.dims[0]; ++i) {
        const VoxelCoord c{i, j, k};
        if (f.contains(spec.center(c))) out.push_back(c);
      }
    }
  }
  return out;  // loop order is canonical
}

std::vector<Segment> extract_segments(const LabelVolume& v, const CategoryTable& categories,
                                      const VoxelSet* mask) {
  if (mask && !is_voxel_set(*mask)) throw InvalidArgument("frustum mask is not a canonical voxel set");
  std::map<std::pair<CategoryId, InstanceId>, VoxelSet> groups;
  v.for_each([&](const VoxelCoord& c, const PanopticLabel& label) {
    if (!categories.contains(label.semantic)) {
      throw InvalidArgument("label " + std::to_string(label.semantic) + " outside the category table");
    }
    if (categories.is_freespace(label.semantic)) return;
    if (mask && !std::binary_search(mask->begin(), mask->end(), c, CanonicalLess{})) return;
    if (categories.is_stuff(label.semantic)) {
      groups[{label.semantic, kNoInstance}].push_back(c);
    } else if (label.instance != kNoInstance) {
      groups[{label.semantic, label.instance}].push_back(c);
    }
  });
  std::vector<Segment> out;
  out.reserve(groups.size());
  for (auto& [key, voxels] : groups) out.push_back({key.first, key.second, std::move(voxels), {}});
  return out;
}

LabelVolume to_labels(const PanopticVolume& v) {
  LabelVolume out(v.spec());
  out.reserve(v.size());
  for (const auto& [c, voxel] : v.unordered()) out.insert_or_assign(c, voxel.label());
  return out;
}

std::vector<Segment> extract_segments(const PanopticVolume& v, const CategoryTable& categories,
                                      const VoxelSet* mask) {
  return extract_segments(to_labels(v), categories, mask);
}

LabelVolume resample_labels(const LabelVolume& v, const GridSpec& target) {
  target.validate();
  if (v.spec() == target) return v;
  std::unordered_map<VoxelCoord, std::map<PanopticLabel, std::size_t>, VoxelCoordHash> votes;
  for (const auto& [c, label] : v.unordered()) {
    const VoxelCoord t = target.coord_of(v.spec().center(c));
    if (target.contains(t)) ++votes[t][label];
  }
  LabelVolume out(target);
  out.reserve(votes.size());
  for (const auto& [c, counts] : votes) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out.insert_or_assign(c, best->first);
  }
  return out;
}

MatchResult greedy_match(const std::vector<Segment>& pred, const std::vector<Segment>& gt,
                         double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw InvalidArgument("IoU threshold must lie in (0, 1]");
  }
  MatchResult out;
  for (const Segment& s : pred) ++out.categories[s.category].pred_segments;
  for (const Segment& s : gt) ++out.categories[s.category].gt_segments;

  std::vector<MatchPair> candidates;
  for (std::size_t p = 0; p < pred.size(); ++p) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (pred[p].category != gt[g].category) continue;
      const std::size_t inter = intersection_size(pred[p].voxels, gt[g].voxels);
      if (inter == 0) continue;
      const std::size_t uni = pred[p].voxels.size() + gt[g].voxels.size() - inter;
      const double iou = static_cast<double>(inter) / static_cast<double>(uni);
      if (iou >= iou_threshold) candidates.push_back({p, g, iou});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
  });

  std::vector<char> pred_used(pred.size(), 0), gt_used(gt.size(), 0);
  for (const MatchPair& m : candidates) {
    if (pred_used[m.pred] || gt_used[m.gt]) continue;
    pred_used[m.pred] = gt_used[m.gt] = 1;
    out.categories[pred[m.pred].category].tp.push_back(m);
  }
  for (auto& [c, cm] : out.categories) {
    cm.fp = cm.pred_segments - cm.tp.size();
    cm.fn = cm.gt_segments - cm.tp.size();
  }
  return out;
}

MatchCounts& MatchCounts::operator+=(const MatchCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  iou_sum += o.iou_sum;
  in_gt = in_gt || o.in_gt;
  return *this;
}

std::map<CategoryId, MatchCounts> match_counts(const MatchResult& m) {
  std::map<CategoryId, MatchCounts> out;
  for (const auto& [c, cm] : m.categories) {
    MatchCounts counts{cm.tp.size(), cm.fp, cm.fn, 0.0, cm.gt_segments > 0};
    for (const MatchPair& p : cm.tp) counts.iou_sum += p.iou;
    out[c] = counts;
  }
  return out;
}

CategoryScore score_counts(const MatchCounts& c) {
  CategoryScore s;
  s.counts = c;
  const double denom = c.tp + 0.5 * c.fp + 0.5 * c.fn;
  if (c.tp > 0) {
    s.rsq = 100.0 * c.iou_sum / static_cast<double>(c.tp);
    s.rrq = 100.0 * static_cast<double>(c.tp) / denom;
    s.prq = 100.0 * c.iou_sum / denom;
  }
  return s;
}

namespace {

void aggregate(ClassReport& r, const CategoryTable& categories) {
  auto add = [](AggregateScore& a, const CategoryScore& s) {
    a.prq += s.prq;
    a.rsq += s.rsq;
    a.rrq += s.rrq;
    ++a.categories;
  };
  for (const auto& [c, s] : r.categories) {
    add(r.all, s);
    if (categories.is_thing(c)) add(r.things, s);
    if (categories.is_stuff(c)) add(r.stuff, s);
  }
  for (AggregateScore* a : {&r.all, &r.things, &r.stuff}) {
    if (a->categories == 0) continue;
    const auto n = static_cast<double>(a->categories);
    a->prq /= n;
    a->rsq /= n;
    a->rrq /= n;
  }
}

}  // namespace

ClassReport prq_rsq_rrq(const std::map<CategoryId, MatchCounts>& counts,
                        const CategoryTable& categories) {
  ClassReport r;
  for (const auto& [c, n] : counts) {
    if (n.tp + n.fp + n.fn == 0) continue;
    r.categories[c] = score_counts(n);
  }
  aggregate(r, categories);
  return r;
}

ClassReport prq_rsq_rrq(const MatchResult& m, const CategoryTable& categories) {
  return prq_rsq_rrq(match_counts(m), categories);
}

ClassReport macro_average(const std::vector<ClassReport>& scenes, const CategoryTable& categories) {
  ClassReport r;
  std::map<CategoryId, std::size_t> seen;
  for (const ClassReport& scene : scenes) {
    for (const auto& [c, s] : scene.categories) {
      CategoryScore& acc = r.categories[c];
      acc.prq += s.prq;
      acc.rsq += s.rsq;
      acc.rrq += s.rrq;
      acc.counts += s.counts;
      ++seen[c];
    }
  }
  for (auto& [c, s] : r.categories) {
    const auto n = static_cast<double>(seen[c]);
    s.prq /= n;
    s.rsq /= n;
    s.rrq /= n;
  }
  aggregate(r, categories);
  return r;
}

ClassReport evaluate_scenes(const std::vector<ScenePair>& scenes, const CategoryTable& categories,
                            const EvalConfig& cfg) {
  std::vector<std::map<CategoryId, MatchCounts>> per_scene(scenes.size());
  parallel_for(0, scenes.size(), [&](std::size_t s) {
    const ScenePair& scene = scenes[s];
    if (!(scene.pred.spec() == scene.gt.spec())) {
      throw InvalidArgument("scene '" + scene.name + "': prediction and ground truth grids differ");
    }
    const VoxelSet* mask = scene.mask ? &*scene.mask : nullptr;
    per_scene[s] = match_counts(greedy_match(extract_segments(scene.pred, categories, mask),
                                             extract_segments(scene.gt, categories, mask),
                                             cfg.iou_threshold));
  });

  if (cfg.per_scene_macro) {
    std::vector<ClassReport> reports;
    reports.reserve(per_scene.size());
    for (const auto& counts : per_scene) reports.push_back(prq_rsq_rrq(counts, categories));
    return macro_average(reports, categories);
  }
  std::map<CategoryId, MatchCounts> pooled;
  for (const auto& counts : per_scene) {
    for (const auto& [c, n] : counts) pooled[c] += n;
  }
  return prq_rsq_rrq(pooled, categories);
}

nlohmann::json report_to_json(const ClassReport& r, const CategoryTable& categories) {
  auto agg = [](const AggregateScore& a) {
    return nlohmann::json{{"prq", a.prq}, {"rsq", a.rsq}, {"rrq", a.rrq}, {"categories", a.categories}};
  };
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [c, s] : r.categories) {
    per.push_back({{"id", c},
                   {"name", categories.contains(c) ? categories.at(c).name : std::string("?")},
                   {"prq", s.prq},
                   {"rsq", s.rsq},
                   {"rrq", s.rrq},
                   {"tp", s.counts.tp},
                   {"fp", s.counts.fp},
                   {"fn", s.counts.fn},
                   {"iou_sum", s.counts.iou_sum},
                   {"in_gt", s.counts.in_gt}});
  }
  return {{"all", agg(r.all)}, {"things", agg(r.things)}, {"stuff", agg(r.stuff)},
          {"categories", per}};
}

std::string report_to_csv(const ClassReport& r, const CategoryTable& categories) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "metric,mean,things,stuff";
  for (const auto& [c, s] : r.categories) out << ',' << categories.at(c).name;
  out << '\n';
  auto row = [&](const char* name, auto pick_agg, auto pick) {
    out << name << ',' << pick_agg(r.all) << ',' << pick_agg(r.things) << ',' << pick_agg(r.stuff);
    for (const auto& [c, s] : r.categories) out << ',' << pick(s);
    out << '\n';
  };
  row("PRQ", [](const AggregateScore& a) { return a.prq; }, [](const CategoryScore& s) { return s.prq; });
  row("RSQ", [](const AggregateScore& a) { return a.rsq; }, [](const CategoryScore& s) { return s.rsq; });
  row("RRQ", [](const AggregateScore& a) { return a.rrq; }, [](const CategoryScore& s) { return s.rrq; });
  return out.str();
}

}  // namespace panrec
