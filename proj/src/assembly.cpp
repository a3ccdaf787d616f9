#include "panrec/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>

namespace panrec {

void AssemblyConfig::validate(float tau) const {
  if (!(surface_threshold > 0.0f) || surface_threshold > tau) {
    throw InvalidArgument("surface threshold must satisfy 0 < tau_s <= tau");
  }
}

namespace {

using LabelMap = std::unordered_map<VoxelCoord, PanopticLabel, VoxelCoordHash>;

std::int64_t dist2(const VoxelCoord& a, const VoxelCoord& b) {
  const std::int64_t di = a.i - b.i, dj = a.j - b.j, dk = a.k - b.k;
  return di * di + dj * dj + dk * dk;
}

// Nearest labeled voxel by expanding Chebyshev shells; falls back to a linear
// scan once shells get large relative to the labeled set.
class NearestLabel {
 public:
  explicit NearestLabel(const LabelMap& labeled) : labeled_(labeled) {}

  std::optional<PanopticLabel> query(const VoxelCoord& c) const {
    if (labeled_.empty()) return std::nullopt;
    std::int64_t best_d2 = std::numeric_limits<std::int64_t>::max();
    std::optional<VoxelCoord> best;
    auto consider = [&](const VoxelCoord& q, const PanopticLabel&) {
      const auto d2 = dist2(c, q);
      if (d2 < best_d2 || (d2 == best_d2 && CanonicalLess{}(q, *best))) {
        best_d2 = d2;
        best = q;
      }
    };

    for (std::int32_t r = 1;; ++r) {
      const std::int64_t shell_cost = 24LL * r * r + 2;
      if (shell_cost > static_cast<std::int64_t>(labeled_.size())) {
        for (const auto& [q, label] : labeled_) consider(q, label);
        return labeled_.at(*best);
      }
      for (std::int32_t dk = -r; dk <= r; ++dk) {
        for (std::int32_t dj = -r; dj <= r; ++dj) {
          const bool on_face = std::abs(dk) == r || std::abs(dj) == r;
          for (std::int32_t di = -r; di <= r; di += on_face ? 1 : 2 * r) {
            const VoxelCoord q{c.i + di, c.j + dj, c.k + dk};
            auto it = labeled_.find(q);
            if (it != labeled_.end()) consider(q, it->second);
          }
        }
      }
      const std::int64_t next = static_cast<std::int64_t>(r + 1) * (r + 1);
      if (best && best_d2 < next) return labeled_.at(*best);
    }
  }

 private:
  const LabelMap& labeled_;
};

std::optional<CategoryId> argmax_category(const std::vector<float>* logits) {
  if (!logits || logits->empty()) return std::nullopt;
  return static_cast<CategoryId>(std::max_element(logits->begin(), logits->end()) -
                                 logits->begin());
}

}  // namespace

PanopticVolume assemble_panoptic_surface(const DistanceVolume& sdf, const VectorVolume& semantic,
                                         const SparseVolume<InstanceId>& instances,
                                         const AssemblyConfig& cfg, AssemblyStats* stats) {
  if (!(cfg.surface_threshold > 0.0f)) throw InvalidArgument("surface threshold must be positive");
  if (!(semantic.spec() == sdf.spec()) || !(instances.spec() == sdf.spec())) {
    throw InvalidArgument("assembly heads must share one grid");
  }
  const CategoryTable& table = cfg.categories;
  AssemblyStats local;

  std::vector<VoxelCoord> surface;
  for (const auto& [c, d] : sdf.unordered()) {
    if (std::abs(d) < cfg.surface_threshold) surface.push_back(c);
  }
  std::sort(surface.begin(), surface.end(), CanonicalLess{});
  local.surface = surface.size();

  LabelMap labeled;
  std::vector<std::pair<VoxelCoord, InstanceId>> pending;  // awaiting instance category
  std::vector<VoxelCoord> unlabeled;
  std::map<InstanceId, std::map<CategoryId, std::size_t>> votes;

  for (const VoxelCoord& c : surface) {
    const auto category = argmax_category(semantic.find(c));
    if (category && !table.contains(*category)) {
      throw InvalidArgument("semantic logits wider than the category table");
    }
    if (category && table.is_stuff(*category)) {
      labeled.emplace(c, PanopticLabel{*category, kNoInstance});
      continue;
    }
    const InstanceId* id = instances.find(c);
    if (id && *id != kNoInstance) {
      pending.emplace_back(c, *id);
      if (category && table.is_thing(*category)) ++votes[*id][*category];
    } else {
      unlabeled.push_back(c);
    }
  }

  std::map<InstanceId, CategoryId> instance_category;
  for (const auto& [id, counts] : votes) {
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    instance_category[id] = best->first;
  }
  for (const auto& [c, id] : pending) {
    auto it = instance_category.find(id);
    if (it == instance_category.end()) {
      unlabeled.push_back(c);
      continue;
    }
    const auto own = argmax_category(semantic.find(c));
    if (own && table.is_thing(*own) && *own != it->second) ++local.disagreements;
    labeled.emplace(c, PanopticLabel{it->second, id});
  }

  PanopticVolume out(sdf.spec());
  out.reserve(surface.size());
  for (const auto& [c, label] : labeled) {
    out.insert_or_assign(c, PanopticVoxel{*sdf.find(c), label.semantic, label.instance});
  }

  const NearestLabel nearest(labeled);
  for (const VoxelCoord& c : unlabeled) {
    const auto label = nearest.query(c).value_or(PanopticLabel{table.freespace(), kNoInstance});
    out.insert_or_assign(c, PanopticVoxel{*sdf.find(c), label.semantic, label.instance});
    ++local.filled;
  }

  for (const auto& [c, v] : out.unordered()) {
    if (table.is_stuff(v.semantic)) ++local.stuff;
    if (table.is_thing(v.semantic)) ++local.things;
  }
  if (stats) *stats = local;
  return out;
}

}  // namespace panrec
