#include "panrec/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "panrec/parallel.hpp"

namespace panrec {

SiteMask frustum_site_mask(const GridSpec& spec, const CameraIntrinsics& K) {
  return [spec, f = Frustum(K)](const VoxelCoord& c) { return f.contains(spec.center(c)); };
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

template <typename A, typename B>
void check_same_sites(const SparseVolume<A>& a, const SparseVolume<B>& b, const char* what) {
  bool same = a.size() == b.size();
  if (same) {
    for (const auto& kv : a.unordered()) {
      if (!b.contains(kv.first)) {
        same = false;
        break;
      }
    }
  }
  if (!same) throw ContractViolation(std::string(what) + ": prediction and target sites differ");
}

template <typename P>
std::vector<VoxelCoord> masked_sites(const SparseVolume<P>& v, const SiteMask& mask) {
  std::vector<VoxelCoord> sites = v.coords();
  if (mask) std::erase_if(sites, [&](const VoxelCoord& c) { return !mask(c); });
  return sites;
}

// Per-site terms in canonical order, evaluated in parallel, reduced by tree.
double mean_of(const std::vector<VoxelCoord>& sites, const std::function<double(const VoxelCoord&)>& term) {
  if (sites.empty()) return 0.0;
  std::vector<double> terms(sites.size());
  parallel_for(0, sites.size(), [&](std::size_t i) { terms[i] = term(sites[i]); });
  return pairwise_sum(terms) / static_cast<double>(sites.size());
}

// -log softmax(logits)[target], via log-sum-exp.
double cross_entropy(const std::vector<float>& logits, std::size_t target) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (float l : logits) z += std::exp(static_cast<double>(l) - mx);
  return std::log(z) + mx - static_cast<double>(logits[target]);
}

}  // namespace

double loss_geometry(const SparseVolume<float>& occ_pred, const SparseVolume<float>& occ_gt,
                     const DistanceVolume* sdf_pred, const DistanceVolume* sdf_gt, int level,
                     const SiteMask& mask) {
  check_same_sites(occ_pred, occ_gt, "occupancy loss");
  const double bce = mean_of(masked_sites(occ_gt, mask), [&](const VoxelCoord& c) {
    const double p = std::clamp<double>(*occ_pred.find(c), kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double y = *occ_gt.find(c);
    return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  });
  if (level != 0) return bce;

  if (!sdf_pred || !sdf_gt) throw InvalidArgument("level-0 geometry loss needs distance volumes");
  const auto sites = masked_sites(*sdf_gt, mask);
  for (const VoxelCoord& c : sites) {
    if (!sdf_pred->contains(c)) throw ContractViolation("distance loss: prediction misses a target site");
  }
  const double l1 = mean_of(sites, [&](const VoxelCoord& c) {
    return std::abs(static_cast<double>(*sdf_pred->find(c)) - *sdf_gt->find(c));
  });
  return bce + l1;
}

double loss_semantic(const VectorVolume& logits, const SparseVolume<CategoryId>& targets,
                     const ClassWeightTable& weights, const SiteMask& mask) {
  check_same_sites(logits, targets, "semantic loss");
  const auto sites = masked_sites(targets, mask);
  for (const VoxelCoord& c : sites) {
    const CategoryId t = *targets.find(c);
    if (t >= logits.find(c)->size() || t >= weights.weights.size()) {
      throw InvalidArgument("semantic target " + std::to_string(t) + " is not a known category");
    }
  }
  if (sites.empty()) return 0.0;
  std::vector<double> weighted(sites.size()), w(sites.size());
  parallel_for(0, sites.size(), [&](std::size_t i) {
    const CategoryId t = *targets.find(sites[i]);
    w[i] = weights.at(t);
    weighted[i] = w[i] * cross_entropy(*logits.find(sites[i]), t);
  });
  const double norm = pairwise_sum(w);
  return norm > 0.0 ? pairwise_sum(weighted) / norm : 0.0;
}

double loss_instance(const InstanceChannelVolume& logits, const SparseVolume<std::int32_t>& targets,
                     const SiteMask& mask) {
  logits.validate();
  check_same_sites(logits.logits, targets, "instance loss");
  const auto sites = masked_sites(targets, mask);
  for (const VoxelCoord& c : sites) {
    const std::int32_t t = *targets.find(c);
    if (t < 0 || t >= logits.channels) {
      throw InvalidArgument("instance target channel " + std::to_string(t) + " outside " +
                            std::to_string(logits.channels) + " channels");
    }
  }
  return mean_of(sites, [&](const VoxelCoord& c) {
    return cross_entropy(*logits.logits.find(c), static_cast<std::size_t>(*targets.find(c)));
  });
}

double loss_depth_log_l1(const DepthMap& pred, const DepthMap& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw InvalidArgument("depth loss: image sizes differ");
  }
  std::vector<double> terms;
  for (int v = 0; v < gt.height(); ++v) {
    for (int u = 0; u < gt.width(); ++u) {
      if (pred.valid(u, v) && gt.valid(u, v)) {
        terms.push_back(std::abs(std::log(static_cast<double>(pred.at(u, v))) -
                                 std::log(static_cast<double>(gt.at(u, v)))));
      }
    }
  }
  return terms.empty() ? 0.0 : pairwise_sum(terms) / static_cast<double>(terms.size());
}

void LossWeights::validate() const {
  for (double w : {depth, instance_2d, geometry, semantic, instance}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
}

double loss_total(const LossParts& parts, const LossWeights& w, int levels) {
  w.validate();
  if (levels < 1) throw InvalidArgument("loss needs at least one hierarchy level");
  if (static_cast<int>(parts.levels.size()) != levels) {
    throw InvalidArgument("expected " + std::to_string(levels) + " level terms, got " +
                          std::to_string(parts.levels.size()));
  }
  double total = w.depth * parts.depth + w.instance_2d * parts.instance_2d;
  for (std::size_t h = 0; h < parts.levels.size(); ++h) {
    const LevelLoss& l = parts.levels[h];
    if (!l.geometry || !l.semantic || !l.instance) {
      throw InvalidArgument("level " + std::to_string(h) + " is missing a loss term");
    }
    total += w.geometry * *l.geometry + w.semantic * *l.semantic + w.instance * *l.instance;
  }
  return total;
}

}  // namespace panrec
