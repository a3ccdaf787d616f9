#include "panrec/instance_propagation.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "binary_io.hpp"
#include "panrec/keyed_hash.hpp"

namespace panrec {

std::size_t Mask2D::area() const {
  return static_cast<std::size_t>(std::count_if(pixels.begin(), pixels.end(),
                                                [](std::uint8_t p) { return p != 0; }));
}

void MaskSet2D::validate() const {
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    if (masks[m].pixels.size() != n) {
      throw InvalidArgument("mask " + std::to_string(m) + " does not match the image size");
    }
    if (masks[m].area() == 0) throw InvalidArgument("mask " + std::to_string(m) + " is empty");
  }
}

double mask_iou(const Mask2D& a, const Mask2D& b) {
  if (a.pixels.size() != b.pixels.size()) throw InvalidArgument("mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t p = 0; p < a.pixels.size(); ++p) {
    const bool x = a.pixels[p] != 0;
    const bool y = b.pixels[p] != 0;
    inter += (x && y) ? 1 : 0;
    uni += (x || y) ? 1 : 0;
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

int ChannelAssignment::channel_count() const {
  int n = 0;
  for (int c : pred_channel) n = std::max(n, c);
  return n + 1;
}

ChannelAssignment match_masks_2d(const MaskSet2D& pred, const MaskSet2D& gt) {
  pred.validate();
  gt.validate();
  if (pred.width != gt.width || pred.height != gt.height) {
    throw InvalidArgument("predicted and ground-truth masks differ in image size");
  }

  struct Candidate {
    double iou;
    std::size_t pred;
    std::size_t gt;
  };
  std::vector<Candidate> candidates;
  for (std::size_t p = 0; p < pred.masks.size(); ++p) {
    for (std::size_t g = 0; g < gt.masks.size(); ++g) {
      const double iou = mask_iou(pred.masks[p], gt.masks[g]);
      if (iou > kMaskMatchIoU) candidates.push_back({iou, p, g});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    return std::tie(a.pred, a.gt) < std::tie(b.pred, b.gt);
  });

  ChannelAssignment out;
  out.pred_channel.assign(pred.masks.size(), 0);
  std::vector<char> gt_used(gt.masks.size(), 0);
  int next = 1;
  for (const Candidate& c : candidates) {
    if (out.pred_channel[c.pred] != 0 || gt_used[c.gt]) continue;
    out.pred_channel[c.pred] = next;
    gt_used[c.gt] = 1;
    out.gt_channel[gt.masks[c.gt].instance] = next;
    out.matches.emplace_back(c.pred, c.gt);
    ++next;
  }
  for (int& ch : out.pred_channel) {
    if (ch == 0) ch = next++;
  }
  return out;
}

ChannelAssignment permute_channels(const ChannelAssignment& assign, std::uint64_t seed) {
  const int n = assign.channel_count() - 1;
  std::vector<int> perm(static_cast<std::size_t>(n) + 1);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(mix64(seed));
  std::shuffle(perm.begin() + 1, perm.end(), rng);

  ChannelAssignment out = assign;
  for (int& ch : out.pred_channel) ch = perm[ch];
  for (auto& kv : out.gt_channel) kv.second = perm[kv.second];
  return out;
}

SparseVolume<std::int32_t> build_3d_instance_targets(const PanopticVolume& gt_vol,
                                                     const ChannelAssignment& assign) {
  std::set<InstanceId> present;
  for (const auto& kv : gt_vol.unordered()) {
    if (kv.second.instance != kNoInstance) present.insert(kv.second.instance);
  }
  for (const auto& kv : assign.gt_channel) {
    if (!present.count(kv.first)) {
      throw InvalidArgument("assignment references GT instance " + std::to_string(kv.first) +
                            " absent from the volume");
    }
  }

  SparseVolume<std::int32_t> out(gt_vol.spec());
  out.reserve(gt_vol.size());
  for (const auto& [coord, voxel] : gt_vol.unordered()) {
    std::int32_t channel = 0;
    if (voxel.instance != kNoInstance) {
      auto it = assign.gt_channel.find(voxel.instance);
      if (it != assign.gt_channel.end()) channel = it->second;
    }
    out.insert_or_assign(coord, channel);
  }
  return out;
}

void InstanceChannelVolume::validate() const {
  if (channels < 1) throw InvalidArgument("instance volume needs at least one channel");
  for (const auto& kv : logits.unordered()) {
    if (kv.second.size() != static_cast<std::size_t>(channels)) {
      throw InvalidArgument("instance logit width differs from channel count");
    }
  }
}

SparseVolume<InstanceId> decode_instance_channels(const InstanceChannelVolume& v) {
  SparseVolume<InstanceId> out(v.logits.spec());
  out.reserve(v.logits.size());
  for (const auto& [coord, logits] : v.logits.unordered()) {
    // max_element returns the first maximum, i.e. the lowest channel on ties.
    const auto best = std::max_element(logits.begin(), logits.end());
    const auto channel = best == logits.end() ? 0 : best - logits.begin();
    out.insert_or_assign(coord, static_cast<InstanceId>(channel));
  }
  return out;
}

InstanceChannelVolume one_hot_channels(const SparseVolume<std::int32_t>& targets, int channels) {
  InstanceChannelVolume out{channels, VectorVolume(targets.spec())};
  out.logits.reserve(targets.size());
  for (const auto& [coord, ch] : targets.unordered()) {
    if (ch < 0 || ch >= channels) throw InvalidArgument("channel target out of range");
    std::vector<float> logits(static_cast<std::size_t>(channels), 0.0f);
    logits[static_cast<std::size_t>(ch)] = 1.0f;
    out.logits.insert_or_assign(coord, std::move(logits));
  }
  return out;
}

Raster masks_to_logit_raster(const MaskSet2D& pred, const ChannelAssignment& assign,
                             float logit) {
  pred.validate();
  if (assign.pred_channel.size() != pred.masks.size()) {
    throw InvalidArgument("assignment does not cover every predicted mask");
  }
  const int n = assign.channel_count() - 1;
  Raster raster(pred.width, pred.height, n, -logit);
  for (std::size_t m = 0; m < pred.masks.size(); ++m) {
    const int c = assign.pred_channel[m] - 1;
    for (int v = 0; v < pred.height; ++v) {
      for (int u = 0; u < pred.width; ++u) {
        if (pred.masks[m].pixels[static_cast<std::size_t>(v) * pred.width + u]) {
          raster.at(u, v, c) = logit;
        }
      }
    }
  }
  return raster;
}

namespace {

std::string rle_path_for(const std::string& manifest_path) {
  return std::filesystem::path(manifest_path).replace_extension(".rle").string();
}

}  // namespace

// RLE file: "RLEM" | u32 width | u32 height | u32 mask count | per mask:
// u32 run count, then u32 run lengths alternating 0-runs and 1-runs,
// starting with a (possibly empty) 0-run.
void write_mask_set(const std::string& manifest_path, const MaskSet2D& masks) {
  masks.validate();
  const std::string rle_path = rle_path_for(manifest_path);
  {
    auto out = detail::open_output(rle_path);
    detail::write_magic(out, "RLEM");
    detail::write_pod(out, static_cast<std::uint32_t>(masks.width));
    detail::write_pod(out, static_cast<std::uint32_t>(masks.height));
    detail::write_pod(out, static_cast<std::uint32_t>(masks.masks.size()));
    for (const Mask2D& m : masks.masks) {
      std::vector<std::uint32_t> runs;
      std::uint8_t current = 0;
      std::uint32_t length = 0;
      for (std::uint8_t p : m.pixels) {
        const std::uint8_t bit = p ? 1 : 0;
        if (bit != current) {
          runs.push_back(length);
          current = bit;
          length = 0;
        }
        ++length;
      }
      runs.push_back(length);
      detail::write_pod(out, static_cast<std::uint32_t>(runs.size()));
      for (auto r : runs) detail::write_pod(out, r);
    }
    detail::finish_output(out, rle_path);
  }

  nlohmann::json manifest;
  manifest["width"] = masks.width;
  manifest["height"] = masks.height;
  manifest["rle"] = std::filesystem::path(rle_path).filename().string();
  manifest["masks"] = nlohmann::json::array();
  for (const Mask2D& m : masks.masks) {
    manifest["masks"].push_back(
        {{"category", m.category}, {"score", m.score}, {"instance", m.instance}});
  }
  auto out = detail::open_output(manifest_path, false);
  out << manifest.dump(2) << '\n';
  detail::finish_output(out, manifest_path);
}

MaskSet2D read_mask_set(const std::string& manifest_path) {
  nlohmann::json manifest;
  {
    auto in = detail::open_input(manifest_path, false);
    try {
      in >> manifest;
    } catch (const nlohmann::json::exception& e) {
      throw IoError(manifest_path + ": " + e.what());
    }
  }
  MaskSet2D set;
  std::string rle_name;
  try {
    set.width = manifest.at("width").get<int>();
    set.height = manifest.at("height").get<int>();
    rle_name = manifest.at("rle").get<std::string>();
    for (const auto& m : manifest.at("masks")) {
      Mask2D mask;
      mask.category = m.at("category").get<CategoryId>();
      mask.score = m.value("score", 1.0f);
      mask.instance = m.value("instance", kNoInstance);
      set.masks.push_back(std::move(mask));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(manifest_path + ": " + e.what());
  }

  const auto rle_path =
      (std::filesystem::path(manifest_path).parent_path() / rle_name).string();
  auto in = detail::open_input(rle_path);
  detail::expect_magic(in, "RLEM", rle_path);
  const auto w = detail::read_pod<std::uint32_t>(in, "mask width");
  const auto h = detail::read_pod<std::uint32_t>(in, "mask height");
  const auto count = detail::read_pod<std::uint32_t>(in, "mask count");
  if (static_cast<int>(w) != set.width || static_cast<int>(h) != set.height ||
      count != set.masks.size()) {
    throw IoError(rle_path + ": disagrees with its manifest");
  }
  const std::size_t n = static_cast<std::size_t>(w) * h;
  for (Mask2D& mask : set.masks) {
    const auto runs = detail::read_pod<std::uint32_t>(in, "run count");
    mask.pixels.reserve(n);
    std::uint8_t bit = 0;
    for (std::uint32_t r = 0; r < runs; ++r) {
      const auto len = detail::read_pod<std::uint32_t>(in, "run length");
      if (mask.pixels.size() + len > n) throw IoError(rle_path + ": run overflows the image");
      mask.pixels.insert(mask.pixels.end(), len, bit);
      bit ^= 1;
    }
    if (mask.pixels.size() != n) throw IoError(rle_path + ": runs do not cover the image");
  }
  try {
    set.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(manifest_path + ": " + e.what());
  }
  return set;
}

nlohmann::json assignment_to_json(const ChannelAssignment& a) {
  nlohmann::json j;
  j["pred_channel"] = a.pred_channel;
  j["gt_channel"] = nlohmann::json::object();
  for (const auto& [id, ch] : a.gt_channel) j["gt_channel"][std::to_string(id)] = ch;
  j["matches"] = nlohmann::json::array();
  for (const auto& [p, g] : a.matches) j["matches"].push_back({p, g});
  return j;
}

ChannelAssignment assignment_from_json(const nlohmann::json& j) {
  ChannelAssignment a;
  a.pred_channel = j.at("pred_channel").get<std::vector<int>>();
  for (const auto& [key, value] : j.at("gt_channel").items()) {
    a.gt_channel[static_cast<InstanceId>(std::stoul(key))] = value.get<int>();
  }
  for (const auto& m : j.at("matches")) {
    a.matches.emplace_back(m.at(0).get<std::size_t>(), m.at(1).get<std::size_t>());
  }
  return a;
}

}  // namespace panrec
