#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "panrec/geometry.hpp"
#include "panrec/sparse_volume.hpp"

namespace panrec {

struct Mask2D {
  std::vector<std::uint8_t> pixels;  // width*height, row-major, 0/1
  CategoryId category = 0;
  float score = 1.0f;
  InstanceId instance = kNoInstance;  // ground-truth masks only

  std::size_t area() const;
};

struct MaskSet2D {
  int width = 0;
  int height = 0;
  std::vector<Mask2D> masks;

  /// Throws InvalidArgument on size mismatches or empty masks.
  void validate() const;
};

double mask_iou(const Mask2D& a, const Mask2D& b);

/// Channel 0 is "no association"; channels 1..N carry detections.
struct ChannelAssignment {
  std::vector<int> pred_channel;                      // per predicted mask, in 1..N
  std::map<InstanceId, int> gt_channel;               // matched GT instances only
  std::vector<std::pair<std::size_t, std::size_t>> matches;  // (pred, gt) in match order

  int channel_count() const;  // N + 1
};

inline constexpr double kMaskMatchIoU = 0.5;

/// Greedy descending-IoU matching with IoU > 0.5; ties break on (pred, gt).
/// Matched pairs take channels 1.. in match order, then unmatched predictions
/// take fresh channels in index order.
ChannelAssignment match_masks_2d(const MaskSet2D& pred, const MaskSet2D& gt);

/// Relabels channels 1..N by a seeded permutation. Channel 0 stays fixed.
ChannelAssignment permute_channels(const ChannelAssignment& assign, std::uint64_t seed);

/// Matched GT instances get their channel; stuff, freespace and unmatched
/// voxels get channel 0.
SparseVolume<std::int32_t> build_3d_instance_targets(const PanopticVolume& gt_vol,
                                                     const ChannelAssignment& assign);

struct InstanceChannelVolume {
  int channels = 1;  // N + 1
  VectorVolume logits;

  /// Throws InvalidArgument if any cell's width differs from `channels`.
  void validate() const;
};

/// Per-voxel argmax; channel 0 decodes to kNoInstance. Ties go to the lowest
/// channel.
SparseVolume<InstanceId> decode_instance_channels(const InstanceChannelVolume& v);

/// One-hot logit volume from channel targets (for replay and round trips).
InstanceChannelVolume one_hot_channels(const SparseVolume<std::int32_t>& targets, int channels);

/// Per-pixel mask logits in channel order: channel c-1 of the raster holds the
/// mask assigned to channel c, as +logit inside and -logit outside.
Raster masks_to_logit_raster(const MaskSet2D& pred, const ChannelAssignment& assign,
                             float logit = 4.0f);

void write_mask_set(const std::string& manifest_path, const MaskSet2D& masks);
MaskSet2D read_mask_set(const std::string& manifest_path);

nlohmann::json assignment_to_json(const ChannelAssignment& a);
ChannelAssignment assignment_from_json(const nlohmann::json& j);

}  // namespace panrec
