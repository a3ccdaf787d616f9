#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "panrec/sparse_volume.hpp"

namespace panrec {

// Sparse-volume file, little-endian:
//   "SPVL" | u32 version | f32 voxel_size | 3×f32 origin | 3×u32 dims |
//   u32 payload tag | u64 cell count | cells in canonical order as
//   (3×i32 coord, payload).
// The low 16 bits of the tag hold the PayloadKind; vector payloads carry
// their fixed width in the high 16 bits.

inline constexpr std::uint32_t kVolumeFormatVersion = 1;

enum class PayloadKind : std::uint32_t {
  Distance = 1,       // f32
  FeatureVector = 2,  // f32 × width
  LogitVector = 3,    // f32 × width
  Panoptic = 4,       // f32 sdf, u32 semantic, u32 instance
  Label = 5,          // u32 semantic, u32 instance
  Occupancy = 6,      // u8
  Channel = 7,        // i32
  InstanceId = 8,     // u32
  Probability = 9,    // f32
};

const char* to_string(PayloadKind kind);

struct VolumeHeader {
  GridSpec spec;
  PayloadKind kind = PayloadKind::Distance;
  std::uint32_t width = 0;  // vector payloads only
  std::uint64_t cell_count = 0;
};

template <typename P>
PayloadKind default_payload_kind();
template <> PayloadKind default_payload_kind<float>();
template <> PayloadKind default_payload_kind<std::vector<float>>();
template <> PayloadKind default_payload_kind<PanopticVoxel>();
template <> PayloadKind default_payload_kind<PanopticLabel>();
template <> PayloadKind default_payload_kind<std::uint8_t>();
template <> PayloadKind default_payload_kind<std::int32_t>();
template <> PayloadKind default_payload_kind<std::uint32_t>();

template <typename P>
void write_volume(std::ostream& out, const SparseVolume<P>& v, PayloadKind kind);
template <typename P>
SparseVolume<P> read_volume(std::istream& in, const std::string& name = "<stream>");

template <typename P>
void write_volume(const std::string& path, const SparseVolume<P>& v, PayloadKind kind);
template <typename P>
void write_volume(const std::string& path, const SparseVolume<P>& v) {
  write_volume(path, v, default_payload_kind<P>());
}
template <typename P>
SparseVolume<P> read_volume(const std::string& path);

VolumeHeader read_volume_header(const std::string& path);

}  // namespace panrec
