#include "panrec/volume_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "binary_io.hpp"

namespace panrec {

using detail::read_pod;
using detail::write_pod;

const char* to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::Distance: return "distance";
    case PayloadKind::FeatureVector: return "feature_vector";
    case PayloadKind::LogitVector: return "logit_vector";
    case PayloadKind::Panoptic: return "panoptic";
    case PayloadKind::Label: return "label";
    case PayloadKind::Occupancy: return "occupancy";
    case PayloadKind::Channel: return "channel";
    case PayloadKind::InstanceId: return "instance_id";
    case PayloadKind::Probability: return "probability";
  }
  return "unknown";
}

namespace {

template <typename P>
struct PayloadCodec;

template <>
struct PayloadCodec<float> {
  static bool accepts(PayloadKind k) {
    return k == PayloadKind::Distance || k == PayloadKind::Probability;
  }
  static std::uint32_t width(const SparseVolume<float>&) { return 0; }
  static void write(std::ostream& out, const float& p) { write_pod(out, p); }
  static float read(std::istream& in, std::uint32_t) { return read_pod<float>(in, "f32 payload"); }
};

template <>
struct PayloadCodec<std::vector<float>> {
  static bool accepts(PayloadKind k) {
    return k == PayloadKind::FeatureVector || k == PayloadKind::LogitVector;
  }
  static std::uint32_t width(const SparseVolume<std::vector<float>>& v) {
    std::uint32_t w = 0;
    bool first = true;
    for (const auto& kv : v.unordered()) {
      const auto n = static_cast<std::uint32_t>(kv.second.size());
      if (first) {
        w = n;
        first = false;
      } else if (n != w) {
        throw InvalidArgument("vector payloads must share one width");
      }
    }
    if (w > 0xffff) throw InvalidArgument("vector payload width exceeds 65535");
    return w;
  }
  static void write(std::ostream& out, const std::vector<float>& p) {
    out.write(reinterpret_cast<const char*>(p.data()),
              static_cast<std::streamsize>(p.size() * sizeof(float)));
  }
  static std::vector<float> read(std::istream& in, std::uint32_t width) {
    std::vector<float> p(width);
    in.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(width * sizeof(float)));
    if (!in) throw IoError("truncated vector payload");
    return p;
  }
};

template <>
struct PayloadCodec<PanopticVoxel> {
  static bool accepts(PayloadKind k) { return k == PayloadKind::Panoptic; }
  static std::uint32_t width(const SparseVolume<PanopticVoxel>&) { return 0; }
  static void write(std::ostream& out, const PanopticVoxel& p) {
    write_pod(out, p.sdf);
    write_pod(out, p.semantic);
    write_pod(out, p.instance);
  }
  static PanopticVoxel read(std::istream& in, std::uint32_t) {
    PanopticVoxel p;
    p.sdf = read_pod<float>(in, "panoptic sdf");
    p.semantic = read_pod<std::uint32_t>(in, "panoptic semantic");
    p.instance = read_pod<std::uint32_t>(in, "panoptic instance");
    return p;
  }
};

template <>
struct PayloadCodec<PanopticLabel> {
  static bool accepts(PayloadKind k) { return k == PayloadKind::Label; }
  static std::uint32_t width(const SparseVolume<PanopticLabel>&) { return 0; }
  static void write(std::ostream& out, const PanopticLabel& p) {
    write_pod(out, p.semantic);
    write_pod(out, p.instance);
  }
  static PanopticLabel read(std::istream& in, std::uint32_t) {
    PanopticLabel p;
    p.semantic = read_pod<std::uint32_t>(in, "label semantic");
    p.instance = read_pod<std::uint32_t>(in, "label instance");
    return p;
  }
};

template <>
struct PayloadCodec<std::uint8_t> {
  static bool accepts(PayloadKind k) { return k == PayloadKind::Occupancy; }
  static std::uint32_t width(const SparseVolume<std::uint8_t>&) { return 0; }
  static void write(std::ostream& out, const std::uint8_t& p) { write_pod(out, p); }
  static std::uint8_t read(std::istream& in, std::uint32_t) {
    return read_pod<std::uint8_t>(in, "occupancy payload");
  }
};

template <>
struct PayloadCodec<std::int32_t> {
  static bool accepts(PayloadKind k) { return k == PayloadKind::Channel; }
  static std::uint32_t width(const SparseVolume<std::int32_t>&) { return 0; }
  static void write(std::ostream& out, const std::int32_t& p) { write_pod(out, p); }
  static std::int32_t read(std::istream& in, std::uint32_t) {
    return read_pod<std::int32_t>(in, "channel payload");
  }
};

template <>
struct PayloadCodec<std::uint32_t> {
  static bool accepts(PayloadKind k) { return k == PayloadKind::InstanceId; }
  static std::uint32_t width(const SparseVolume<std::uint32_t>&) { return 0; }
  static void write(std::ostream& out, const std::uint32_t& p) { write_pod(out, p); }
  static std::uint32_t read(std::istream& in, std::uint32_t) {
    return read_pod<std::uint32_t>(in, "instance payload");
  }
};

VolumeHeader read_header(std::istream& in, const std::string& name) {
  detail::expect_magic(in, "SPVL", name);
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kVolumeFormatVersion) {
    throw IoError(name + ": unsupported volume version " + std::to_string(version));
  }
  VolumeHeader h;
  h.spec.voxel_size = read_pod<float>(in, "voxel size");
  for (auto& o : h.spec.origin) o = read_pod<float>(in, "origin");
  for (auto& d : h.spec.dims) {
    const auto u = read_pod<std::uint32_t>(in, "dims");
    if (u == 0 || u > (1u << 24)) throw IoError(name + ": implausible grid dims");
    d = static_cast<std::int32_t>(u);
  }
  const auto tag = read_pod<std::uint32_t>(in, "payload tag");
  h.kind = static_cast<PayloadKind>(tag & 0xffffu);
  h.width = tag >> 16;
  h.cell_count = read_pod<std::uint64_t>(in, "cell count");
  try {
    h.spec.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(name + ": " + e.what());
  }
  return h;
}

}  // namespace

template <> PayloadKind default_payload_kind<float>() { return PayloadKind::Distance; }
template <> PayloadKind default_payload_kind<std::vector<float>>() { return PayloadKind::FeatureVector; }
template <> PayloadKind default_payload_kind<PanopticVoxel>() { return PayloadKind::Panoptic; }
template <> PayloadKind default_payload_kind<PanopticLabel>() { return PayloadKind::Label; }
template <> PayloadKind default_payload_kind<std::uint8_t>() { return PayloadKind::Occupancy; }
template <> PayloadKind default_payload_kind<std::int32_t>() { return PayloadKind::Channel; }
template <> PayloadKind default_payload_kind<std::uint32_t>() { return PayloadKind::InstanceId; }

template <typename P>
void write_volume(std::ostream& out, const SparseVolume<P>& v, PayloadKind kind) {
  using Codec = PayloadCodec<P>;
  if (!Codec::accepts(kind)) {
    throw InvalidArgument(std::string("payload kind ") + to_string(kind) +
                          " does not match the volume payload type");
  }
  const auto width = Codec::width(v);
  const auto& spec = v.spec();
  detail::write_magic(out, "SPVL");
  write_pod(out, kVolumeFormatVersion);
  write_pod(out, spec.voxel_size);
  for (float o : spec.origin) write_pod(out, o);
  for (auto d : spec.dims) write_pod(out, static_cast<std::uint32_t>(d));
  write_pod(out, static_cast<std::uint32_t>(kind) | (width << 16));
  write_pod(out, static_cast<std::uint64_t>(v.size()));
  for (const VoxelCoord& c : v.coords()) {
    write_pod(out, c.i);
    write_pod(out, c.j);
    write_pod(out, c.k);
    Codec::write(out, *v.find(c));
  }
}

template <typename P>
SparseVolume<P> read_volume(std::istream& in, const std::string& name) {
  using Codec = PayloadCodec<P>;
  const VolumeHeader h = read_header(in, name);
  if (!Codec::accepts(h.kind)) {
    throw IoError(name + ": payload kind " + to_string(h.kind) + " is not the expected type");
  }
  SparseVolume<P> v(h.spec);
  v.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(h.cell_count, 1u << 26)));
  for (std::uint64_t n = 0; n < h.cell_count; ++n) {
    VoxelCoord c;
    c.i = read_pod<std::int32_t>(in, "coord");
    c.j = read_pod<std::int32_t>(in, "coord");
    c.k = read_pod<std::int32_t>(in, "coord");
    if (!h.spec.contains(c)) throw IoError(name + ": cell outside grid");
    if (!v.try_emplace(c, Codec::read(in, h.width)).second) {
      throw IoError(name + ": duplicate cell");
    }
  }
  return v;
}

template <typename P>
void write_volume(const std::string& path, const SparseVolume<P>& v, PayloadKind kind) {
  auto out = detail::open_output(path);
  write_volume(out, v, kind);
  detail::finish_output(out, path);
}

template <typename P>
SparseVolume<P> read_volume(const std::string& path) {
  auto in = detail::open_input(path);
  return read_volume<P>(in, path);
}

VolumeHeader read_volume_header(const std::string& path) {
  auto in = detail::open_input(path);
  return read_header(in, path);
}

#define PANREC_INSTANTIATE_VOLUME_IO(P)                                                    \
  template void write_volume<P>(std::ostream&, const SparseVolume<P>&, PayloadKind);       \
  template SparseVolume<P> read_volume<P>(std::istream&, const std::string&);              \
  template void write_volume<P>(const std::string&, const SparseVolume<P>&, PayloadKind);  \
  template SparseVolume<P> read_volume<P>(const std::string&);

PANREC_INSTANTIATE_VOLUME_IO(float)
PANREC_INSTANTIATE_VOLUME_IO(std::vector<float>)
PANREC_INSTANTIATE_VOLUME_IO(PanopticVoxel)
PANREC_INSTANTIATE_VOLUME_IO(PanopticLabel)
PANREC_INSTANTIATE_VOLUME_IO(std::uint8_t)
PANREC_INSTANTIATE_VOLUME_IO(std::int32_t)
PANREC_INSTANTIATE_VOLUME_IO(std::uint32_t)

#undef PANREC_INSTANTIATE_VOLUME_IO

}  // namespace panrec
