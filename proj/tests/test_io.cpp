#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "panrec/categories.hpp"
#include "panrec/instance_propagation.hpp"
#include "panrec/mesh_io.hpp"
#include "panrec/raster_io.hpp"
#include "panrec/volume_io.hpp"
#include "test_util.hpp"

using namespace panrec;

namespace {

GridSpec odd_grid() {
  GridSpec g;
  g.voxel_size = 0.0317f;
  g.origin = {-1.234567f, 0.5f, 1e-3f};
  g.dims = {9, 7, 5};
  return g;
}

template <typename P, typename Gen>
SparseVolume<P> random_volume(Gen make, std::uint64_t seed) {
  SparseVolume<P> v(odd_grid());
  std::mt19937_64 rng(seed);
  for (int n = 0; n < 150; ++n) {
    const VoxelCoord c{static_cast<int>(rng() % 9), static_cast<int>(rng() % 7), static_cast<int>(rng() % 5)};
    v.insert_or_assign(c, make(rng));
  }
  return v;
}

template <typename P>
SparseVolume<P> round_trip(const SparseVolume<P>& v, PayloadKind kind) {
  std::stringstream buf;
  write_volume(buf, v, kind);
  return read_volume<P>(buf);
}

TriangleMesh labeled_quad() {
  TriangleMesh m;
  m.vertices = {{0.1, 0.2, 1.0}, {1.0 / 3.0, 0.2, 1.0}, {0.1, 0.7, 1.5}, {0.4, 0.7, 1.25}};
  m.triangles = {{0, 1, 2}, {1, 3, 2}};
  m.labels = {{3, 1}, {10, 0}};
  return m;
}

}  // namespace

TEST_CASE("volume files round-trip every payload bit-exactly") {
  const auto d = random_volume<float>([](auto& r) { return std::uniform_real_distribution<float>(-3, 3)(r); }, 1);
  CHECK(round_trip(d, PayloadKind::Distance) == d);
  CHECK(round_trip(d, PayloadKind::Probability) == d);

  const auto f = random_volume<std::vector<float>>(
      [](auto& r) {
        std::vector<float> x(5);
        for (auto& e : x) e = std::normal_distribution<float>()(r);
        return x;
      },
      2);
  CHECK(round_trip(f, PayloadKind::FeatureVector) == f);
  CHECK(round_trip(f, PayloadKind::LogitVector) == f);

  const auto p = random_volume<PanopticVoxel>(
      [](auto& r) { return PanopticVoxel{static_cast<float>(r() % 7) - 3.0f, static_cast<CategoryId>(r() % 12), static_cast<InstanceId>(r() % 5)}; }, 3);
  CHECK(round_trip(p, PayloadKind::Panoptic) == p);

  const auto l = random_volume<PanopticLabel>([](auto& r) { return PanopticLabel{static_cast<CategoryId>(r() % 12), static_cast<InstanceId>(r() % 5)}; }, 4);
  CHECK(round_trip(l, PayloadKind::Label) == l);

  const auto o = random_volume<std::uint8_t>([](auto& r) { return static_cast<std::uint8_t>(r() % 2); }, 5);
  CHECK(round_trip(o, PayloadKind::Occupancy) == o);
  const auto ch = random_volume<std::int32_t>([](auto& r) { return static_cast<std::int32_t>(r() % 21); }, 6);
  CHECK(round_trip(ch, PayloadKind::Channel) == ch);
  const auto id = random_volume<std::uint32_t>([](auto& r) { return static_cast<std::uint32_t>(r() % 1000); }, 7);
  CHECK(round_trip(id, PayloadKind::InstanceId) == id);
}

TEST_CASE("empty volumes keep their grid") {
  SparseVolume<float> v(odd_grid());
  const auto back = round_trip(v, PayloadKind::Distance);
  CHECK(back.empty());
  CHECK(back.spec() == odd_grid());
}

TEST_CASE("volume files are written in canonical order") {
  SparseVolume<float> a(odd_grid()), b(odd_grid());
  a.insert_or_assign({3, 0, 0}, 1.0f);
  a.insert_or_assign({0, 0, 4}, 2.0f);
  b.insert_or_assign({0, 0, 4}, 2.0f);
  b.insert_or_assign({3, 0, 0}, 1.0f);
  std::stringstream sa, sb;
  write_volume(sa, a, PayloadKind::Distance);
  write_volume(sb, b, PayloadKind::Distance);
  CHECK(sa.str() == sb.str());
}

TEST_CASE("malformed volume files raise I/O errors") {
  const auto d = random_volume<float>([](auto&) { return 1.0f; }, 8);
  std::stringstream buf;
  write_volume(buf, d, PayloadKind::Distance);
  const std::string bytes = buf.str();

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(read_volume<float>(truncated), IoError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::stringstream bm(bad_magic);
  CHECK_THROWS_AS(read_volume<float>(bm), IoError);
  std::stringstream wrong_kind(bytes);
  CHECK_THROWS_AS(read_volume<PanopticVoxel>(wrong_kind), IoError);
  CHECK_THROWS_AS(read_volume<float>(std::string("/nonexistent/x.spvl")), IoError);
}

TEST_CASE("volume header exposes grid, kind and count") {
  TempDir dir("io");
  const auto f = random_volume<std::vector<float>>([](auto&) { return std::vector<float>(3, 1.0f); }, 9);
  write_volume(dir.file("f.spvl"), f, PayloadKind::LogitVector);
  const VolumeHeader h = read_volume_header(dir.file("f.spvl"));
  CHECK(h.spec == odd_grid());
  CHECK(h.kind == PayloadKind::LogitVector);
  CHECK(h.width == 3);
  CHECK(h.cell_count == f.size());
}

TEST_CASE("rasters, depth maps and intrinsics round-trip") {
  TempDir dir("raster");
  Raster r(5, 4, 3);
  for (std::size_t i = 0; i < r.data().size(); ++i) r.data()[i] = static_cast<float>(i) * 0.25f;
  write_raster(dir.file("r.dpth"), r);
  const Raster rb = read_raster(dir.file("r.dpth"));
  CHECK(rb.width() == 5);
  CHECK(rb.channels() == 3);
  CHECK(std::equal(r.data().begin(), r.data().end(), rb.data().begin()));

  DepthMap d(4, 3);
  d.at(1, 1) = 1.234f;
  d.at(3, 2) = 2.0f;
  write_depth(dir.file("d.dpth"), d);
  const DepthMap db = read_depth(dir.file("d.dpth"));
  CHECK(db.at(1, 1) == 1.234f);
  CHECK(db.valid_count() == 2);

  write_depth_raw_u16(dir.file("d.raw"), d);
  const DepthMap dr = read_depth_raw_u16(dir.file("d.raw"), 4, 3);
  CHECK(dr.at(1, 1) == doctest::Approx(1.234).epsilon(1e-6));
  CHECK_FALSE(dr.valid(0, 0));

  const CameraIntrinsics K{277.0, 277.0, 159.5, 119.5, 320, 240, 0.1, 10.0};
  write_intrinsics(dir.file("K.json"), K);
  CHECK(read_intrinsics(dir.file("K.json")) == K);
  CHECK_THROWS_AS(read_raster(dir.file("missing.dpth")), IoError);
}

TEST_CASE("PLY and OBJ keep geometry and labels") {
  TempDir dir("mesh");
  const TriangleMesh m = labeled_quad();
  for (auto enc : {PlyEncoding::Ascii, PlyEncoding::BinaryLittleEndian}) {
    write_ply(dir.file("m.ply"), m, enc);
    const TriangleMesh back = read_ply(dir.file("m.ply"));
    CHECK(back.vertices == m.vertices);
    CHECK(back.triangles == m.triangles);
    CHECK(back.labels == m.labels);
  }
  write_obj(dir.file("m.obj"), m);
  const TriangleMesh obj = read_obj(dir.file("m.obj"));
  CHECK(obj.triangles == m.triangles);
  CHECK(obj.labels == m.labels);
  REQUIRE(obj.vertices.size() == m.vertices.size());
  for (std::size_t i = 0; i < m.vertices.size(); ++i) CHECK((obj.vertices[i] - m.vertices[i]).norm() < 1e-12);
}

TEST_CASE("PLY quads are fan-triangulated") {
  TempDir dir("ply");
  std::ofstream(dir.file("q.ply")) << "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\n"
                                       "property float y\nproperty float z\nelement face 1\n"
                                       "property list uchar int vertex_indices\nend_header\n"
                                       "0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  const TriangleMesh q = read_ply(dir.file("q.ply"));
  CHECK(q.triangles.size() == 2);
  CHECK_FALSE(q.has_labels());
}

TEST_CASE("mask sets round-trip through manifest and RLE") {
  TempDir dir("masks");
  MaskSet2D s;
  s.width = 7;
  s.height = 5;
  std::mt19937_64 rng(3);
  for (int m = 0; m < 3; ++m) {
    Mask2D mask;
    mask.pixels.resize(35);
    for (auto& p : mask.pixels) p = rng() % 3 == 0;
    mask.pixels[m] = 1;
    mask.category = static_cast<CategoryId>(m + 1);
    mask.score = 0.5f + 0.1f * m;
    mask.instance = static_cast<InstanceId>(m + 4);
    s.masks.push_back(mask);
  }
  write_mask_set(dir.file("masks.json"), s);
  const MaskSet2D back = read_mask_set(dir.file("masks.json"));
  REQUIRE(back.masks.size() == 3);
  for (int m = 0; m < 3; ++m) {
    CHECK(back.masks[m].pixels == s.masks[m].pixels);
    CHECK(back.masks[m].category == s.masks[m].category);
    CHECK(back.masks[m].score == s.masks[m].score);
    CHECK(back.masks[m].instance == s.masks[m].instance);
  }
}

TEST_CASE("category tables") {
  const auto syn = CategoryTable::synthetic();
  CHECK(syn.size() == 12);
  CHECK(syn.things().size() == 9);
  CHECK(syn.stuff().size() == 2);
  CHECK(syn.is_freespace(syn.freespace()));
  const auto real = CategoryTable::real();
  CHECK(real.size() == 13);
  CHECK(real.stuff().size() == 3);
  CHECK(real.is_stuff(real.id_of("ceiling")));
  CHECK(categories_from_json(categories_to_json(real)) == real);
}
