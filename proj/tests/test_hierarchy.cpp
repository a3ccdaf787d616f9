#include <random>

#include "doctest.h"
#include "panrec/hierarchy.hpp"
#include "test_util.hpp"

using namespace panrec;

namespace {

GridSpec cube(int n, float s = 0.1f) {
  GridSpec g;
  g.voxel_size = s;
  g.dims = {n, n, n};
  return g;
}

LiftedVolumes empty_seed(const GridSpec& g) {
  return {DistanceVolume(g), VectorVolume(g), InstanceChannelVolume{1, VectorVolume(g)}};
}

// Random labeled volume: a few blobs of things and a stuff slab.
PanopticVolume random_volume(std::mt19937_64& rng, const GridSpec& g) {
  const auto cats = CategoryTable::synthetic();
  PanopticVolume v(g);
  std::uniform_int_distribution<int> coord(0, g.dims[0] - 1);
  std::uniform_real_distribution<float> sdf(-2.9f, 2.9f);
  for (int i = 0; i < g.dims[0]; ++i) {
    for (int k = 0; k < g.dims[2]; ++k) v.insert_or_assign({i, 0, k}, {sdf(rng), cats.id_of("floor"), kNoInstance});
  }
  const auto things = cats.things();
  for (InstanceId id = 1; id <= 4; ++id) {
    const CategoryId cat = things[rng() % things.size()];
    const int ci = coord(rng), cj = coord(rng), ck = coord(rng);
    for (int n = 0; n < 30; ++n) {
      const VoxelCoord c{std::clamp(ci + static_cast<int>(rng() % 5) - 2, 0, g.dims[0] - 1),
                         std::clamp(cj + static_cast<int>(rng() % 5) - 2, 1, g.dims[1] - 1),
                         std::clamp(ck + static_cast<int>(rng() % 5) - 2, 0, g.dims[2] - 1)};
      v.insert_or_assign(c, {sdf(rng), cat, id});
    }
  }
  return v;
}

}  // namespace

TEST_CASE("level specs halve resolution") {
  const GridSpec g = cube(16, 0.05f);
  const GridSpec l2 = level_spec(g, 2);
  CHECK(l2.dims == std::array<std::int32_t, 3>{4, 4, 4});
  CHECK(l2.voxel_size == doctest::Approx(0.2));
  CHECK(l2.origin == g.origin);
  CHECK(level_spec(g, 0) == g);
}

TEST_CASE("occupancy gating expands accepted sites to children") {
  const std::vector<VoxelCoord> sites{{0, 0, 0}, {1, 0, 0}};
  const std::vector<float> occ{0.5f, 0.49f};
  const auto next = occupancy_to_sites(sites, occ, 0.5f);
  CHECK(next.size() == 8);
  CHECK(is_voxel_set(next));
  for (const auto& c : next) CHECK(parent_of(c) == VoxelCoord{0, 0, 0});
}

TEST_CASE("dense coarsest sites respect the frustum") {
  const GridSpec g = frustum_grid(0.1, 16);
  CHECK(dense_sites(level_spec(g, 2), nullptr).size() == 64);
  const CameraIntrinsics K{20.0, 20.0, 9.5, 9.5, 20, 20, 0.1, 10.0};
  const Frustum f(K);
  const auto sites = dense_sites(level_spec(g, 2), &f);
  CHECK(!sites.empty());
  CHECK(sites.size() < 64);
  CHECK(is_voxel_set(sites));
}

TEST_CASE("constant occupancy 1 fills the grid, occupancy 0 empties it") {
  const GridSpec g = cube(8);
  const LiftedVolumes seed = empty_seed(g);
  HierarchyConfig cfg;
  ConstantPredictor full(1.0f, 0.25f, 2, 12);
  const HierarchyResult r = run_coarse_to_fine(seed, full, cfg);
  CHECK(r.volume.size() == 512);
  CHECK(r.volume.find({3, 4, 5})->sdf == 0.25f);
  CHECK(r.volume.find({3, 4, 5})->semantic == 2);
  CHECK(r.levels.size() == 3);
  CHECK(r.levels[2].sites.size() == 8);

  ConstantPredictor none(0.0f, 0.0f, 0, 12);
  const HierarchyResult e = run_coarse_to_fine(seed, none, cfg);
  CHECK(e.volume.empty());
  CHECK(e.levels[1].sites.empty());
  CHECK(e.levels[0].sites.empty());
}

TEST_CASE("configuration errors") {
  const LiftedVolumes seed = empty_seed(cube(6));
  ConstantPredictor p(1.0f, 0.0f, 0, 12);
  HierarchyConfig cfg;
  CHECK_THROWS_AS(run_coarse_to_fine(seed, p, cfg), InvalidArgument);
  const LiftedVolumes ok = empty_seed(cube(8));
  cfg.occupancy_threshold = 1.0f;
  CHECK_THROWS_AS(run_coarse_to_fine(ok, p, cfg), InvalidArgument);
  cfg.occupancy_threshold = 0.5f;
  cfg.levels = 0;
  CHECK_THROWS_AS(run_coarse_to_fine(ok, p, cfg), InvalidArgument);
}

TEST_CASE("replaying a ground-truth hierarchy is lossless and monotone") {
  std::mt19937_64 rng(11);
  const auto cats = CategoryTable::synthetic();
  for (int trial = 0; trial < 5; ++trial) {
    const GridSpec g = cube(16);
    const PanopticVolume gt = random_volume(rng, g);
    const StoredHierarchy stored = build_gt_hierarchy(gt, 3, cats);
    CHECK(stored.levels.size() == 3);

    ReplayPredictor replay(stored);
    const HierarchyResult r = run_coarse_to_fine(empty_seed(g), replay, HierarchyConfig{});
    CHECK(r.volume == gt);

    for (int h = 0; h + 1 < 3; ++h) {
      const auto& finer = r.levels[static_cast<std::size_t>(h)];
      const auto& coarser = r.levels[static_cast<std::size_t>(h) + 1];
      SparseVolume<float> occ(coarser.spec);
      for (std::size_t s = 0; s < coarser.sites.size(); ++s) {
        occ.insert_or_assign(coarser.sites[s], coarser.output.occupancy[s]);
      }
      for (const VoxelCoord& c : finer.sites) {
        const float* p = occ.find(parent_of(c));
        REQUIRE(p != nullptr);
        CHECK(*p >= 0.5f);
      }
    }
  }
}

TEST_CASE("stored hierarchies survive a save/load cycle") {
  std::mt19937_64 rng(5);
  const GridSpec g = cube(16);
  const PanopticVolume gt = random_volume(rng, g);
  const StoredHierarchy stored = build_gt_hierarchy(gt, 3, CategoryTable::synthetic());
  TempDir dir("hier");
  stored.save(dir.path().string());
  const StoredHierarchy back = StoredHierarchy::load(dir.path().string());
  CHECK(back.levels.size() == 3);
  CHECK(back.semantic_width == stored.semantic_width);
  CHECK(back.instance_width == stored.instance_width);

  ReplayPredictor a(stored), b(back);
  const auto ra = run_coarse_to_fine(empty_seed(g), a, HierarchyConfig{});
  const auto rb = run_coarse_to_fine(empty_seed(g), b, HierarchyConfig{});
  CHECK(ra.volume == rb.volume);
  CHECK(ra.volume == gt);
}

TEST_CASE("runs are deterministic") {
  std::mt19937_64 rng(9);
  const GridSpec g = cube(16);
  const PanopticVolume gt = random_volume(rng, g);
  const StoredHierarchy stored = build_gt_hierarchy(gt, 2, CategoryTable::synthetic());
  ReplayPredictor p(stored);
  HierarchyConfig cfg;
  cfg.levels = 2;
  const auto a = run_coarse_to_fine(empty_seed(g), p, cfg);
  const auto b = run_coarse_to_fine(empty_seed(g), p, cfg);
  CHECK(a.volume == b.volume);
  CHECK(a.semantic_logits == b.semantic_logits);
}
