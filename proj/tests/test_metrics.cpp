#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "panrec/metrics.hpp"

using namespace panrec;

namespace {

const CategoryTable kCats = CategoryTable::synthetic();
constexpr CategoryId kChair = 1;
constexpr CategoryId kTable = 2;
const CategoryId kWall = kCats.id_of("wall");

GridSpec cube(int n) {
  GridSpec g;
  g.voxel_size = 0.1f;
  g.dims = {n, n, n};
  return g;
}

// Voxels [first, first + count) along a 16-wide raster in the k = 0 slice.
VoxelSet run(int first, int count) {
  std::vector<VoxelCoord> v;
  for (int n = first; n < first + count; ++n) v.push_back({n % 16, n / 16, 0});
  return make_voxel_set(std::move(v));
}

Segment seg(CategoryId cat, InstanceId id, VoxelSet voxels) { return {cat, id, std::move(voxels), {}}; }

LabelVolume random_labels(std::mt19937_64& rng, const GridSpec& g) {
  LabelVolume v(g);
  for (int s = 0; s < 400; ++s) {
    const VoxelCoord c{static_cast<int>(rng() % g.dims[0]), static_cast<int>(rng() % g.dims[1]),
                       static_cast<int>(rng() % g.dims[2])};
    if (rng() % 3 == 0) {
      v.insert_or_assign(c, {kWall, kNoInstance});
    } else {
      const auto id = static_cast<InstanceId>(1 + rng() % 5);
      v.insert_or_assign(c, {static_cast<CategoryId>(1 + id % 2), id});
    }
  }
  return v;
}

}  // namespace

TEST_CASE("hand-computed chair scenario") {
  // TP: |gt| = 30, |pred| = 25, overlap 20, so IoU = 20/35. One FP and one FN.
  const std::vector<Segment> gt{seg(kChair, 1, run(0, 30)), seg(kChair, 2, run(100, 10))};
  const std::vector<Segment> pred{seg(kChair, 7, run(10, 25)), seg(kChair, 8, run(200, 10))};
  const MatchResult m = greedy_match(pred, gt);
  const CategoryMatch& cm = m.categories.at(kChair);
  REQUIRE(cm.tp.size() == 1);
  CHECK(cm.tp[0].iou == doctest::Approx(20.0 / 35.0));
  CHECK(cm.fp == 1);
  CHECK(cm.fn == 1);

  const ClassReport r = prq_rsq_rrq(m, kCats);
  const CategoryScore& s = r.categories.at(kChair);
  CHECK(std::abs(s.rsq - 57.14) <= 0.01);
  CHECK(std::abs(s.rrq - 50.00) <= 0.01);
  CHECK(std::abs(s.prq - 28.57) <= 0.01);
}

TEST_CASE("the IoU threshold is inclusive") {
  const std::vector<Segment> gt{seg(kChair, 1, run(0, 100))};
  const auto below = greedy_match({seg(kChair, 1, run(0, 24))}, gt);
  CHECK(below.categories.at(kChair).tp.empty());
  CHECK(below.categories.at(kChair).fp == 1);
  CHECK(below.categories.at(kChair).fn == 1);
  CHECK(prq_rsq_rrq(below, kCats).categories.at(kChair).prq == 0.0);

  const auto at = greedy_match({seg(kChair, 1, run(0, 25))}, gt);
  CHECK(at.categories.at(kChair).tp.size() == 1);
  CHECK_THROWS_AS(greedy_match({}, gt, 0.0), InvalidArgument);
  CHECK_THROWS_AS(greedy_match({}, gt, 1.5), InvalidArgument);
}

TEST_CASE("categories never match across each other") {
  const auto m = greedy_match({seg(kTable, 1, run(0, 10))}, {seg(kChair, 1, run(0, 10))});
  CHECK(m.categories.at(kChair).fn == 1);
  CHECK(m.categories.at(kTable).fp == 1);
  const ClassReport r = prq_rsq_rrq(m, kCats);
  // Predicted-only categories stay in the mean with a zero score.
  CHECK(r.categories.count(kTable) == 1);
  CHECK(r.categories.at(kTable).prq == 0.0);
  CHECK(r.all.categories == 2);
}

TEST_CASE("greedy takes the highest IoU first and ties by index") {
  const std::vector<Segment> gt{seg(kChair, 1, run(0, 10))};
  const std::vector<Segment> pred{seg(kChair, 1, run(0, 8)), seg(kChair, 2, run(0, 9)),
                                  seg(kChair, 3, run(0, 9))};
  const auto m = greedy_match(pred, gt);
  REQUIRE(m.categories.at(kChair).tp.size() == 1);
  CHECK(m.categories.at(kChair).tp[0].pred == 1);
  CHECK(m.categories.at(kChair).fp == 2);
}

TEST_CASE("segments: freespace and id-less things are ignored, masks restrict") {
  LabelVolume v(cube(4));
  v.insert_or_assign({0, 0, 0}, {kChair, 3});
  v.insert_or_assign({1, 0, 0}, {kChair, 3});
  v.insert_or_assign({2, 0, 0}, {kChair, kNoInstance});
  v.insert_or_assign({3, 0, 0}, {kCats.freespace(), kNoInstance});
  v.insert_or_assign({0, 1, 0}, {kWall, kNoInstance});
  v.insert_or_assign({1, 1, 0}, {kWall, 9});  // stuff ignores ids
  auto segs = extract_segments(v, kCats);
  REQUIRE(segs.size() == 2);
  for (const auto& s : segs) {
    CHECK(s.voxels.size() == 2);
    CHECK(is_voxel_set(s.voxels));
  }

  const VoxelSet mask = make_voxel_set({{0, 0, 0}, {0, 1, 0}});
  segs = extract_segments(v, kCats, &mask);
  REQUIRE(segs.size() == 2);
  for (const auto& s : segs) CHECK(s.voxels.size() == 1);
}

TEST_CASE("frustum mask keeps voxels with centers in view") {
  const GridSpec g = frustum_grid(0.1, 8);
  const CameraIntrinsics K{8.0, 8.0, 3.5, 3.5, 8, 8, 0.05, 10.0};
  const VoxelSet mask = frustum_voxel_mask(g, K);
  CHECK(is_voxel_set(mask));
  CHECK(!mask.empty());
  CHECK(mask.size() < 512);
  const Frustum f(K);
  for (const auto& c : mask) CHECK(f.contains(g.center(c)));
}

TEST_CASE("resampling keeps the majority label") {
  LabelVolume v(cube(4));
  v.insert_or_assign({0, 0, 0}, {kChair, 1});
  v.insert_or_assign({1, 0, 0}, {kChair, 1});
  v.insert_or_assign({0, 1, 0}, {kWall, kNoInstance});
  GridSpec coarse = cube(2);
  coarse.voxel_size = 0.2f;
  const LabelVolume r = resample_labels(v, coarse);
  CHECK(r.size() == 1);
  CHECK(*r.find({0, 0, 0}) == PanopticLabel{kChair, 1});
}

TEST_CASE("self-evaluation, PRQ identity and relabel invariance on random volumes") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const LabelVolume gt = random_labels(rng, cube(10));
    const auto gs = extract_segments(gt, kCats);
    const ClassReport self = prq_rsq_rrq(greedy_match(gs, gs), kCats);
    for (const auto& [c, s] : self.categories) {
      CHECK(s.prq == 100.0);
      CHECK(s.rsq == 100.0);
      CHECK(s.rrq == 100.0);
    }

    const LabelVolume pred = random_labels(rng, cube(10));
    const auto ps = extract_segments(pred, kCats);
    const ClassReport r = prq_rsq_rrq(greedy_match(ps, gs), kCats);
    for (const auto& [c, s] : r.categories) CHECK(std::abs(s.prq - s.rsq * s.rrq / 100.0) < 1e-9);

    // Instance ids are arbitrary names.
    LabelVolume renamed(pred.spec());
    for (const auto& [c, l] : pred.unordered()) {
      renamed.insert_or_assign(c, {l.semantic, l.instance == kNoInstance ? kNoInstance : l.instance + 40});
    }
    const ClassReport rr = prq_rsq_rrq(greedy_match(extract_segments(renamed, kCats), gs), kCats);
    CHECK(rr.all.prq == doctest::Approx(r.all.prq));
  }
}

TEST_CASE("an extra false positive never raises PRQ") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto gs = extract_segments(random_labels(rng, cube(10)), kCats);
    auto ps = extract_segments(random_labels(rng, cube(10)), kCats);
    const double before = prq_rsq_rrq(greedy_match(ps, gs), kCats).categories.at(kWall).prq;
    ps.push_back(seg(kWall, kNoInstance, run(300, 5)));
    const double after = prq_rsq_rrq(greedy_match(ps, gs), kCats).categories.at(kWall).prq;
    CHECK(after <= before);
  }
}

TEST_CASE("greedy agrees with the exhaustive oracle on well-separated IoUs") {
  // Pred segments are perturbed copies of GT, so every match is the only
  // one above threshold.
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Segment> gt, pred;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int s = 0; s < n; ++s) {
      gt.push_back(seg(kChair, static_cast<InstanceId>(s + 1), run(40 * s, 30)));
      const int shift = static_cast<int>(rng() % 10);
      pred.push_back(seg(kChair, static_cast<InstanceId>(s + 1), run(40 * s + shift, 30 - shift)));
    }
    const auto m = greedy_match(pred, gt);
    const auto best = oracle::max_total_iou_matching(pred, gt, kMatchIoU);
    double total = 0.0;
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (const auto& p : m.categories.at(kChair).tp) {
      total += p.iou;
      pairs.emplace(p.pred, p.gt);
    }
    CHECK(pairs == best.pairs);
    CHECK(total == doctest::Approx(best.total_iou));
  }
}

TEST_CASE("pooled and per-scene reports") {
  const GridSpec g = cube(16);
  LabelVolume gt(g), good(g), bad(g);
  for (int i = 0; i < 10; ++i) {
    gt.insert_or_assign({i, 0, 0}, {kChair, 1});
    good.insert_or_assign({i, 0, 0}, {kChair, 5});
  }
  for (int i = 0; i < 2; ++i) bad.insert_or_assign({i, 0, 0}, {kChair, 5});
  // Scene two: a two-voxel chair, first predicted exactly, then missed.
  LabelVolume gt2(g);
  for (int i = 0; i < 2; ++i) gt2.insert_or_assign({i, 0, 0}, {kChair, 1});

  std::vector<ScenePair> scenes{{"a", good, gt, {}}, {"b", bad, gt2, {}}};
  const ClassReport pooled = evaluate_scenes(scenes, kCats, EvalConfig{});
  CHECK(pooled.categories.at(kChair).counts.tp == 2);
  CHECK(pooled.categories.at(kChair).prq == 100.0);

  scenes[1].pred = LabelVolume(g);
  const ClassReport pooled2 = evaluate_scenes(scenes, kCats, EvalConfig{});
  CHECK(pooled2.categories.at(kChair).rrq == doctest::Approx(100.0 / 1.5));
  EvalConfig macro;
  macro.per_scene_macro = true;
  const ClassReport m = evaluate_scenes(scenes, kCats, macro);
  CHECK(m.categories.at(kChair).prq == doctest::Approx(50.0));
}

TEST_CASE("report serialization") {
  const auto m = greedy_match({seg(kChair, 1, run(0, 10)), seg(kWall, kNoInstance, run(50, 10))},
                              {seg(kChair, 1, run(0, 10)), seg(kWall, kNoInstance, run(50, 20))});
  const ClassReport r = prq_rsq_rrq(m, kCats);
  CHECK(r.things.categories == 1);
  CHECK(r.stuff.categories == 1);
  CHECK(r.all.prq == doctest::Approx((100.0 + 50.0) / 2.0));

  const auto j = report_to_json(r, kCats);
  CHECK(j.at("categories").size() == 2);
  CHECK(j.at("all").at("prq").get<double>() == doctest::Approx(75.0));

  const std::string csv = report_to_csv(r, kCats);
  CHECK(csv.rfind("metric,mean,things,stuff,", 0) == 0);
  CHECK(csv.find("\nPRQ,75.00,100.00,50.00,") != std::string::npos);
  CHECK(csv.find("\nRRQ,") != std::string::npos);
}
