#include <cmath>
#include <random>

#include "doctest.h"
#include "panrec/categories.hpp"
#include "panrec/losses.hpp"

using namespace panrec;

namespace {

GridSpec cube(int n) {
  GridSpec g;
  g.voxel_size = 0.1f;
  g.dims = {n, n, n};
  return g;
}

// Sites with k < 4 are "inside".
const SiteMask kNear = [](const VoxelCoord& c) { return c.k < 4; };

double ce(const std::vector<float>& logits, std::size_t t) {
  double z = 0.0;
  for (float l : logits) z += std::exp(static_cast<double>(l));
  return std::log(z) - logits[t];
}

}  // namespace

TEST_CASE("occupancy BCE at p = 0.5 is ln 2, perfect predictions are near zero") {
  SparseVolume<float> pred(cube(4)), gt(cube(4));
  for (int i = 0; i < 4; ++i) {
    pred.insert_or_assign({i, 0, 0}, 0.5f);
    gt.insert_or_assign({i, 0, 0}, i % 2 ? 1.0f : 0.0f);
  }
  CHECK(std::abs(loss_geometry(pred, gt, nullptr, nullptr, 1) - std::log(2.0)) <= 1e-9);

  DistanceVolume d(cube(4));
  d.insert_or_assign({0, 0, 0}, 0.5f);
  CHECK(loss_geometry(gt, gt, &d, &d, 0) < 1e-6);

  // Level 1 ignores distances entirely.
  DistanceVolume off(cube(4));
  off.insert_or_assign({0, 0, 0}, 3.0f);
  CHECK(loss_geometry(gt, gt, &off, &d, 1) == loss_geometry(gt, gt, nullptr, nullptr, 1));
  CHECK(loss_geometry(gt, gt, &off, &d, 0) == doctest::Approx(2.5).epsilon(1e-6));

  SparseVolume<float> other(cube(4));
  CHECK_THROWS_AS(loss_geometry(pred, other, nullptr, nullptr, 1), ContractViolation);
  CHECK_THROWS_AS(loss_geometry(pred, gt, nullptr, nullptr, 0), InvalidArgument);
}

TEST_CASE("uniform semantic logits give ln C") {
  const auto cats = CategoryTable::synthetic();
  const std::size_t C = cats.size();
  VectorVolume logits(cube(4));
  SparseVolume<CategoryId> targets(cube(4));
  for (int i = 0; i < 4; ++i) {
    logits.insert_or_assign({i, 1, 0}, std::vector<float>(C, 0.7f));
    targets.insert_or_assign({i, 1, 0}, static_cast<CategoryId>(1 + i));
  }
  ClassWeightTable unit{std::vector<double>(C, 1.0), std::nullopt};
  CHECK(std::abs(loss_semantic(logits, targets, unit) - std::log(static_cast<double>(C))) <= 1e-9);

  targets.insert_or_assign({0, 1, 0}, static_cast<CategoryId>(C));
  CHECK_THROWS_AS(loss_semantic(logits, targets, unit), InvalidArgument);
}

TEST_CASE("freespace sites carry weight 0.001") {
  const auto cats = CategoryTable::synthetic();
  const std::size_t C = cats.size();
  const std::vector<std::uint64_t> counts(C, 10);
  const ClassWeightTable w = class_weights_inverse_log(counts, cats.freespace());
  REQUIRE(w.at(cats.freespace()) == 0.001);

  VectorVolume logits(cube(4));
  SparseVolume<CategoryId> targets(cube(4));
  std::vector<float> a(C, 0.0f), b(C, 0.0f);
  a[3] = 2.0f;
  b[5] = 1.0f;
  logits.insert_or_assign({0, 0, 0}, a);
  targets.insert_or_assign({0, 0, 0}, 3);
  logits.insert_or_assign({1, 0, 0}, b);
  targets.insert_or_assign({1, 0, 0}, cats.freespace());

  const double wt = w.at(3);
  const double expected = (wt * ce(a, 3) + 0.001 * ce(b, cats.freespace())) / (wt + 0.001);
  CHECK(loss_semantic(logits, targets, w) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("instance cross entropy") {
  InstanceChannelVolume logits{2, VectorVolume(cube(4))};
  SparseVolume<std::int32_t> targets(cube(4));
  logits.logits.insert_or_assign({0, 0, 0}, {0.0f, 0.0f});
  targets.insert_or_assign({0, 0, 0}, 1);
  CHECK(std::abs(loss_instance(logits, targets) - std::log(2.0)) <= 1e-9);

  logits.logits.insert_or_assign({0, 0, 0}, {-30.0f, 30.0f});
  CHECK(loss_instance(logits, targets) < 1e-12);

  // Permuting channels on both sides changes nothing.
  InstanceChannelVolume three{3, VectorVolume(cube(4))};
  three.logits.insert_or_assign({0, 0, 0}, {0.1f, 0.7f, -0.4f});
  targets.insert_or_assign({0, 0, 0}, 2);
  const double before = loss_instance(three, targets);
  three.logits.insert_or_assign({0, 0, 0}, {0.1f, -0.4f, 0.7f});
  targets.insert_or_assign({0, 0, 0}, 1);
  CHECK(loss_instance(three, targets) == doctest::Approx(before));

  targets.insert_or_assign({0, 0, 0}, 3);
  CHECK_THROWS_AS(loss_instance(three, targets), InvalidArgument);
}

TEST_CASE("sites outside the mask never change a loss") {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const std::size_t C = CategoryTable::synthetic().size();
  const ClassWeightTable w{std::vector<double>(C, 1.5), std::nullopt};

  SparseVolume<float> op(cube(8)), og(cube(8));
  DistanceVolume dp(cube(8)), dg(cube(8));
  VectorVolume sl(cube(8));
  SparseVolume<CategoryId> st(cube(8));
  InstanceChannelVolume il{3, VectorVolume(cube(8))};
  SparseVolume<std::int32_t> it(cube(8));
  auto add = [&](const VoxelCoord& c) {
    op.insert_or_assign(c, u(rng));
    og.insert_or_assign(c, u(rng) < 0.5f ? 0.0f : 1.0f);
    dp.insert_or_assign(c, 3.0f * u(rng));
    dg.insert_or_assign(c, 3.0f * u(rng));
    std::vector<float> s(C);
    for (auto& x : s) x = u(rng);
    sl.insert_or_assign(c, s);
    st.insert_or_assign(c, static_cast<CategoryId>(rng() % C));
    il.logits.insert_or_assign(c, {u(rng), u(rng), u(rng)});
    it.insert_or_assign(c, static_cast<std::int32_t>(rng() % 3));
  };
  for (int n = 0; n < 40; ++n) add({static_cast<int>(rng() % 8), static_cast<int>(rng() % 8), static_cast<int>(rng() % 4)});

  const double g0 = loss_geometry(op, og, &dp, &dg, 0, kNear);
  const double s0 = loss_semantic(sl, st, w, kNear);
  const double i0 = loss_instance(il, it, kNear);
  for (int n = 0; n < 40; ++n) add({static_cast<int>(rng() % 8), static_cast<int>(rng() % 8), 4 + static_cast<int>(rng() % 4)});
  CHECK(loss_geometry(op, og, &dp, &dg, 0, kNear) == g0);
  CHECK(loss_semantic(sl, st, w, kNear) == s0);
  CHECK(loss_instance(il, it, kNear) == i0);
}

TEST_CASE("frustum site mask") {
  const GridSpec g = frustum_grid(0.1, 8);
  const CameraIntrinsics K{8.0, 8.0, 3.5, 3.5, 8, 8, 0.05, 10.0};
  const SiteMask m = frustum_site_mask(g, K);
  CHECK(m({4, 4, 6}));
  CHECK_FALSE(m({0, 0, 0}));
}

TEST_CASE("total loss is the weighted sum") {
  LossParts parts;
  parts.depth = 1.0;
  parts.instance_2d = 2.0;
  parts.levels = {LevelLoss{3.0, 4.0, 5.0}};
  CHECK(loss_total(parts, LossWeights{}, 1) == 15.0);
  CHECK(loss_total(parts, LossWeights{0, 0, 0, 0, 0}, 1) == 0.0);

  LossWeights doubled;
  doubled.geometry = 2.0;
  CHECK(loss_total(parts, doubled, 1) == 18.0);

  CHECK_THROWS_AS(loss_total(parts, LossWeights{}, 2), InvalidArgument);
  parts.levels[0].semantic.reset();
  CHECK_THROWS_AS(loss_total(parts, LossWeights{}, 1), InvalidArgument);
  LossWeights negative;
  negative.depth = -1.0;
  CHECK_THROWS_AS(negative.validate(), InvalidArgument);
}

TEST_CASE("pairwise sums and the depth stub") {
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0));
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);

  DepthMap a(2, 1, 1.0f), b(2, 1, static_cast<float>(std::exp(1.0)));
  b.at(1, 0) = 0.0f;  // invalid pixels are skipped
  CHECK(loss_depth_log_l1(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(loss_depth_log_l1(a, DepthMap(3, 1, 1.0f)), InvalidArgument);
}
