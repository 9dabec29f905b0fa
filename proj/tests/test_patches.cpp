#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "lsaf/patches.hpp"
#include "oracles.hpp"

using namespace lsaf;

namespace {

RasterPair ramp_scene(std::size_t bands, std::size_t h, std::size_t w) {
  RasterPair pair{Tensor({bands, h, w}), Tensor({1, h, w}), LabelMap{h, w, std::vector<std::uint16_t>(h * w, 1)}};
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t p = 0; p < h * w; ++p) pair.hsi[b * h * w + p] = static_cast<real>(1000 * b + p);
  for (std::size_t p = 0; p < h * w; ++p) pair.lidar[p] = static_cast<real>(-static_cast<double>(p));
  return pair;
}

}  // namespace

// ---- normalization -----------------------------------------------------------

TEST(Normalize, MinMaxPerBand) {
  Tensor t({2, 1, 2}, std::vector<real>{2, 4, -1, 3});
  EXPECT_EQ(normalize(t), Tensor({2, 1, 2}, std::vector<real>{0, 1, 0, 1}));
}

TEST(Normalize, ConstantBandMapsToZero) {
  EXPECT_EQ(normalize(Tensor({1, 2, 2}, 7.0)), Tensor::zeros({1, 2, 2}));
}

TEST(Normalize, UnitRangeIsUnchanged) {
  Tensor t({1, 1, 4}, std::vector<real>{0, 0.25, 1, 0.5});
  EXPECT_EQ(normalize(t), t);
}

TEST(Normalize, ExplicitRangeIsReplayed) {
  const BandRange range{{0}, {10}};
  EXPECT_EQ(normalize(Tensor({1, 1, 2}, std::vector<real>{5, 20}), range), Tensor({1, 1, 2}, std::vector<real>{0.5, 2}));
  EXPECT_THROW(normalize(Tensor({2, 1, 1}), range), DimensionError);
}

// ---- mirror padding and patches --------------------------------------------------

TEST(Patches, MirrorIndexReflects101) {
  EXPECT_EQ(mirror_index(-1, 5), 1u);
  EXPECT_EQ(mirror_index(-2, 5), 2u);
  EXPECT_EQ(mirror_index(5, 5), 3u);
  EXPECT_EQ(mirror_index(6, 5), 2u);
  EXPECT_EQ(mirror_index(3, 5), 3u);
  EXPECT_EQ(mirror_index(-3, 1), 0u);
}

TEST(Patches, InteriorPatchIsVerbatimNeighborhood) {
  const RasterPair pair = ramp_scene(3, 6, 7);
  const std::vector<Pixel> px{{2, 3}};
  const auto [h, l] = cut_patches(pair.hsi, pair.lidar, px, 3);
  for (std::size_t b = 0; b < 3; ++b)
    for (std::size_t dy = 0; dy < 3; ++dy)
      for (std::size_t dx = 0; dx < 3; ++dx) {
        EXPECT_EQ(h.at({0, b, dy, dx}), pair.hsi.at({b, 1 + dy, 2 + dx}));
        EXPECT_EQ(l.at({0, 0, dy, dx}), pair.lidar.at({0, 1 + dy, 2 + dx}));
      }
}

TEST(Patches, CornerPatchMirrorsRowAndColumnOne) {
  const RasterPair pair = ramp_scene(1, 4, 4);
  const std::vector<Pixel> px{{0, 0}};
  const auto [h, l] = cut_patches(pair.hsi, pair.lidar, px, 3);
  const std::size_t rows[3] = {1, 0, 1};
  for (std::size_t dy = 0; dy < 3; ++dy)
    for (std::size_t dx = 0; dx < 3; ++dx) {
      EXPECT_EQ(h.at({0, 0, dy, dx}), pair.hsi.at({0, rows[dy], rows[dx]}));
      EXPECT_EQ(l.at({0, 0, dy, dx}), pair.lidar.at({0, rows[dy], rows[dx]}));
    }
}

TEST(Patches, AnyInteriorPixelMatchesDirectSlice) {
  const RasterPair pair = ramp_scene(2, 15, 13);
  std::vector<Pixel> px;
  for (std::size_t r = 5; r < 10; ++r)
    for (std::size_t c = 5; c < 8; ++c) px.push_back({r, c});
  const auto [h, l] = cut_patches(pair.hsi, pair.lidar, px, 11);
  for (std::size_t i = 0; i < px.size(); ++i)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t dy = 0; dy < 11; ++dy)
        for (std::size_t dx = 0; dx < 11; ++dx)
          ASSERT_EQ(h.at({i, b, dy, dx}), pair.hsi.at({b, px[i].row + dy - 5, px[i].col + dx - 5}));
  EXPECT_EQ(l.shape(), (Shape{px.size(), 1, 11, 11}));
}

TEST(Patches, OnePatchPerLabeledPixel) {
  RasterPair pair = ramp_scene(2, 5, 5);
  std::fill(pair.labels.values.begin(), pair.labels.values.end(), 0);
  const std::size_t labeled[] = {0, 3, 7, 11, 12, 20, 24};
  for (std::size_t i = 0; i < 7; ++i) pair.labels.values[labeled[i]] = static_cast<std::uint16_t>(1 + i % 3);
  const PatchSet set = extract_patches(pair, 3);
  ASSERT_EQ(set.size(), 7u);
  EXPECT_EQ(set.hsi.dim(0), 7u);
  EXPECT_EQ(set.lidar.dim(0), 7u);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(set.pixels[i].row * 5 + set.pixels[i].col, labeled[i]);
    EXPECT_EQ(set.labels[i], static_cast<int>(1 + i % 3));
    EXPECT_NE(set.labels[i], 0);
  }
}

TEST(Patches, GeometryErrors) {
  const RasterPair pair = ramp_scene(1, 4, 5);
  EXPECT_THROW(extract_patches(pair, 4), ConfigError);
  EXPECT_THROW(extract_patches(pair, 9), ConfigError);
  EXPECT_NO_THROW(extract_patches(pair, 7));
  const std::vector<Pixel> outside{{4, 0}};
  EXPECT_THROW(cut_patches(pair.hsi, pair.lidar, outside, 3), DimensionError);
  const std::vector<Pixel> inside{{0, 0}};
  EXPECT_THROW(cut_patches(pair.hsi, Tensor({1, 4, 4}), inside, 3), RegistrationError);
}

// ---- split -----------------------------------------------------------------

TEST(Split, HalfOfTenPerClass) {
  std::vector<int> labels;
  for (int c = 1; c <= 3; ++c)
    for (int i = 0; i < 10; ++i) labels.push_back(c);
  const SplitIndices s = split_indices(labels, 0.5, 1);
  for (int c = 1; c <= 3; ++c) {
    EXPECT_EQ(std::count_if(s.train.begin(), s.train.end(), [&](auto i) { return labels[i] == c; }), 5);
    EXPECT_EQ(std::count_if(s.test.begin(), s.test.end(), [&](auto i) { return labels[i] == c; }), 5);
  }
}

TEST(Split, SameSeedSameIndices) {
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) labels.push_back(1 + i % 7);
  const SplitIndices a = split_indices(labels, 0.2, 42);
  const SplitIndices b = split_indices(labels, 0.2, 42);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(split_indices(labels, 0.2, 43).train, a.train);
}

TEST(Split, IsAPartition) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> labels(100 + rng() % 100);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % 5);
    const SplitIndices s = split_indices(labels, 0.3, seed);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto i : s.test) EXPECT_TRUE(all.insert(i).second) << "index " << i << " in both halves";
    EXPECT_EQ(all.size(), labels.size());
    EXPECT_EQ(*all.rbegin(), labels.size() - 1);
  }
}

TEST(Split, EveryClassOnBothSides) {
  const std::vector<int> labels{1, 1, 2, 2, 2, 2, 2, 2, 2, 2, 2};
  const SplitIndices s = split_indices(labels, 0.01, 3);
  EXPECT_EQ(s.train.size(), 2u);  // clamped to one per class
  const SplitIndices t = split_indices(labels, 0.99, 3);
  EXPECT_EQ(t.test.size(), 2u);
}

TEST(Split, Errors) {
  const std::vector<int> lonely{1, 1, 2};
  EXPECT_THROW(split_indices(lonely, 0.5, 0), StratificationError);
  const std::vector<int> ok{1, 1};
  EXPECT_THROW(split_indices(ok, 0.0, 0), ConfigError);
  EXPECT_THROW(split_indices(ok, 1.0, 0), ConfigError);
}

TEST(Split, PatchSetsFollowIndices) {
  RasterPair pair = ramp_scene(2, 6, 6);
  for (std::size_t p = 0; p < 36; ++p) pair.labels.values[p] = static_cast<std::uint16_t>(1 + p % 3);
  const PatchSet set = extract_patches(pair, 3);
  const auto [train, test] = split(set, 0.25, 9);
  EXPECT_EQ(train.size() + test.size(), set.size());
  const SplitIndices idx = split_indices(set.labels, 0.25, 9);
  for (std::size_t k = 0; k < train.size(); ++k) {
    EXPECT_EQ(train.pixels[k], set.pixels[idx.train[k]]);
    EXPECT_EQ(train.labels[k], set.labels[idx.train[k]]);
    EXPECT_EQ(train.hsi.at({k, 1, 1, 1}), set.hsi.at({idx.train[k], 1, 1, 1}));
  }
}
