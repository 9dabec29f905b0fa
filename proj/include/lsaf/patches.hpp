#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lsaf/raster.hpp"

namespace lsaf {

/// Per-band minimum and maximum of a [bands,H,W] raster.
struct BandRange {
  std::vector<real> min;
  std::vector<real> max;
};

BandRange band_range(const Tensor& raster);
/// Min-max scaling to [0,1] per band; constant bands map to 0.
Tensor normalize(const Tensor& raster, const BandRange& range);
Tensor normalize(const Tensor& raster);

struct Pixel {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Labeled samples cut around pixels of one scene.
struct PatchSet {
  Tensor hsi;                // [n, r, s, s]
  Tensor lidar;              // [n, 1, s, s]
  std::vector<int> labels;   // 1..K
  std::vector<Pixel> pixels; // centre of each patch
  std::size_t patch = 0;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
};

/// Reflect-101 index into [0, extent): -1 -> 1, extent -> extent - 2.
std::size_t mirror_index(std::ptrdiff_t index, std::size_t extent);

/// Cuts s x s patches of both modalities centred at `pixels`, mirror-padded at
/// the borders. Returns {hsi [n,r,s,s], lidar [n,1,s,s]}.
std::pair<Tensor, Tensor> cut_patches(const Tensor& hsi, const Tensor& lidar, std::span<const Pixel> pixels,
                                      std::size_t patch);

/// One patch per labeled pixel in row-major pixel order.
PatchSet extract_patches(const RasterPair& pair, std::size_t patch = 11);

PatchSet subset(const PatchSet& set, std::span<const std::size_t> indices);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split: round(fraction * n_c) samples of each class (clamped to
/// [1, n_c - 1]) go to train. Index lists are sorted; seed-deterministic.
SplitIndices split_indices(std::span<const int> labels, double fraction, std::uint64_t seed);
std::pair<PatchSet, PatchSet> split(const PatchSet& set, double fraction, std::uint64_t seed);

}  // namespace lsaf
