#include "lsaf/patches.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>

namespace lsaf {

BandRange band_range(const Tensor& raster) {
  if (raster.rank() != 3) throw DimensionError("band_range expects [bands,H,W], got " + to_string(raster.shape()));
  const std::size_t bands = raster.dim(0);
  const std::size_t pixels = raster.dim(1) * raster.dim(2);
  BandRange range{std::vector<real>(bands), std::vector<real>(bands)};
  for (std::size_t b = 0; b < bands; ++b) {
    const auto [lo, hi] = std::minmax_element(raster.raw() + b * pixels, raster.raw() + (b + 1) * pixels);
    range.min[b] = *lo;
    range.max[b] = *hi;
  }
  return range;
}

Tensor normalize(const Tensor& raster, const BandRange& range) {
  if (raster.rank() != 3 || range.min.size() != raster.dim(0) || range.max.size() != raster.dim(0)) {
    throw DimensionError("normalize: range does not match raster " + to_string(raster.shape()));
  }
  const std::size_t pixels = raster.dim(1) * raster.dim(2);
  Tensor out(raster.shape());
  for (std::size_t b = 0; b < raster.dim(0); ++b) {
    const real lo = range.min[b];
    const real span = range.max[b] - lo;
    const real* src = raster.raw() + b * pixels;
    real* dst = out.raw() + b * pixels;
    for (std::size_t p = 0; p < pixels; ++p) dst[p] = span > real(0) ? (src[p] - lo) / span : real(0);
  }
  return out;
}

Tensor normalize(const Tensor& raster) { return normalize(raster, band_range(raster)); }

std::size_t mirror_index(std::ptrdiff_t index, std::size_t extent) {
  const auto n = static_cast<std::ptrdiff_t>(extent);
  if (extent == 1) return 0;
  if (index < 0) index = -index;
  if (index >= n) index = 2 * (n - 1) - index;
  if (index < 0 || index >= n) throw ConfigError("mirror padding reaches past a second reflection");
  return static_cast<std::size_t>(index);
}

std::pair<Tensor, Tensor> cut_patches(const Tensor& hsi, const Tensor& lidar, std::span<const Pixel> pixels,
                                      std::size_t patch) {
  if (hsi.rank() != 3 || lidar.rank() != 3 || lidar.dim(0) != 1 || hsi.dim(1) != lidar.dim(1) ||
      hsi.dim(2) != lidar.dim(2)) {
    throw RegistrationError("cut_patches: HSI " + to_string(hsi.shape()) + " and LiDAR " + to_string(lidar.shape()) +
                            " are not co-registered");
  }
  const std::size_t height = hsi.dim(1);
  const std::size_t width = hsi.dim(2);
  if (patch == 0 || patch % 2 == 0) throw ConfigError("patch size must be odd, got " + std::to_string(patch));
  if (patch > 2 * std::min(height, width)) {
    throw ConfigError("patch size " + std::to_string(patch) + " exceeds twice the scene extent " +
                      std::to_string(std::min(height, width)));
  }
  if (pixels.empty()) throw ConfigError("cut_patches: no pixels requested");
  const std::size_t bands = hsi.dim(0);
  const std::size_t n = pixels.size();
  const auto half = static_cast<std::ptrdiff_t>(patch / 2);
  const std::size_t area = patch * patch;

  for (const Pixel& px : pixels) {
    if (px.row >= height || px.col >= width) throw DimensionError("cut_patches: pixel outside scene");
  }
  Tensor hsi_out({n, bands, patch, patch});
  Tensor lidar_out({n, 1, patch, patch});
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const Pixel px = pixels[i];
    std::vector<std::size_t> offsets(area);
    for (std::size_t dy = 0; dy < patch; ++dy) {
      const std::size_t y = mirror_index(static_cast<std::ptrdiff_t>(px.row) + static_cast<std::ptrdiff_t>(dy) - half, height);
      for (std::size_t dx = 0; dx < patch; ++dx) {
        const std::size_t x = mirror_index(static_cast<std::ptrdiff_t>(px.col) + static_cast<std::ptrdiff_t>(dx) - half, width);
        offsets[dy * patch + dx] = y * width + x;
      }
    }
    for (std::size_t b = 0; b < bands; ++b) {
      const real* band = hsi.raw() + b * height * width;
      real* dst = hsi_out.raw() + (i * bands + b) * area;
      for (std::size_t k = 0; k < area; ++k) dst[k] = band[offsets[k]];
    }
    real* dst = lidar_out.raw() + i * area;
    for (std::size_t k = 0; k < area; ++k) dst[k] = lidar[offsets[k]];
  }
  return {std::move(hsi_out), std::move(lidar_out)};
}

PatchSet extract_patches(const RasterPair& pair, std::size_t patch) {
  pair.validate();
  PatchSet set;
  set.patch = patch;
  for (std::size_t r = 0; r < pair.height(); ++r) {
    for (std::size_t c = 0; c < pair.width(); ++c) {
      const auto label = pair.labels.at(r, c);
      if (label == 0) continue;
      set.pixels.push_back({r, c});
      set.labels.push_back(static_cast<int>(label));
    }
  }
  if (set.pixels.empty()) {
    // Validate geometry even when nothing is labeled.
    if (patch == 0 || patch % 2 == 0 || patch > 2 * std::min(pair.height(), pair.width())) {
      throw ConfigError("invalid patch size " + std::to_string(patch));
    }
    return set;
  }
  auto [h, l] = cut_patches(pair.hsi, pair.lidar, set.pixels, patch);
  set.hsi = std::move(h);
  set.lidar = std::move(l);
  return set;
}

PatchSet subset(const PatchSet& set, std::span<const std::size_t> indices) {
  PatchSet out;
  out.patch = set.patch;
  if (indices.empty()) return out;
  const std::size_t hsi_stride = set.hsi.size() / set.size();
  const std::size_t lidar_stride = set.lidar.size() / set.size();
  Shape hsi_shape = set.hsi.shape();
  Shape lidar_shape = set.lidar.shape();
  hsi_shape[0] = indices.size();
  lidar_shape[0] = indices.size();
  out.hsi = Tensor(hsi_shape);
  out.lidar = Tensor(lidar_shape);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= set.size()) throw DimensionError("subset index out of range");
    std::copy_n(set.hsi.raw() + i * hsi_stride, hsi_stride, out.hsi.raw() + k * hsi_stride);
    std::copy_n(set.lidar.raw() + i * lidar_stride, lidar_stride, out.lidar.raw() + k * lidar_stride);
    out.labels.push_back(set.labels[i]);
    out.pixels.push_back(set.pixels[i]);
  }
  return out;
}

SplitIndices split_indices(std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split fraction must lie strictly between 0 and 1, got " + std::to_string(fraction));
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto& [label, members] : by_class) {
    if (members.size() < 2) {
      throw StratificationError("class " + std::to_string(label) + " has " + std::to_string(members.size()) +
                                " sample(s); stratified split needs at least 2");
    }
    for (std::size_t i = members.size() - 1; i > 0; --i) {
      std::swap(members[i], members[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    take = std::clamp<std::size_t>(take, 1, members.size() - 1);
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::pair<PatchSet, PatchSet> split(const PatchSet& set, double fraction, std::uint64_t seed) {
  const SplitIndices idx = split_indices(set.labels, fraction, seed);
  return {subset(set, idx.train), subset(set, idx.test)};
}

}  // namespace lsaf
