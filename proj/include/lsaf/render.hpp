#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "lsaf/model.hpp"
#include "lsaf/raster.hpp"

namespace lsaf {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

inline constexpr std::size_t kPaletteSize = 20;

/// Fixed palette indexed by class - 1. Label 0 renders black.
const std::array<Rgb, kPaletteSize>& class_palette();
/// Throws ConfigError for labels above kPaletteSize.
Rgb class_color(std::uint16_t label);

/// Binary PPM (P6, maxval 255) of a label map.
std::string encode_ppm(const LabelMap& map);
void write_ppm(const std::filesystem::path& path, const LabelMap& map);

/// Predicted class for every labeled pixel of a preprocessed scene, 0
/// elsewhere. Rows are processed in blocks; output is independent of the
/// block size.
LabelMap classify_scene(LsafModel& model, const RasterPair& prepared, std::size_t rows_per_block = 8);

}  // namespace lsaf
