#include "lsaf/render.hpp"

#include <vector>

#include "lsaf/detail/binary.hpp"
#include "lsaf/errors.hpp"
#include "lsaf/patches.hpp"
#include "lsaf/trainer.hpp"

namespace lsaf {

const std::array<Rgb, kPaletteSize>& class_palette() {
  static const std::array<Rgb, kPaletteSize> palette{{
      {0, 205, 0},      {127, 255, 0},   {46, 139, 87},   {0, 139, 0},     {160, 82, 45},
      {0, 255, 255},    {255, 255, 255}, {216, 191, 216}, {255, 0, 0},     {139, 0, 0},
      {100, 100, 100},  {255, 255, 0},   {238, 154, 0},   {85, 26, 139},   {255, 127, 80},
      {0, 0, 255},      {255, 0, 255},   {0, 128, 128},   {128, 128, 0},   {70, 130, 180},
  }};
  return palette;
}

Rgb class_color(std::uint16_t label) {
  if (label == 0) return {};
  if (label > kPaletteSize) {
    throw ConfigError("class " + std::to_string(label) + " exceeds the " + std::to_string(kPaletteSize) +
                      "-color palette");
  }
  return class_palette()[label - 1];
}

std::string encode_ppm(const LabelMap& map) {
  if (map.values.size() != map.height * map.width) throw DimensionError("label map size does not match H x W");
  std::string out = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + 3 * map.values.size());
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    const Rgb c = class_color(map.values[i]);
    out[header + 3 * i] = static_cast<char>(c.r);
    out[header + 3 * i + 1] = static_cast<char>(c.g);
    out[header + 3 * i + 2] = static_cast<char>(c.b);
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const LabelMap& map) { detail::write_file(path, encode_ppm(map)); }

LabelMap classify_scene(LsafModel& model, const RasterPair& prepared, std::size_t rows_per_block) {
  prepared.validate();
  if (rows_per_block == 0) throw ConfigError("rows_per_block must be positive");
  LabelMap out{prepared.height(), prepared.width(), std::vector<std::uint16_t>(prepared.labels.values.size(), 0)};
  std::vector<Pixel> pixels;
  for (std::size_t row0 = 0; row0 < out.height; row0 += rows_per_block) {
    const std::size_t row1 = std::min(out.height, row0 + rows_per_block);
    pixels.clear();
    for (std::size_t r = row0; r < row1; ++r)
      for (std::size_t c = 0; c < out.width; ++c)
        if (prepared.labels.at(r, c) != 0) pixels.push_back({r, c});
    if (pixels.empty()) continue;
    const auto [hsi, lidar] = cut_patches(prepared.hsi, prepared.lidar, pixels, model.config.patch);
    const auto predicted = predict(model, hsi, lidar);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      out.values[pixels[i].row * out.width + pixels[i].col] = static_cast<std::uint16_t>(predicted[i]);
    }
  }
  return out;
}

}  // namespace lsaf
