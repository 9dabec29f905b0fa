#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "lsaf/tensor.hpp"

namespace lsaf {

/// Element type tag stored in byte 20 of every container file.
enum class ElementType : std::uint8_t {
  float32 = 1,
  uint16 = 2,
  tensor_table = 3,
};

inline constexpr char kMagic[4] = {'L', 'S', 'A', 'F'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 21;

/// Fixed 21-byte header: magic, version, bands, height, width, element type.
struct RasterHeader {
  std::uint32_t version = kFormatVersion;
  std::uint32_t bands = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  ElementType type = ElementType::float32;

  /// Payload size implied by the header (raster types only).
  std::uint64_t payload_bytes() const;
};

/// Ground truth: 0 = unlabeled, 1..K = class.
struct LabelMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint16_t> values;

  std::uint16_t at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
  std::size_t max_label() const;
  std::size_t labeled_count() const;
};

/// Co-registered HSI cube [bands,H,W], LiDAR raster [1,H,W] and label map.
struct RasterPair {
  Tensor hsi;
  Tensor lidar;
  LabelMap labels;

  std::size_t bands() const { return hsi.dim(0); }
  std::size_t height() const { return labels.height; }
  std::size_t width() const { return labels.width; }
  std::size_t classes() const { return labels.max_label(); }

  /// Throws RegistrationError when the modalities disagree on H x W.
  void validate() const;
};

RasterHeader read_header(const std::filesystem::path& path);
/// Parses the header and checks the file length against it without reading
/// the payload.
RasterHeader inspect_raster(const std::filesystem::path& path);

Tensor read_raster(const std::filesystem::path& path);
void write_raster(const std::filesystem::path& path, const Tensor& raster);
LabelMap read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const LabelMap& labels);

RasterPair load_raster(const std::filesystem::path& hsi, const std::filesystem::path& lidar,
                       const std::filesystem::path& labels);
void save_raster(const RasterPair& pair, const std::filesystem::path& hsi, const std::filesystem::path& lidar,
                 const std::filesystem::path& labels);

}  // namespace lsaf
