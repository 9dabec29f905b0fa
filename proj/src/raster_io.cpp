#include <algorithm>
#include <fstream>
#include <iterator>

#include "lsaf/detail/binary.hpp"
#include "lsaf/raster.hpp"

namespace lsaf {

namespace detail {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace detail

namespace {

RasterHeader parse_header(detail::ByteReader& reader) {
  const auto magic = reader.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError(reader.source() + ": bad magic, not an LSAF container");
  }
  RasterHeader h;
  h.version = reader.get<std::uint32_t>();
  if (h.version != kFormatVersion) {
    throw FormatError(reader.source() + ": unsupported version " + std::to_string(h.version));
  }
  h.bands = reader.get<std::uint32_t>();
  h.height = reader.get<std::uint32_t>();
  h.width = reader.get<std::uint32_t>();
  const auto tag = reader.get<std::uint8_t>();
  if (tag < 1 || tag > 3) throw FormatError(reader.source() + ": unknown element type " + std::to_string(tag));
  h.type = static_cast<ElementType>(tag);
  if (h.bands == 0 || h.height == 0 || h.width == 0) {
    throw FormatError(reader.source() + ": header declares an empty raster");
  }
  return h;
}

std::string encode_header(const RasterHeader& h) {
  std::string out(kMagic, 4);
  detail::put<std::uint32_t>(out, h.version);
  detail::put<std::uint32_t>(out, h.bands);
  detail::put<std::uint32_t>(out, h.height);
  detail::put<std::uint32_t>(out, h.width);
  detail::put<std::uint8_t>(out, static_cast<std::uint8_t>(h.type));
  return out;
}

void check_payload(const RasterHeader& h, std::uint64_t available, const std::string& source) {
  const std::uint64_t expected = h.payload_bytes();
  if (available < expected) {
    throw FormatError(source + ": file shorter than header demands (" + std::to_string(available) + " of " +
                      std::to_string(expected) + " payload bytes)");
  }
  if (available > expected) {
    throw FormatError(source + ": " + std::to_string(available - expected) + " trailing bytes after payload");
  }
}

std::uint32_t to_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) throw FormatError(std::string(what) + " exceeds 32-bit header field");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::uint64_t RasterHeader::payload_bytes() const {
  const std::uint64_t count = std::uint64_t{bands} * height * width;
  switch (type) {
    case ElementType::float32:
      return count * 4;
    case ElementType::uint16:
      return count * 2;
    case ElementType::tensor_table:
      break;
  }
  throw FormatError("payload size of a tensor table is not fixed by its header");
}

std::size_t LabelMap::max_label() const {
  return values.empty() ? 0 : *std::max_element(values.begin(), values.end());
}

std::size_t LabelMap::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](auto v) { return v != 0; }));
}

void RasterPair::validate() const {
  if (hsi.rank() != 3) throw FormatError("HSI raster must be [bands,H,W], got " + to_string(hsi.shape()));
  if (lidar.rank() != 3 || lidar.dim(0) != 1) {
    throw FormatError("LiDAR raster must be [1,H,W], got " + to_string(lidar.shape()));
  }
  if (labels.values.size() != labels.height * labels.width) throw FormatError("label map size inconsistent");
  if (hsi.dim(1) != labels.height || hsi.dim(2) != labels.width || lidar.dim(1) != labels.height ||
      lidar.dim(2) != labels.width) {
    throw RegistrationError("modalities are not co-registered: HSI " + to_string(hsi.shape()) + ", LiDAR " +
                            to_string(lidar.shape()) + ", labels [" + std::to_string(labels.height) + "x" +
                            std::to_string(labels.width) + "]");
  }
}

RasterHeader read_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes(kHeaderBytes, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(kHeaderBytes));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  detail::ByteReader reader(bytes, path.string());
  return parse_header(reader);
}

RasterHeader inspect_raster(const std::filesystem::path& path) {
  RasterHeader h = read_header(path);
  if (h.type == ElementType::tensor_table) throw FormatError(path.string() + ": is a tensor table, not a raster");
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw IoError("cannot stat " + path.string());
  check_payload(h, size - kHeaderBytes, path.string());
  return h;
}

Tensor read_raster(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  const RasterHeader h = parse_header(reader);
  if (h.type != ElementType::float32) throw FormatError(path.string() + ": expected 32-bit float raster");
  check_payload(h, reader.remaining(), path.string());
  Tensor out({h.bands, h.height, h.width});
  for (auto& v : out.data()) v = static_cast<real>(reader.get<float>());
  return out;
}

void write_raster(const std::filesystem::path& path, const Tensor& raster) {
  if (raster.rank() != 3) throw DimensionError("write_raster expects [bands,H,W], got " + to_string(raster.shape()));
  RasterHeader h;
  h.bands = to_u32(raster.dim(0), "band count");
  h.height = to_u32(raster.dim(1), "height");
  h.width = to_u32(raster.dim(2), "width");
  h.type = ElementType::float32;
  std::string bytes = encode_header(h);
  bytes.reserve(kHeaderBytes + raster.size() * 4);
  for (real v : raster.data()) detail::put<float>(bytes, static_cast<float>(v));
  detail::write_file(path, bytes);
}

LabelMap read_labels(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  const RasterHeader h = parse_header(reader);
  if (h.type != ElementType::uint16 || h.bands != 1) {
    throw FormatError(path.string() + ": expected single-band 16-bit label raster");
  }
  check_payload(h, reader.remaining(), path.string());
  LabelMap labels{h.height, h.width, std::vector<std::uint16_t>(std::size_t{h.height} * h.width)};
  for (auto& v : labels.values) v = reader.get<std::uint16_t>();
  return labels;
}

void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
  if (labels.values.size() != labels.height * labels.width || labels.values.empty()) {
    throw DimensionError("write_labels: label map size inconsistent");
  }
  RasterHeader h;
  h.bands = 1;
  h.height = to_u32(labels.height, "height");
  h.width = to_u32(labels.width, "width");
  h.type = ElementType::uint16;
  std::string bytes = encode_header(h);
  for (auto v : labels.values) detail::put<std::uint16_t>(bytes, v);
  detail::write_file(path, bytes);
}

RasterPair load_raster(const std::filesystem::path& hsi, const std::filesystem::path& lidar,
                       const std::filesystem::path& labels) {
  RasterPair pair{read_raster(hsi), read_raster(lidar), read_labels(labels)};
  pair.validate();
  return pair;
}

void save_raster(const RasterPair& pair, const std::filesystem::path& hsi, const std::filesystem::path& lidar,
                 const std::filesystem::path& labels) {
  pair.validate();
  write_raster(hsi, pair.hsi);
  write_raster(lidar, pair.lidar);
  write_labels(labels, pair.labels);
}

}  // namespace lsaf
