#include "lsaf/checkpoint.hpp"

#include <algorithm>

#include "lsaf/detail/binary.hpp"
#include "lsaf/raster.hpp"

namespace lsaf {

void write_tensor_table(const std::filesystem::path& path, const TensorTable& table) {
  std::string bytes(kMagic, 4);
  detail::put<std::uint32_t>(bytes, kFormatVersion);
  detail::put<std::uint32_t>(bytes, static_cast<std::uint32_t>(table.size()));
  detail::put<std::uint32_t>(bytes, 1);
  detail::put<std::uint32_t>(bytes, 1);
  detail::put<std::uint8_t>(bytes, static_cast<std::uint8_t>(ElementType::tensor_table));
  for (const auto& [name, tensor] : table) {
    detail::put<std::uint32_t>(bytes, static_cast<std::uint32_t>(name.size()));
    bytes += name;
    detail::put<std::uint32_t>(bytes, static_cast<std::uint32_t>(tensor.rank()));
    for (auto d : tensor.shape()) detail::put<std::uint32_t>(bytes, static_cast<std::uint32_t>(d));
    for (real v : tensor.data()) detail::put<double>(bytes, static_cast<double>(v));
  }
  detail::write_file(path, bytes);
}

TensorTable read_tensor_table(const std::filesystem::path& path) {
  const std::string bytes = detail::read_file(path);
  detail::ByteReader reader(bytes, path.string());
  const auto magic = reader.take(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) {
    throw FormatError(path.string() + ": bad magic, not an LSAF checkpoint");
  }
  if (reader.get<std::uint32_t>() != kFormatVersion) throw FormatError(path.string() + ": unsupported version");
  const auto count = reader.get<std::uint32_t>();
  reader.get<std::uint32_t>();
  reader.get<std::uint32_t>();
  if (reader.get<std::uint8_t>() != static_cast<std::uint8_t>(ElementType::tensor_table)) {
    throw FormatError(path.string() + ": not a tensor table");
  }
  TensorTable table;
  table.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = reader.get<std::uint32_t>();
    std::string name(reader.take(name_len));
    const auto rank = reader.get<std::uint32_t>();
    if (rank == 0 || rank > 8) throw FormatError(path.string() + ": tensor '" + name + "' has invalid rank");
    Shape shape(rank);
    std::uint64_t count_elems = 1;
    for (auto& d : shape) {
      d = reader.get<std::uint32_t>();
      if (d == 0) throw FormatError(path.string() + ": tensor '" + name + "' has a zero dimension");
      count_elems *= d;
    }
    if (count_elems * 8 > reader.remaining()) {
      throw FormatError(path.string() + ": tensor '" + name + "' payload truncated");
    }
    std::vector<real> data(count_elems);
    for (auto& v : data) v = static_cast<real>(reader.get<double>());
    table.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  if (reader.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after tensor table");
  return table;
}

const Tensor* find_tensor(const TensorTable& table, const std::string& name) {
  for (const auto& [key, tensor] : table) {
    if (key == name) return &tensor;
  }
  return nullptr;
}

TensorTable model_state(LsafModel& model) {
  TensorTable table;
  for (const auto& [name, v] : named_parameters(model)) table.emplace_back(name, v.value());
  for (const auto& [name, t] : named_buffers(model)) table.emplace_back(name, *t);
  return table;
}

void load_model_state(LsafModel& model, const TensorTable& table) {
  auto params = named_parameters(model);
  auto buffers = named_buffers(model);
  auto check = [&](const std::string& name, const Tensor& expected) -> const Tensor& {
    const Tensor* found = find_tensor(table, name);
    if (found == nullptr) throw FormatError("checkpoint incompatible: tensor '" + name + "' is missing");
    if (found->shape() != expected.shape()) {
      throw FormatError("checkpoint incompatible: tensor '" + name + "' has shape " + to_string(found->shape()) +
                        ", model expects " + to_string(expected.shape()));
    }
    return *found;
  };
  for (auto& [name, v] : params) check(name, v.value());
  for (auto& [name, t] : buffers) check(name, *t);
  for (auto& [name, v] : params) v.mutable_value() = *find_tensor(table, name);
  for (auto& [name, t] : buffers) *t = *find_tensor(table, name);
}

}  // namespace lsaf
