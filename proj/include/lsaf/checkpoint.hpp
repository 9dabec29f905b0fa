#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "lsaf/model.hpp"

namespace lsaf {

using TensorTable = std::vector<std::pair<std::string, Tensor>>;

/// Named tensor table in the LSAF container (element type 3): the 21-byte
/// header with bands = entry count, then per entry u32 name length, name
/// bytes, u32 rank, u32 dims, float64 payload.
void write_tensor_table(const std::filesystem::path& path, const TensorTable& table);
TensorTable read_tensor_table(const std::filesystem::path& path);

const Tensor* find_tensor(const TensorTable& table, const std::string& name);

/// Parameters and batch-norm statistics under their registry names.
TensorTable model_state(LsafModel& model);

/// Copies every model tensor from `table`. Throws FormatError naming the first
/// tensor that is missing or has the wrong shape; nothing is modified then.
void load_model_state(LsafModel& model, const TensorTable& table);

}  // namespace lsaf
