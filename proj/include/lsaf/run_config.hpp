#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "lsaf/model.hpp"
#include "lsaf/optimizer.hpp"

namespace lsaf {

struct DataConfig {
  std::filesystem::path hsi;
  std::filesystem::path lidar;
  std::filesystem::path labels;
  std::size_t patch = 11;
  std::size_t pca_dims = 30;
  bool pca_labeled_only = false;
  double train_fraction = 0.2;
};

/// Settings for one run, read from a JSON file with the sections "data",
/// "model" and "train" plus a top-level "out" directory. See docs/formats.md
/// for the key set.
struct RunConfig {
  DataConfig data;
  ModelConfig model;  // bands, patch and classes are filled from the data
  TrainConfig train;
  std::size_t checkpoint_every = 10;
  std::filesystem::path out = "lsaf_out";

  /// Throws ConfigError naming the first missing or invalid key.
  void validate() const;
  /// Additionally requires the three data paths to be set.
  void require_data() const;
};

/// Unknown keys and mistyped values raise ConfigError naming the key path.
RunConfig parse_run_config(std::string_view json_text, const std::string& source = "config");
RunConfig load_run_config(const std::filesystem::path& path);

/// The config as JSON, every key present.
std::string dump_run_config(const RunConfig& config);

HeadMode parse_head_mode(std::string_view text);
std::string_view head_mode_name(HeadMode mode);

}  // namespace lsaf
