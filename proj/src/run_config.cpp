#include "lsaf/run_config.hpp"

#include <json.hpp>
#include <set>

#include "lsaf/detail/binary.hpp"
#include "lsaf/errors.hpp"

namespace lsaf {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& object, const std::string& prefix, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown config key '" + prefix + key + "'");
  }
}

const json& section(const json& root, const std::string& name) {
  static const json empty = json::object();
  if (!root.contains(name)) return empty;
  const json& s = root.at(name);
  if (!s.is_object()) throw ConfigError("config key '" + name + "' must be an object");
  return s;
}

template <typename T>
void read(const json& object, const std::string& prefix, const std::string& key, T& target) {
  if (!object.contains(key)) return;
  try {
    target = object.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + prefix + key + "' has the wrong type: " + e.what());
  }
}

void read_size(const json& object, const std::string& prefix, const std::string& key, std::size_t& target) {
  if (!object.contains(key)) return;
  const json& v = object.at(key);
  if (!v.is_number_unsigned()) throw ConfigError("config key '" + prefix + key + "' must be a non-negative integer");
  target = v.get<std::size_t>();
}

void read_path(const json& object, const std::string& prefix, const std::string& key, std::filesystem::path& target) {
  std::string s;
  read(object, prefix, key, s);
  if (object.contains(key)) target = s;
}

}  // namespace

HeadMode parse_head_mode(std::string_view text) {
  if (text == "fusion") return HeadMode::fusion;
  if (text == "hsi_only") return HeadMode::hsi_only;
  if (text == "lidar_only") return HeadMode::lidar_only;
  throw ConfigError("unknown head mode '" + std::string(text) + "' (fusion, hsi_only, lidar_only)");
}

std::string_view head_mode_name(HeadMode mode) {
  switch (mode) {
    case HeadMode::hsi_only: return "hsi_only";
    case HeadMode::lidar_only: return "lidar_only";
    case HeadMode::fusion: break;
  }
  return "fusion";
}

RunConfig parse_run_config(std::string_view json_text, const std::string& source) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  if (!root.is_object()) throw ConfigError(source + ": top level must be an object");
  reject_unknown(root, "", {"data", "model", "train", "out"});

  RunConfig config;
  read_path(root, "", "out", config.out);

  const json& data = section(root, "data");
  reject_unknown(data, "data.", {"hsi", "lidar", "labels", "patch", "pca_dims", "pca_labeled_only", "train_fraction"});
  read_path(data, "data.", "hsi", config.data.hsi);
  read_path(data, "data.", "lidar", config.data.lidar);
  read_path(data, "data.", "labels", config.data.labels);
  read_size(data, "data.", "patch", config.data.patch);
  read_size(data, "data.", "pca_dims", config.data.pca_dims);
  read(data, "data.", "pca_labeled_only", config.data.pca_labeled_only);
  read(data, "data.", "train_fraction", config.data.train_fraction);

  const json& model = section(root, "model");
  reject_unknown(model, "model.", {"hsi_channels", "hsi_spectral_kernels", "hsi_conv2d_channels", "lidar_channels",
                                   "hidden", "se_reduction", "head"});
  read(model, "model.", "hsi_channels", config.model.hsi_channels);
  read(model, "model.", "hsi_spectral_kernels", config.model.hsi_spectral_kernels);
  read_size(model, "model.", "hsi_conv2d_channels", config.model.hsi_conv2d_channels);
  read(model, "model.", "lidar_channels", config.model.lidar_channels);
  read_size(model, "model.", "hidden", config.model.hidden);
  read_size(model, "model.", "se_reduction", config.model.se_reduction);
  if (model.contains("head")) {
    std::string head;
    read(model, "model.", "head", head);
    config.model.head = parse_head_mode(head);
  }

  const json& train = section(root, "train");
  reject_unknown(train, "train.", {"lr", "epochs", "batch", "beta1", "beta2", "eps", "seed", "checkpoint_every"});
  read(train, "train.", "lr", config.train.lr);
  read_size(train, "train.", "epochs", config.train.epochs);
  read_size(train, "train.", "batch", config.train.batch);
  read(train, "train.", "beta1", config.train.beta1);
  read(train, "train.", "beta2", config.train.beta2);
  read(train, "train.", "eps", config.train.eps);
  if (train.contains("seed")) {
    std::size_t seed = 0;
    read_size(train, "train.", "seed", seed);
    config.train.seed = seed;
  }
  read_size(train, "train.", "checkpoint_every", config.checkpoint_every);

  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(detail::read_file(path), path.string());
}

void RunConfig::validate() const {
  if (data.patch == 0 || data.patch % 2 == 0) throw ConfigError("config key 'data.patch' must be odd");
  if (data.pca_dims == 0) throw ConfigError("config key 'data.pca_dims' must be at least 1");
  if (!(data.train_fraction > 0.0 && data.train_fraction < 1.0)) {
    throw ConfigError("config key 'data.train_fraction' must lie strictly between 0 and 1");
  }
  if (!(train.lr > 0.0)) throw ConfigError("config key 'train.lr' must be positive");
  if (train.batch == 0) throw ConfigError("config key 'train.batch' must be at least 1");
  train.validate();
  if (out.empty()) throw ConfigError("config key 'out' must not be empty");
}

void RunConfig::require_data() const {
  if (data.hsi.empty()) throw ConfigError("missing data path: config key 'data.hsi' is not set");
  if (data.lidar.empty()) throw ConfigError("missing data path: config key 'data.lidar' is not set");
  if (data.labels.empty()) throw ConfigError("missing data path: config key 'data.labels' is not set");
}

std::string dump_run_config(const RunConfig& c) {
  json root;
  root["out"] = c.out.string();
  root["data"] = {{"hsi", c.data.hsi.string()},
                  {"lidar", c.data.lidar.string()},
                  {"labels", c.data.labels.string()},
                  {"patch", c.data.patch},
                  {"pca_dims", c.data.pca_dims},
                  {"pca_labeled_only", c.data.pca_labeled_only},
                  {"train_fraction", c.data.train_fraction}};
  root["model"] = {{"hsi_channels", c.model.hsi_channels},
                   {"hsi_spectral_kernels", c.model.hsi_spectral_kernels},
                   {"hsi_conv2d_channels", c.model.hsi_conv2d_channels},
                   {"lidar_channels", c.model.lidar_channels},
                   {"hidden", c.model.hidden},
                   {"se_reduction", c.model.se_reduction},
                   {"head", std::string(head_mode_name(c.model.head))}};
  root["train"] = {{"lr", c.train.lr},       {"epochs", c.train.epochs}, {"batch", c.train.batch},
                   {"beta1", c.train.beta1}, {"beta2", c.train.beta2},   {"eps", c.train.eps},
                   {"seed", c.train.seed},   {"checkpoint_every", c.checkpoint_every}};
  return root.dump(2) + "\n";
}

}  // namespace lsaf
