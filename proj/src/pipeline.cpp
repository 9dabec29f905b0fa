#include "lsaf/pipeline.hpp"

#include "lsaf/errors.hpp"

namespace lsaf {

namespace {

Tensor vector_tensor(const std::vector<real>& v) { return Tensor({v.size()}, v); }

const Tensor& require_tensor(const TensorTable& table, const std::string& name) {
  const Tensor* t = find_tensor(table, name);
  if (t == nullptr) throw FormatError("checkpoint is missing tensor '" + name + "'");
  return *t;
}

std::vector<real> as_vector(const Tensor& t, const std::string& name, std::size_t expected) {
  if (t.rank() != 1 || t.size() != expected) {
    throw FormatError("checkpoint tensor '" + name + "' has shape " + to_string(t.shape()) + ", expected [" +
                      std::to_string(expected) + "]");
  }
  return {t.data().begin(), t.data().end()};
}

}  // namespace

Preprocessing fit_preprocessing(const RasterPair& pair, std::size_t pca_dims, bool labeled_only) {
  pair.validate();
  Preprocessing prep;
  prep.pca = pca_fit(pair.hsi, pca_dims, labeled_only ? &pair.labels : nullptr);
  prep.hsi_range = band_range(pca_transform(prep.pca, pair.hsi));
  prep.lidar_range = band_range(pair.lidar);
  return prep;
}

RasterPair apply_preprocessing(const Preprocessing& prep, const RasterPair& pair) {
  pair.validate();
  RasterPair out;
  out.hsi = normalize(pca_transform(prep.pca, pair.hsi), prep.hsi_range);
  out.lidar = normalize(pair.lidar, prep.lidar_range);
  out.labels = pair.labels;
  return out;
}

void store_preprocessing(TensorTable& table, const Preprocessing& prep) {
  table.emplace_back("pca.mean", vector_tensor(prep.pca.mean));
  table.emplace_back("pca.components", prep.pca.components);
  table.emplace_back("pca.explained_variance", vector_tensor(prep.pca.explained_variance));
  table.emplace_back("norm.hsi.min", vector_tensor(prep.hsi_range.min));
  table.emplace_back("norm.hsi.max", vector_tensor(prep.hsi_range.max));
  table.emplace_back("norm.lidar.min", vector_tensor(prep.lidar_range.min));
  table.emplace_back("norm.lidar.max", vector_tensor(prep.lidar_range.max));
}

Preprocessing load_preprocessing(const TensorTable& table) {
  Preprocessing prep;
  const Tensor& components = require_tensor(table, "pca.components");
  if (components.rank() != 2) throw FormatError("checkpoint tensor 'pca.components' must be a matrix");
  const std::size_t bands = components.dim(0);
  const std::size_t rank = components.dim(1);
  prep.pca.components = components;
  prep.pca.mean = as_vector(require_tensor(table, "pca.mean"), "pca.mean", bands);
  prep.pca.explained_variance =
      as_vector(require_tensor(table, "pca.explained_variance"), "pca.explained_variance", rank);
  prep.hsi_range.min = as_vector(require_tensor(table, "norm.hsi.min"), "norm.hsi.min", rank);
  prep.hsi_range.max = as_vector(require_tensor(table, "norm.hsi.max"), "norm.hsi.max", rank);
  prep.lidar_range.min = as_vector(require_tensor(table, "norm.lidar.min"), "norm.lidar.min", 1);
  prep.lidar_range.max = as_vector(require_tensor(table, "norm.lidar.max"), "norm.lidar.max", 1);
  return prep;
}

void store_adam_state(TensorTable& table, const AdamState& adam, std::span<const NamedVar> params) {
  table.emplace_back("adam.step", Tensor::scalar(static_cast<real>(adam.step)));
  if (adam.first_moment.empty()) return;
  if (adam.first_moment.size() != params.size()) throw ContractError("optimizer state does not match parameters");
  for (std::size_t i = 0; i < params.size(); ++i) {
    table.emplace_back("adam.m." + params[i].first, adam.first_moment[i]);
    table.emplace_back("adam.v." + params[i].first, adam.second_moment[i]);
  }
}

AdamState load_adam_state(const TensorTable& table, std::span<const NamedVar> params) {
  AdamState adam;
  const Tensor* step = find_tensor(table, "adam.step");
  if (step == nullptr) return adam;
  adam.step = static_cast<std::uint64_t>(step->data()[0]);
  if (find_tensor(table, "adam.m." + params.front().first) == nullptr) return adam;
  for (const auto& [name, p] : params) {
    const Tensor& m = require_tensor(table, "adam.m." + name);
    const Tensor& v = require_tensor(table, "adam.v." + name);
    if (m.shape() != p.shape() || v.shape() != p.shape()) {
      throw FormatError("checkpoint optimizer state for '" + name + "' does not match the parameter shape");
    }
    adam.first_moment.push_back(m);
    adam.second_moment.push_back(v);
  }
  return adam;
}

Dataset build_dataset(const RasterPair& prepared, std::size_t patch, double train_fraction, std::uint64_t seed) {
  const PatchSet all = extract_patches(prepared, patch);
  if (all.empty()) throw ConfigError("scene has no labeled pixels");
  auto [train, test] = split(all, train_fraction, seed);
  return {std::move(train), std::move(test)};
}

}  // namespace lsaf
