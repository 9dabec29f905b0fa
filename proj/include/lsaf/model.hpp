#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsaf/ops.hpp"

namespace lsaf {

/// Which logits the network emits. The single-branch modes exist for
/// ablations; they skip the other branch and the attention module entirely.
enum class HeadMode { fusion, hsi_only, lidar_only };

struct ModelConfig {
  std::size_t bands = 30;  // spectral depth after PCA
  std::size_t patch = 11;
  std::size_t classes = 15;
  std::vector<std::size_t> hsi_channels{8, 16, 32};        // 3-D ConvBlocks
  std::vector<std::size_t> hsi_spectral_kernels{7, 5, 3};  // spectral kernel extent per 3-D block
  std::size_t hsi_conv2d_channels = 64;
  std::vector<std::size_t> lidar_channels{16, 32, 64};
  std::size_t hidden = 128;
  std::size_t se_reduction = 4;
  HeadMode head = HeadMode::fusion;
};

struct FeatureShape {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t positions() const { return height * width; }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

struct ModelShapes {
  FeatureShape hsi;
  FeatureShape lidar;
  std::vector<std::size_t> hsi_depths;  // spectral depth after each 3-D block
};

/// Layer arithmetic for a configuration. Throws ConfigError for impossible
/// geometry and ContractError when the two branches would emit feature maps of
/// different shapes.
ModelShapes infer_shapes(const ModelConfig& config);

struct ConvBlock {
  Var kernels;
  Var gamma;
  Var beta;
  BatchNormState stats;
};

/// Fully-connected layer. Channel-axis layers store weight [out, in] and bias
/// [out, 1]; last-axis layers store weight [in, out] and bias [out].
struct Dense {
  Var weight;
  Var bias;
};

struct ExtractorParams {
  std::vector<ConvBlock> hsi3d;
  ConvBlock hsi2d;
  std::vector<ConvBlock> lidar;
};

struct ListParams {
  Dense pre_hsi;    // channel axis, c -> c
  Dense pre_lidar;  // channel axis, c -> c
  Dense pre_joint;  // channel axis, 2c -> 2c
  Dense inner_hsi;  // last axis, c -> c
  Dense inner_lidar;
  Dense outer;      // last axis, c -> c; one gate serves both modalities
  Dense squeeze;    // last axis, 2c -> 2c / reduction
  Dense excite;     // last axis, 2c / reduction -> 2c
};

struct LinearBlock {
  Dense hidden;
  Dense output;
};

struct FusionHead {
  LinearBlock hsi;
  LinearBlock lidar;
  LinearBlock fused;
  Var lambda_hsi;
  Var lambda_lidar;
};

struct LsafParams {
  ExtractorParams extractor;
  ListParams list;
  FusionHead head;
};

struct LsafModel {
  ModelConfig config;
  ModelShapes shapes;
  LsafParams params;
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases, batch-norm
/// gamma 1 / beta 0, both fusion weights 1. Seed-deterministic.
LsafModel init_params(const ModelConfig& config, std::uint64_t seed);

using NamedVar = std::pair<std::string, Var>;
using NamedBuffer = std::pair<std::string, Tensor*>;

/// Trainable tensors in a fixed order.
std::vector<NamedVar> named_parameters(LsafModel& model);
/// The subset of named_parameters() that the configured head mode reaches;
/// single-branch heads leave the other branch and the attention module idle.
std::vector<NamedVar> active_parameters(LsafModel& model);
/// Batch-norm running statistics in a fixed order.
std::vector<NamedBuffer> named_buffers(LsafModel& model);
std::size_t parameter_count(LsafModel& model);
std::string summary(LsafModel& model);

// --- forward pieces ---------------------------------------------------------
// Features are batched: [n, channels, positions].

struct Features {
  Var hsi;
  Var lidar;
};

/// hsi: [n, bands, s, s], lidar: [n, 1, s, s] -> two [n, c, h*w] maps.
Features extract_features(LsafModel& model, const Var& hsi, const Var& lidar, Mode mode);
Var extract_hsi(LsafModel& model, const Var& hsi, Mode mode);
Var extract_lidar(LsafModel& model, const Var& lidar, Mode mode);

struct PreTransformed {
  Var hsi;    // FC_h applied to X_h
  Var lidar;  // FC_l applied to X_l
  Var joint;  // FC_hl applied to [X_h ; X_l], 2c channels
};

/// Channel-axis FC transforms of the raw features and their concatenation.
PreTransformed pre_transform(const ListParams& list, const Var& hsi, const Var& lidar);

struct ChannelAttention {
  Var hsi;    // [n, hw, c]
  Var lidar;  // [n, hw, c]
  Var gate;   // [n, hw, c], shared by both outputs
};

/// gate = sigmoid(FC_out(FC_h(hsi^T) + FC_l(lidar^T))); outputs gate * x^T.
ChannelAttention channel_attention(const ListParams& list, const Var& hsi_hat, const Var& lidar_hat);

/// [n, hw, c] x 2 -> concatenate channels, transpose -> [n, 2c, hw].
Var concat_transpose(const Var& hsi_att, const Var& lidar_att);

/// Squeeze-and-excitation recalibration of [n, 2c, hw].
Var se_block(const ListParams& list, const Var& joint);

/// joint_se * softmax(fused over hw, per channel).
Var spatial_attention(const Var& joint_se, const Var& fused);

/// flatten -> FC -> ReLU -> FC.
Var linear_block(const LinearBlock& block, const Var& features);

struct Decision {
  Var logits;
  Var hsi;
  Var lidar;
  Var fused;
};

/// logits = lambda_hsi * Y_h + lambda_lidar * Y_l + Y_fus.
Decision decision_fusion(const FusionHead& head, const Var& hsi, const Var& lidar, const Var& fused);

/// Full network. The returned Decision holds only the logits that the head
/// mode computes.
Decision forward(LsafModel& model, const Var& hsi, const Var& lidar, Mode mode);

}  // namespace lsaf
