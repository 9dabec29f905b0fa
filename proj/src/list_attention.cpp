#include <string>

#include "lsaf/model.hpp"

namespace lsaf {

namespace {

// W [out, in] applied to every position of x [n, in, p], bias [out, 1].
Var channel_dense(const Dense& d, const Var& x) { return add(matmul(d.weight, x), d.bias); }

// x [..., in] * W [in, out] + bias [out].
Var last_axis_dense(const Dense& d, const Var& x) { return add(matmul(x, d.weight), d.bias); }

void require_features(const Var& x, const char* what) {
  if (x.shape().size() != 3) {
    throw DimensionError(std::string(what) + ": expected [n, channels, positions], got " + to_string(x.shape()));
  }
}

}  // namespace

PreTransformed pre_transform(const ListParams& list, const Var& hsi, const Var& lidar) {
  require_features(hsi, "pre_transform");
  require_features(lidar, "pre_transform");
  if (hsi.shape() != lidar.shape()) {
    throw DimensionError("pre_transform: HSI features " + to_string(hsi.shape()) + " vs LiDAR features " +
                         to_string(lidar.shape()));
  }
  return {channel_dense(list.pre_hsi, hsi), channel_dense(list.pre_lidar, lidar),
          channel_dense(list.pre_joint, concat({hsi, lidar}, 1))};
}

ChannelAttention channel_attention(const ListParams& list, const Var& hsi_hat, const Var& lidar_hat) {
  require_features(hsi_hat, "channel_attention");
  if (hsi_hat.shape() != lidar_hat.shape()) {
    throw DimensionError("channel_attention: " + to_string(hsi_hat.shape()) + " vs " + to_string(lidar_hat.shape()));
  }
  const Var hsi_t = transpose(hsi_hat, {0, 2, 1});
  const Var lidar_t = transpose(lidar_hat, {0, 2, 1});
  const Var interaction = add(last_axis_dense(list.inner_hsi, hsi_t), last_axis_dense(list.inner_lidar, lidar_t));
  const Var gate = sigmoid(last_axis_dense(list.outer, interaction));
  return {mul(gate, hsi_t), mul(gate, lidar_t), gate};
}

Var concat_transpose(const Var& hsi_att, const Var& lidar_att) {
  require_features(hsi_att, "concat_transpose");
  if (hsi_att.shape() != lidar_att.shape()) {
    throw DimensionError("concat_transpose: " + to_string(hsi_att.shape()) + " vs " + to_string(lidar_att.shape()));
  }
  return transpose(concat({hsi_att, lidar_att}, 2), {0, 2, 1});
}

Var se_block(const ListParams& list, const Var& joint) {
  require_features(joint, "se_block");
  const std::size_t n = joint.shape()[0];
  const std::size_t channels = joint.shape()[1];
  const Var squeezed = mean(joint, 2);
  const Var excitation = sigmoid(last_axis_dense(list.excite, relu(last_axis_dense(list.squeeze, squeezed))));
  return mul(joint, reshape(excitation, {n, channels, 1}));
}

Var spatial_attention(const Var& joint_se, const Var& fused) {
  require_features(fused, "spatial_attention");
  if (joint_se.shape() != fused.shape()) {
    throw DimensionError("spatial_attention: " + to_string(joint_se.shape()) + " vs " + to_string(fused.shape()));
  }
  return mul(joint_se, softmax(fused, 2));
}

Var linear_block(const LinearBlock& block, const Var& features) {
  const Shape& s = features.shape();
  const std::size_t n = s[0];
  const Var flat = reshape(features, {n, features.size() / n});
  return last_axis_dense(block.output, relu(last_axis_dense(block.hidden, flat)));
}

Decision decision_fusion(const FusionHead& head, const Var& hsi, const Var& lidar, const Var& fused) {
  Decision d;
  d.hsi = linear_block(head.hsi, hsi);
  d.lidar = linear_block(head.lidar, lidar);
  d.fused = linear_block(head.fused, fused);
  d.logits = add(add(mul(d.hsi, head.lambda_hsi), mul(d.lidar, head.lambda_lidar)), d.fused);
  return d;
}

}  // namespace lsaf
