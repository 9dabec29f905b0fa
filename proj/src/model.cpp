#include "lsaf/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace lsaf {

namespace {

constexpr std::size_t kSpatialKernel = 3;

std::string describe(const FeatureShape& s) {
  return std::to_string(s.channels) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width);
}

class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}

  Var kaiming(Shape shape, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Tensor t(std::move(shape));
    for (auto& v : t.data()) {
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      v = static_cast<real>((2.0 * u - 1.0) * bound);
    }
    return Var::parameter(std::move(t));
  }

  ConvBlock conv_block(Shape kernel_shape) {
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < kernel_shape.size(); ++i) fan_in *= kernel_shape[i];
    const std::size_t out = kernel_shape[0];
    return {kaiming(std::move(kernel_shape), fan_in), Var::parameter(Tensor::ones({out})),
            Var::parameter(Tensor::zeros({out})), BatchNormState(out)};
  }

  Dense channel_dense(std::size_t in, std::size_t out) {
    return {kaiming({out, in}, in), Var::parameter(Tensor::zeros({out, 1}))};
  }

  Dense last_axis_dense(std::size_t in, std::size_t out) {
    return {kaiming({in, out}, in), Var::parameter(Tensor::zeros({out}))};
  }

  LinearBlock linear_block(std::size_t in, std::size_t hidden, std::size_t classes) {
    // Separate statements fix the draw order.
    Dense h = last_axis_dense(in, hidden);
    Dense o = last_axis_dense(hidden, classes);
    return {std::move(h), std::move(o)};
  }

 private:
  std::mt19937_64 rng_;
};

Var conv_block(ConvBlock& block, const Var& x, Mode mode, bool three_d, std::size_t padding) {
  const Var conv = three_d ? conv3d(x, block.kernels, {1, 1, 1}, {0, padding, padding})
                           : conv2d(x, block.kernels, {1, 1}, {padding, padding});
  return relu(batchnorm(conv, block.gamma, block.beta, block.stats, mode));
}

void add_dense(std::vector<NamedVar>& out, const std::string& name, const Dense& d) {
  out.emplace_back(name + ".weight", d.weight);
  out.emplace_back(name + ".bias", d.bias);
}

void add_block(std::vector<NamedVar>& out, const std::string& name, const ConvBlock& b) {
  out.emplace_back(name + ".kernel", b.kernels);
  out.emplace_back(name + ".gamma", b.gamma);
  out.emplace_back(name + ".beta", b.beta);
}

void add_stats(std::vector<NamedBuffer>& out, const std::string& name, ConvBlock& b) {
  out.emplace_back(name + ".running_mean", &b.stats.running_mean);
  out.emplace_back(name + ".running_var", &b.stats.running_var);
}

}  // namespace

ModelShapes infer_shapes(const ModelConfig& c) {
  if (c.hsi_channels.empty() || c.hsi_channels.size() != c.hsi_spectral_kernels.size()) {
    throw ConfigError("hsi_channels and hsi_spectral_kernels must be non-empty and of equal length");
  }
  if (c.lidar_channels.empty()) throw ConfigError("lidar_channels must be non-empty");
  if (c.patch == 0 || c.patch % 2 == 0) throw ConfigError("patch size must be odd, got " + std::to_string(c.patch));
  if (c.bands == 0 || c.classes == 0 || c.hidden == 0 || c.hsi_conv2d_channels == 0) {
    throw ConfigError("bands, classes, hidden and hsi_conv2d_channels must be positive");
  }
  for (auto w : c.hsi_channels) {
    if (w == 0) throw ConfigError("zero-width HSI block");
  }
  for (auto w : c.lidar_channels) {
    if (w == 0) throw ConfigError("zero-width LiDAR block");
  }

  ModelShapes shapes;
  std::size_t depth = c.bands;
  std::size_t extent = c.patch;
  for (std::size_t i = 0; i < c.hsi_channels.size(); ++i) {
    const std::size_t k = c.hsi_spectral_kernels[i];
    if (k == 0 || k > depth) {
      throw ConfigError("HSI block " + std::to_string(i) + ": spectral kernel " + std::to_string(k) +
                        " does not fit spectral depth " + std::to_string(depth));
    }
    if (extent < kSpatialKernel) {
      throw ConfigError("HSI block " + std::to_string(i) + ": patch " + std::to_string(c.patch) + " too small");
    }
    depth -= k - 1;
    extent -= kSpatialKernel - 1;
    shapes.hsi_depths.push_back(depth);
  }
  shapes.hsi = {c.hsi_conv2d_channels, extent, extent};

  extent = c.patch;
  for (std::size_t i = 0; i < c.lidar_channels.size(); ++i) {
    if (extent < kSpatialKernel) {
      throw ConfigError("LiDAR block " + std::to_string(i) + ": patch " + std::to_string(c.patch) + " too small");
    }
    extent -= kSpatialKernel - 1;
  }
  shapes.lidar = {c.lidar_channels.back(), extent, extent};

  if (!(shapes.hsi == shapes.lidar)) {
    throw ContractError("feature extractors disagree: HSI branch emits " + describe(shapes.hsi) +
                        ", LiDAR branch emits " + describe(shapes.lidar));
  }
  if (c.se_reduction == 0 || 2 * shapes.hsi.channels / c.se_reduction == 0) {
    throw ConfigError("SE reduction " + std::to_string(c.se_reduction) + " leaves no bottleneck units");
  }
  return shapes;
}

LsafModel init_params(const ModelConfig& config, std::uint64_t seed) {
  LsafModel model{config, infer_shapes(config), {}};
  Initializer init(seed);
  auto& ex = model.params.extractor;

  std::size_t cin = 1;
  for (std::size_t i = 0; i < config.hsi_channels.size(); ++i) {
    ex.hsi3d.push_back(init.conv_block(
        {config.hsi_channels[i], cin, config.hsi_spectral_kernels[i], kSpatialKernel, kSpatialKernel}));
    cin = config.hsi_channels[i];
  }
  ex.hsi2d = init.conv_block(
      {config.hsi_conv2d_channels, cin * model.shapes.hsi_depths.back(), kSpatialKernel, kSpatialKernel});
  cin = 1;
  for (auto width : config.lidar_channels) {
    ex.lidar.push_back(init.conv_block({width, cin, kSpatialKernel, kSpatialKernel}));
    cin = width;
  }

  const std::size_t c = model.shapes.hsi.channels;
  auto& list = model.params.list;
  list.pre_hsi = init.channel_dense(c, c);
  list.pre_lidar = init.channel_dense(c, c);
  list.pre_joint = init.channel_dense(2 * c, 2 * c);
  list.inner_hsi = init.last_axis_dense(c, c);
  list.inner_lidar = init.last_axis_dense(c, c);
  list.outer = init.last_axis_dense(c, c);
  const std::size_t bottleneck = 2 * c / config.se_reduction;
  list.squeeze = init.last_axis_dense(2 * c, bottleneck);
  list.excite = init.last_axis_dense(bottleneck, 2 * c);

  const std::size_t flat = c * model.shapes.hsi.positions();
  auto& head = model.params.head;
  head.hsi = init.linear_block(flat, config.hidden, config.classes);
  head.lidar = init.linear_block(flat, config.hidden, config.classes);
  head.fused = init.linear_block(2 * flat, config.hidden, config.classes);
  head.lambda_hsi = Var::parameter(Tensor::scalar(1));
  head.lambda_lidar = Var::parameter(Tensor::scalar(1));
  return model;
}

std::vector<NamedVar> named_parameters(LsafModel& model) {
  std::vector<NamedVar> out;
  auto& ex = model.params.extractor;
  for (std::size_t i = 0; i < ex.hsi3d.size(); ++i) add_block(out, "extractor.hsi.conv3d." + std::to_string(i), ex.hsi3d[i]);
  add_block(out, "extractor.hsi.conv2d", ex.hsi2d);
  for (std::size_t i = 0; i < ex.lidar.size(); ++i) add_block(out, "extractor.lidar.conv2d." + std::to_string(i), ex.lidar[i]);
  auto& list = model.params.list;
  add_dense(out, "list.pre.hsi", list.pre_hsi);
  add_dense(out, "list.pre.lidar", list.pre_lidar);
  add_dense(out, "list.pre.joint", list.pre_joint);
  add_dense(out, "list.channel.inner_hsi", list.inner_hsi);
  add_dense(out, "list.channel.inner_lidar", list.inner_lidar);
  add_dense(out, "list.channel.outer", list.outer);
  add_dense(out, "list.se.squeeze", list.squeeze);
  add_dense(out, "list.se.excite", list.excite);
  auto& head = model.params.head;
  add_dense(out, "head.hsi.hidden", head.hsi.hidden);
  add_dense(out, "head.hsi.output", head.hsi.output);
  add_dense(out, "head.lidar.hidden", head.lidar.hidden);
  add_dense(out, "head.lidar.output", head.lidar.output);
  add_dense(out, "head.fused.hidden", head.fused.hidden);
  add_dense(out, "head.fused.output", head.fused.output);
  out.emplace_back("head.lambda_hsi", head.lambda_hsi);
  out.emplace_back("head.lambda_lidar", head.lambda_lidar);
  return out;
}

std::vector<NamedVar> active_parameters(LsafModel& model) {
  auto all = named_parameters(model);
  if (model.config.head == HeadMode::fusion) return all;
  const std::string branch = model.config.head == HeadMode::hsi_only ? "hsi." : "lidar.";
  std::vector<NamedVar> out;
  for (auto& entry : all) {
    const std::string& name = entry.first;
    if (name.starts_with("extractor." + branch) || name.starts_with("head." + branch)) out.push_back(std::move(entry));
  }
  return out;
}

std::vector<NamedBuffer> named_buffers(LsafModel& model) {
  std::vector<NamedBuffer> out;
  auto& ex = model.params.extractor;
  for (std::size_t i = 0; i < ex.hsi3d.size(); ++i) add_stats(out, "extractor.hsi.conv3d." + std::to_string(i), ex.hsi3d[i]);
  add_stats(out, "extractor.hsi.conv2d", ex.hsi2d);
  for (std::size_t i = 0; i < ex.lidar.size(); ++i) add_stats(out, "extractor.lidar.conv2d." + std::to_string(i), ex.lidar[i]);
  return out;
}

std::size_t parameter_count(LsafModel& model) {
  std::size_t total = 0;
  for (const auto& [name, v] : named_parameters(model)) total += v.size();
  return total;
}

std::string summary(LsafModel& model) {
  std::ostringstream os;
  const auto& s = model.shapes;
  os << "LSAF model: " << model.config.classes << " classes, patch " << model.config.patch << ", "
     << model.config.bands << " spectral bands\n";
  os << "  feature maps: HSI " << describe(s.hsi) << ", LiDAR " << describe(s.lidar) << "\n";
  for (const auto& [name, v] : named_parameters(model)) {
    os << "  " << name << " " << to_string(v.shape()) << "\n";
  }
  os << "  trainable parameters: " << parameter_count(model) << "\n";
  return os.str();
}

Var extract_hsi(LsafModel& model, const Var& hsi, Mode mode) {
  const auto& c = model.config;
  const Shape& s = hsi.shape();
  if (s.size() != 4 || s[1] != c.bands || s[2] != c.patch || s[3] != c.patch) {
    throw DimensionError("HSI patches must be [n," + std::to_string(c.bands) + "," + std::to_string(c.patch) + "," +
                         std::to_string(c.patch) + "], got " + to_string(s));
  }
  const std::size_t n = s[0];
  auto& ex = model.params.extractor;
  Var x = reshape(hsi, {n, 1, c.bands, c.patch, c.patch});
  for (auto& block : ex.hsi3d) x = conv_block(block, x, mode, true, 0);
  const Shape& y = x.shape();
  x = reshape(x, {n, y[1] * y[2], y[3], y[4]});
  x = conv_block(ex.hsi2d, x, mode, false, 1);
  return reshape(x, {n, model.shapes.hsi.channels, model.shapes.hsi.positions()});
}

Var extract_lidar(LsafModel& model, const Var& lidar, Mode mode) {
  const auto& c = model.config;
  const Shape& s = lidar.shape();
  if (s.size() != 4 || s[1] != 1 || s[2] != c.patch || s[3] != c.patch) {
    throw DimensionError("LiDAR patches must be [n,1," + std::to_string(c.patch) + "," + std::to_string(c.patch) +
                         "], got " + to_string(s));
  }
  Var x = lidar;
  for (auto& block : model.params.extractor.lidar) x = conv_block(block, x, mode, false, 0);
  return reshape(x, {s[0], model.shapes.lidar.channels, model.shapes.lidar.positions()});
}

Features extract_features(LsafModel& model, const Var& hsi, const Var& lidar, Mode mode) {
  if (hsi.shape().at(0) != lidar.shape().at(0)) {
    throw DimensionError("HSI and LiDAR batches differ: " + to_string(hsi.shape()) + " vs " + to_string(lidar.shape()));
  }
  return {extract_hsi(model, hsi, mode), extract_lidar(model, lidar, mode)};
}

Decision forward(LsafModel& model, const Var& hsi, const Var& lidar, Mode mode) {
  const auto& head = model.params.head;
  switch (model.config.head) {
    case HeadMode::hsi_only: {
      Decision d;
      d.hsi = linear_block(head.hsi, extract_hsi(model, hsi, mode));
      d.logits = d.hsi;
      return d;
    }
    case HeadMode::lidar_only: {
      Decision d;
      d.lidar = linear_block(head.lidar, extract_lidar(model, lidar, mode));
      d.logits = d.lidar;
      return d;
    }
    case HeadMode::fusion:
      break;
  }
  const Features f = extract_features(model, hsi, lidar, mode);
  const auto& list = model.params.list;
  const PreTransformed pre = pre_transform(list, f.hsi, f.lidar);
  const ChannelAttention att = channel_attention(list, pre.hsi, pre.lidar);
  const Var fused_channels = concat_transpose(att.hsi, att.lidar);
  const Var joint = se_block(list, pre.joint);
  const Var fused = spatial_attention(joint, fused_channels);
  return decision_fusion(head, f.hsi, f.lidar, fused);
}

}  // namespace lsaf
