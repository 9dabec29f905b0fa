#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lsaf/model.hpp"
#include "lsaf/ops.hpp"
#include "model_checks.hpp"

using namespace lsaf;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.bands = 8;
  c.patch = 7;
  c.classes = 4;
  c.hsi_channels = {2, 3};
  c.hsi_spectral_kernels = {3, 3};
  c.hsi_conv2d_channels = 4;
  c.lidar_channels = {3, 4};
  c.hidden = 6;
  c.se_reduction = 2;
  return c;
}

Var C(Tensor t) { return Var::constant(std::move(t)); }

}  // namespace

// ---- shapes -----------------------------------------------------------------

TEST(ModelShapes, DefaultConfigGives64By5By5) {
  const ModelShapes s = infer_shapes(ModelConfig{});
  EXPECT_EQ(s.hsi, (FeatureShape{64, 5, 5}));
  EXPECT_EQ(s.lidar, s.hsi);
  EXPECT_EQ(s.hsi_depths, (std::vector<std::size_t>{24, 20, 18}));
}

class PatchSizes : public ::testing::TestWithParam<std::size_t> {};

TEST_P(PatchSizes, BranchesAgreeOnFeatureShape) {
  ModelConfig c;
  c.patch = GetParam();
  c.classes = 3;
  LsafModel model = init_params(c, 1);
  EXPECT_EQ(model.shapes.hsi, model.shapes.lidar);
  EXPECT_EQ(model.shapes.hsi.height, GetParam() - 6);
  const oracle::Batch b = oracle::random_batch(c, 2, 3);
  const Features f = extract_features(model, C(b.hsi), C(b.lidar), Mode::eval);
  EXPECT_EQ(f.hsi.shape(), f.lidar.shape());
  EXPECT_EQ(f.hsi.shape(), (Shape{2, 64, model.shapes.hsi.positions()}));
}

INSTANTIATE_TEST_SUITE_P(Supported, PatchSizes, ::testing::Values(9, 11, 13));

TEST(ModelShapes, BranchDisagreementFailsConstruction) {
  ModelConfig c;
  c.lidar_channels = {16, 32, 48};
  EXPECT_THROW(infer_shapes(c), ContractError);
  EXPECT_THROW(init_params(c, 0), ContractError);
  ModelConfig deeper;
  deeper.lidar_channels = {16, 32, 64, 64};
  EXPECT_THROW(init_params(deeper, 0), ContractError);
}

TEST(ModelShapes, ImpossibleGeometryIsConfigError) {
  ModelConfig even;
  even.patch = 10;
  EXPECT_THROW(infer_shapes(even), ConfigError);
  ModelConfig tiny;
  tiny.patch = 5;
  EXPECT_THROW(infer_shapes(tiny), ConfigError);
  ModelConfig shallow;
  shallow.bands = 10;
  EXPECT_THROW(infer_shapes(shallow), ConfigError);
  ModelConfig se;
  se.se_reduction = 1000;
  EXPECT_THROW(infer_shapes(se), ConfigError);
}

TEST(ModelShapes, ForwardRejectsWrongPatches) {
  LsafModel model = init_params(small_config(), 1);
  EXPECT_THROW(forward(model, C(Tensor::zeros({2, 8, 9, 9})), C(Tensor::zeros({2, 1, 7, 7})), Mode::eval),
               DimensionError);
  EXPECT_THROW(forward(model, C(Tensor::zeros({2, 8, 7, 7})), C(Tensor::zeros({3, 1, 7, 7})), Mode::eval),
               DimensionError);
}

TEST(Model, LogitsHaveOneEntryPerClass) {
  for (std::size_t k : {2u, 4u, 15u}) {
    ModelConfig c = small_config();
    c.classes = k;
    LsafModel model = init_params(c, 2);
    const oracle::Batch b = oracle::random_batch(c, 3, 4);
    EXPECT_EQ(forward(model, C(b.hsi), C(b.lidar), Mode::eval).logits.shape(), (Shape{3, k}));
  }
}

// ---- initialization ---------------------------------------------------------

TEST(Init, SameSeedIsBitIdentical) {
  LsafModel a = init_params(small_config(), 9);
  LsafModel b = init_params(small_config(), 9);
  LsafModel other = init_params(small_config(), 10);
  const auto pa = named_parameters(a), pb = named_parameters(b), po = named_parameters(other);
  ASSERT_EQ(pa.size(), pb.size());
  bool any_difference = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(pa[i].first, pb[i].first);
    EXPECT_EQ(pa[i].second.value(), pb[i].second.value()) << pa[i].first;
    any_difference |= !(pa[i].second.value() == po[i].second.value());
  }
  EXPECT_TRUE(any_difference);
}

TEST(Init, DeclaredDefaults) {
  LsafModel m = init_params(ModelConfig{}, 3);
  EXPECT_EQ(m.params.head.lambda_hsi.value()[0], 1);
  EXPECT_EQ(m.params.head.lambda_lidar.value()[0], 1);
  for (const auto& [name, v] : named_parameters(m)) {
    if (name.ends_with(".bias") || name.ends_with(".beta")) { EXPECT_EQ(v.value(), Tensor::zeros(v.shape())) << name; }
    if (name.ends_with(".gamma")) { EXPECT_EQ(v.value(), Tensor::ones(v.shape())) << name; }
  }
  for (auto& [name, buf] : named_buffers(m)) {
    if (name.ends_with("running_mean")) { EXPECT_EQ(*buf, Tensor::zeros(buf->shape())); }
    if (name.ends_with("running_var")) { EXPECT_EQ(*buf, Tensor::ones(buf->shape())); }
  }
}

TEST(Init, WeightVarianceIsTwoOverFanIn) {
  LsafModel m = init_params(ModelConfig{}, 4);
  std::size_t checked = 0;
  for (const auto& [name, v] : named_parameters(m)) {
    if (!(name.ends_with(".weight") || name.ends_with(".kernel")) || v.size() < 4000) continue;
    const Shape& s = v.shape();
    // Channel-axis and conv weights are [out, in, ...]; last-axis weights [in, out].
    const bool last_axis = name.starts_with("list.channel") || name.starts_with("list.se") || name.starts_with("head.");
    const std::size_t fan_in = last_axis ? s[0] : v.size() / s[0];
    double sum = 0, sq = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      sum += v.value()[i];
      sq += v.value()[i] * v.value()[i];
    }
    const double n = static_cast<double>(v.size());
    const double var = sq / n - (sum / n) * (sum / n);
    EXPECT_NEAR(var * fan_in / 2.0, 1.0, 0.2) << name;
    ++checked;
  }
  EXPECT_GE(checked, 8u);
}

TEST(Init, SummaryReportsParameterCount) {
  LsafModel m = init_params(small_config(), 5);
  const std::string text = summary(m);
  EXPECT_NE(text.find(std::to_string(parameter_count(m))), std::string::npos);
  std::size_t total = 0;
  for (const auto& [name, v] : named_parameters(m)) total += v.size();
  EXPECT_EQ(parameter_count(m), total);
  std::set<std::string> names;
  for (const auto& [name, v] : named_parameters(m)) EXPECT_TRUE(names.insert(name).second) << name;
}

TEST(Init, ActiveParametersFollowHeadMode) {
  ModelConfig c = small_config();
  LsafModel fusion = init_params(c, 6);
  EXPECT_EQ(active_parameters(fusion).size(), named_parameters(fusion).size());
  c.head = HeadMode::hsi_only;
  LsafModel hsi = init_params(c, 6);
  for (const auto& [name, v] : active_parameters(hsi)) {
    EXPECT_TRUE(name.starts_with("extractor.hsi.") || name.starts_with("head.hsi.")) << name;
  }
  c.head = HeadMode::lidar_only;
  LsafModel lidar = init_params(c, 6);
  for (const auto& [name, v] : active_parameters(lidar)) {
    EXPECT_TRUE(name.starts_with("extractor.lidar.") || name.starts_with("head.lidar.")) << name;
  }
}

// ---- forward behaviour --------------------------------------------------------

TEST(Model, ZeroPatchesGiveZeroFeatures) {
  LsafModel m = init_params(small_config(), 7);
  const Features f = extract_features(m, C(Tensor::zeros({3, 8, 7, 7})), C(Tensor::zeros({3, 1, 7, 7})), Mode::train);
  EXPECT_EQ(f.hsi.value(), Tensor::zeros(f.hsi.shape()));
  EXPECT_EQ(f.lidar.value(), Tensor::zeros(f.lidar.shape()));
}

TEST(Model, EvalForwardIsPure) {
  LsafModel m = init_params(ModelConfig{}, 8);
  const oracle::Batch b = oracle::random_batch(m.config, 4, 9);
  // Move the running statistics off their defaults first.
  forward(m, C(b.hsi), C(b.lidar), Mode::train);
  std::vector<Tensor> before;
  for (auto& [name, buf] : named_buffers(m)) before.push_back(*buf);
  const Tensor first = forward(m, C(b.hsi), C(b.lidar), Mode::eval).logits.value();
  const Tensor second = forward(m, C(b.hsi), C(b.lidar), Mode::eval).logits.value();
  EXPECT_EQ(first, second);
  std::size_t i = 0;
  for (auto& [name, buf] : named_buffers(m)) EXPECT_EQ(*buf, before[i++]) << name;
}

TEST(Model, EvalOutputDoesNotDependOnBatchCompanions) {
  LsafModel m = init_params(small_config(), 10);
  const oracle::Batch b = oracle::random_batch(m.config, 5, 11);
  const Tensor all = forward(m, C(b.hsi), C(b.lidar), Mode::eval).logits.value();
  Tensor one_h({1, 8, 7, 7}, std::vector<real>(b.hsi.raw() + 2 * 392, b.hsi.raw() + 3 * 392));
  Tensor one_l({1, 1, 7, 7}, std::vector<real>(b.lidar.raw() + 2 * 49, b.lidar.raw() + 3 * 49));
  const Tensor single = forward(m, C(one_h), C(one_l), Mode::eval).logits.value();
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(single[k], all[2 * 4 + k]);
}

TEST(Model, SingleBranchHeadsSkipTheOtherBranch) {
  ModelConfig c = small_config();
  c.head = HeadMode::hsi_only;
  LsafModel m = init_params(c, 12);
  const oracle::Batch b = oracle::random_batch(c, 2, 13);
  const Decision d = forward(m, C(b.hsi), C(b.lidar), Mode::eval);
  EXPECT_FALSE(d.lidar.defined());
  EXPECT_FALSE(d.fused.defined());
  EXPECT_EQ(d.logits.value(), d.hsi.value());
  // LiDAR input is not even read.
  Tensor other = b.lidar;
  other.fill(123);
  EXPECT_EQ(forward(m, C(b.hsi), C(other), Mode::eval).logits.value(), d.logits.value());
}

// ---- gradients ------------------------------------------------------------------

TEST(ModelGradient, EveryGroupOfASmallModel) {
  ModelConfig c = small_config();
  LsafModel m = init_params(c, 14);
  const oracle::Batch b = oracle::random_batch(c, 2, 15);
  for (const auto& g : oracle::model_gradcheck(m, b, 0, 1)) {
    EXPECT_LT(g.report.max_relative_error, 1e-4) << g.name << " index " << g.report.worst_index << " analytic "
                                                 << g.report.worst_analytic << " numeric " << g.report.worst_numeric;
  }
}

TEST(ModelGradient, LambdasGetNonzeroGradients) {
  LsafModel m = init_params(ModelConfig{}, 16);
  const oracle::Batch b = oracle::random_batch(m.config, 4, 17);
  backward(cross_entropy(forward(m, C(b.hsi), C(b.lidar), Mode::train).logits, b.targets));
  EXPECT_NE(m.params.head.lambda_hsi.grad()[0], 0);
  EXPECT_NE(m.params.head.lambda_lidar.grad()[0], 0);
}
