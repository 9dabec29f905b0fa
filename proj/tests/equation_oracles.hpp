#pragma once

// Straight-line evaluations of the attention and fusion equations on small
// random inputs, compared against the library's graph-based versions. Each
// *_error function returns the largest absolute deviation for one seed and is
// shared by the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "lsaf/model.hpp"
#include "oracles.hpp"

namespace oracle {

using lsaf::Dense;
using lsaf::Var;

struct Dims {
  std::size_t n, c, hw;
};

inline Dims random_dims(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 2654435761u + 17);
  return {1 + rng() % 2, 2 + rng() % 3, 1 + rng() % 5};
}

// Last-axis layer: weight [in, out], bias [out].
inline Dense random_last_axis(std::size_t in, std::size_t out, std::uint64_t seed) {
  return {Var::parameter(random_tensor({in, out}, seed)), Var::parameter(random_tensor({out}, seed + 1))};
}

// Channel-axis layer: weight [out, in], bias [out, 1].
inline Dense random_channel_axis(std::size_t in, std::size_t out, std::uint64_t seed) {
  return {Var::parameter(random_tensor({out, in}, seed)), Var::parameter(random_tensor({out, 1}, seed + 1))};
}

inline lsaf::ListParams random_list(std::size_t c, std::size_t reduction, std::uint64_t seed) {
  lsaf::ListParams p;
  p.pre_hsi = random_channel_axis(c, c, seed + 10);
  p.pre_lidar = random_channel_axis(c, c, seed + 20);
  p.pre_joint = random_channel_axis(2 * c, 2 * c, seed + 30);
  p.inner_hsi = random_last_axis(c, c, seed + 40);
  p.inner_lidar = random_last_axis(c, c, seed + 50);
  p.outer = random_last_axis(c, c, seed + 60);
  const std::size_t bottleneck = std::max<std::size_t>(1, 2 * c / reduction);
  p.squeeze = random_last_axis(2 * c, bottleneck, seed + 70);
  p.excite = random_last_axis(bottleneck, 2 * c, seed + 80);
  return p;
}

inline double w(const Dense& d, std::size_t i, std::size_t j) { return d.weight.value().at({i, j}); }
inline double b(const Dense& d, std::size_t j) { return d.bias.value()[j]; }

inline double max_deviation(const Tensor& got, const std::vector<double>& want) {
  if (got.size() != want.size()) return INFINITY;
  double worst = 0;
  for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
  return worst;
}

// X-hat = W x + b per position, X_hl from the raw concatenation.
inline double pre_transform_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const lsaf::ListParams p = random_list(d.c, 4, seed);
  const Tensor h = random_tensor({d.n, d.c, d.hw}, seed + 1), l = random_tensor({d.n, d.c, d.hw}, seed + 2);
  const auto got = lsaf::pre_transform(p, Var::constant(h), Var::constant(l));
  std::vector<double> hh, ll, jj;
  for (std::size_t s = 0; s < d.n; ++s)
    for (std::size_t o = 0; o < d.c; ++o)
      for (std::size_t q = 0; q < d.hw; ++q) {
        double vh = b(p.pre_hsi, o), vl = b(p.pre_lidar, o);
        for (std::size_t i = 0; i < d.c; ++i) {
          vh += w(p.pre_hsi, o, i) * h.at({s, i, q});
          vl += w(p.pre_lidar, o, i) * l.at({s, i, q});
        }
        hh.push_back(vh);
        ll.push_back(vl);
      }
  for (std::size_t s = 0; s < d.n; ++s)
    for (std::size_t o = 0; o < 2 * d.c; ++o)
      for (std::size_t q = 0; q < d.hw; ++q) {
        double v = b(p.pre_joint, o);
        for (std::size_t i = 0; i < 2 * d.c; ++i) {
          const double x = i < d.c ? h.at({s, i, q}) : l.at({s, i - d.c, q});
          v += w(p.pre_joint, o, i) * x;
        }
        jj.push_back(v);
      }
  return std::max({max_deviation(got.hsi.value(), hh), max_deviation(got.lidar.value(), ll),
                   max_deviation(got.joint.value(), jj)});
}

// gate[p][j] = sigmoid(sum_i (FC_h(h^T) + FC_l(l^T))[p][i] Wout[i][j] + bout[j])
inline double channel_attention_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const lsaf::ListParams p = random_list(d.c, 4, seed + 100);
  const Tensor h = random_tensor({d.n, d.c, d.hw}, seed + 3), l = random_tensor({d.n, d.c, d.hw}, seed + 4);
  const auto got = lsaf::channel_attention(p, Var::constant(h), Var::constant(l));
  std::vector<double> gate, out_h, out_l;
  for (std::size_t s = 0; s < d.n; ++s)
    for (std::size_t q = 0; q < d.hw; ++q) {
      std::vector<double> inter(d.c);
      for (std::size_t j = 0; j < d.c; ++j) {
        double v = b(p.inner_hsi, j) + b(p.inner_lidar, j);
        for (std::size_t i = 0; i < d.c; ++i) {
          v += h.at({s, i, q}) * w(p.inner_hsi, i, j);
          v += l.at({s, i, q}) * w(p.inner_lidar, i, j);
        }
        inter[j] = v;
      }
      for (std::size_t j = 0; j < d.c; ++j) {
        double v = b(p.outer, j);
        for (std::size_t i = 0; i < d.c; ++i) v += inter[i] * w(p.outer, i, j);
        const double g = sigmoid(v);
        gate.push_back(g);
        out_h.push_back(g * h.at({s, j, q}));
        out_l.push_back(g * l.at({s, j, q}));
      }
    }
  return std::max({max_deviation(got.gate.value(), gate), max_deviation(got.hsi.value(), out_h),
                   max_deviation(got.lidar.value(), out_l)});
}

// out[s][k][p] = k < c ? h[s][p][k] : l[s][p][k - c]
inline double concat_transpose_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const Tensor h = random_tensor({d.n, d.hw, d.c}, seed + 5), l = random_tensor({d.n, d.hw, d.c}, seed + 6);
  const Tensor got = lsaf::concat_transpose(Var::constant(h), Var::constant(l)).value();
  std::vector<double> want;
  for (std::size_t s = 0; s < d.n; ++s)
    for (std::size_t k = 0; k < 2 * d.c; ++k)
      for (std::size_t q = 0; q < d.hw; ++q) want.push_back(k < d.c ? h.at({s, q, k}) : l.at({s, q, k - d.c}));
  return max_deviation(got, want);
}

// squeeze = mean over positions, excitation = sigmoid(W2 relu(W1 squeeze + b1) + b2)
inline double se_block_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const std::size_t reduction = 2;
  const lsaf::ListParams p = random_list(d.c, reduction, seed + 200);
  const std::size_t ch = 2 * d.c, bottleneck = p.squeeze.weight.shape()[1];
  const Tensor x = random_tensor({d.n, ch, d.hw}, seed + 7);
  const Tensor got = lsaf::se_block(p, Var::constant(x)).value();
  std::vector<double> want;
  for (std::size_t s = 0; s < d.n; ++s) {
    std::vector<double> squeezed(ch, 0.0), hidden(bottleneck), excite(ch);
    for (std::size_t k = 0; k < ch; ++k) {
      for (std::size_t q = 0; q < d.hw; ++q) squeezed[k] += x.at({s, k, q});
      squeezed[k] /= static_cast<double>(d.hw);
    }
    for (std::size_t r = 0; r < bottleneck; ++r) {
      double v = b(p.squeeze, r);
      for (std::size_t k = 0; k < ch; ++k) v += squeezed[k] * w(p.squeeze, k, r);
      hidden[r] = std::max(v, 0.0);
    }
    for (std::size_t k = 0; k < ch; ++k) {
      double v = b(p.excite, k);
      for (std::size_t r = 0; r < bottleneck; ++r) v += hidden[r] * w(p.excite, r, k);
      excite[k] = sigmoid(v);
    }
    for (std::size_t k = 0; k < ch; ++k)
      for (std::size_t q = 0; q < d.hw; ++q) want.push_back(x.at({s, k, q}) * excite[k]);
  }
  return max_deviation(got, want);
}

// out[c][p] = a[c][p] * exp(f[c][p]) / sum_q exp(f[c][q])
inline double spatial_attention_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const Tensor a = random_tensor({d.n, 2 * d.c, d.hw}, seed + 8), f = random_tensor({d.n, 2 * d.c, d.hw}, seed + 9, -5, 5);
  const Tensor got = lsaf::spatial_attention(Var::constant(a), Var::constant(f)).value();
  std::vector<double> want;
  for (std::size_t s = 0; s < d.n; ++s)
    for (std::size_t k = 0; k < 2 * d.c; ++k) {
      double total = 0;
      for (std::size_t q = 0; q < d.hw; ++q) total += std::exp(f.at({s, k, q}));
      for (std::size_t q = 0; q < d.hw; ++q) want.push_back(a.at({s, k, q}) * std::exp(f.at({s, k, q})) / total);
    }
  return max_deviation(got, want);
}

inline std::vector<double> linear_block_reference(const lsaf::LinearBlock& block, const Tensor& x, std::size_t s) {
  const std::size_t in = x.size() / x.dim(0);
  const std::size_t hidden = block.hidden.weight.shape()[1], out = block.output.weight.shape()[1];
  std::vector<double> hid(hidden), y(out);
  for (std::size_t j = 0; j < hidden; ++j) {
    double v = b(block.hidden, j);
    for (std::size_t i = 0; i < in; ++i) v += x[s * in + i] * w(block.hidden, i, j);
    hid[j] = std::max(v, 0.0);
  }
  for (std::size_t k = 0; k < out; ++k) {
    double v = b(block.output, k);
    for (std::size_t j = 0; j < hidden; ++j) v += hid[j] * w(block.output, j, k);
    y[k] = v;
  }
  return y;
}

inline lsaf::LinearBlock random_linear_block(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed) {
  return {random_last_axis(in, hidden, seed), random_last_axis(hidden, out, seed + 2)};
}

// Y = lambda_h Y_h + lambda_l Y_l + Y_fus, each Y a flatten-FC-ReLU-FC block.
inline double decision_fusion_error(std::uint64_t seed) {
  const Dims d = random_dims(seed);
  const std::size_t classes = 2 + seed % 4, hidden = 3 + seed % 3;
  lsaf::FusionHead head;
  head.hsi = random_linear_block(d.c * d.hw, hidden, classes, seed + 300);
  head.lidar = random_linear_block(d.c * d.hw, hidden, classes, seed + 310);
  head.fused = random_linear_block(2 * d.c * d.hw, hidden, classes, seed + 320);
  head.lambda_hsi = Var::parameter(random_tensor({1}, seed + 330));
  head.lambda_lidar = Var::parameter(random_tensor({1}, seed + 340));
  const Tensor h = random_tensor({d.n, d.c, d.hw}, seed + 11), l = random_tensor({d.n, d.c, d.hw}, seed + 12);
  const Tensor f = random_tensor({d.n, 2 * d.c, d.hw}, seed + 13);
  const auto got = lsaf::decision_fusion(head, Var::constant(h), Var::constant(l), Var::constant(f));
  const double lh = head.lambda_hsi.value()[0], ll = head.lambda_lidar.value()[0];
  std::vector<double> logits, yh_all;
  for (std::size_t s = 0; s < d.n; ++s) {
    const auto yh = linear_block_reference(head.hsi, h, s);
    const auto yl = linear_block_reference(head.lidar, l, s);
    const auto yf = linear_block_reference(head.fused, f, s);
    for (std::size_t k = 0; k < classes; ++k) {
      logits.push_back(lh * yh[k] + ll * yl[k] + yf[k]);
      yh_all.push_back(yh[k]);
    }
  }
  return std::max(max_deviation(got.logits.value(), logits), max_deviation(got.hsi.value(), yh_all));
}

}  // namespace oracle
