#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "lsaf/autodiff.hpp"

namespace lsaf {

// Every op below records itself on the tape when an input requires a
// gradient. Shapes are checked eagerly and reported as DimensionError naming
// both operands.

// --- linear algebra -------------------------------------------------------

/// Matrix product. Accepts [m,k]x[k,n], [m,k]x[B,k,n] (left operand shared
/// across the batch) and [B,m,k]x[k,n] (right operand shared).
Var matmul(const Var& a, const Var& b);

// --- convolution ----------------------------------------------------------

/// Cross-correlation (no kernel flip) with zero padding.
/// input: [cin,h,w] or [n,cin,h,w]; kernels: [cout,cin,kh,kw].
Var conv2d(const Var& input, const Var& kernels, std::array<std::size_t, 2> stride = {1, 1},
           std::array<std::size_t, 2> padding = {0, 0});

/// input: [cin,d,h,w] or [n,cin,d,h,w]; kernels: [cout,cin,kd,kh,kw].
Var conv3d(const Var& input, const Var& kernels, std::array<std::size_t, 3> stride = {1, 1, 1},
           std::array<std::size_t, 3> padding = {0, 0, 0});

// --- normalization --------------------------------------------------------

enum class Mode { train, eval };

/// Running statistics of one batch-norm layer (not trained by gradients).
struct BatchNormState {
  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean(Tensor::zeros({channels})), running_var(Tensor::ones({channels})) {}
  Tensor running_mean;
  Tensor running_var;
};

struct BatchNormOptions {
  real eps = real(1e-5);
  real momentum = real(0.1);
};

/// Per-channel normalization of x: [n,c,...]. Train mode normalizes with the
/// biased batch variance and folds the unbiased one into the running stats;
/// eval mode uses the running stats and leaves state untouched.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, Mode mode,
              BatchNormOptions options = {});

// --- activations ----------------------------------------------------------

Var relu(const Var& x);
Var sigmoid(const Var& x);
/// Overflow-safe softmax along one axis (max subtracted per slice).
Var softmax(const Var& x, std::size_t axis);

// --- structural -----------------------------------------------------------

/// Permutes axes: out.shape[i] = x.shape[axes[i]].
Var transpose(const Var& x, std::vector<std::size_t> axes);
Var concat(const std::vector<Var>& xs, std::size_t axis);
Var slice(const Var& x, std::size_t axis, std::size_t start, std::size_t length);
Var reshape(const Var& x, Shape shape);

/// Elementwise with trailing-axis broadcasting: the smaller operand's axes
/// align with the trailing axes of the larger and must either match or be 1.
Var add(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& x, real factor);

// --- reductions and losses ------------------------------------------------

/// Sum of all elements, shape {1}.
Var sum(const Var& x);
Var mean(const Var& x, std::size_t axis, bool keepdim = false);

/// Mean softmax cross-entropy of logits [n,k] against 0-based targets.
Var cross_entropy(const Var& logits, std::span<const int> targets);

}  // namespace lsaf
