#include <cmath>
#include <string>

#include "lsaf/ops.hpp"

namespace lsaf {

using detail::accumulate_grad;
using detail::make_result;

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, BatchNormState& state, Mode mode,
              BatchNormOptions options) {
  const Shape& shape = x.shape();
  if (shape.size() < 2) throw DimensionError("batchnorm expects [n,c,...], got " + to_string(shape));
  const std::size_t n = shape[0];
  const std::size_t channels = shape[1];
  std::size_t spatial = 1;
  for (std::size_t i = 2; i < shape.size(); ++i) spatial *= shape[i];
  const Shape channel_shape{channels};
  require_same_shape(gamma.shape(), channel_shape, "batchnorm gamma");
  require_same_shape(beta.shape(), channel_shape, "batchnorm beta");
  require_same_shape(state.running_mean.shape(), channel_shape, "batchnorm running mean");
  require_same_shape(state.running_var.shape(), channel_shape, "batchnorm running variance");
  if (!(options.eps > real(0))) throw ConfigError("batchnorm eps must be positive");

  const Tensor& v = x.value();
  const std::size_t count = n * spatial;
  auto at = [&](std::size_t s, std::size_t c, std::size_t p) { return (s * channels + c) * spatial + p; };

  Tensor mean_c(channel_shape);
  Tensor var_c(channel_shape);
  if (mode == Mode::train) {
    for (std::size_t c = 0; c < channels; ++c) {
      real total = 0;
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t p = 0; p < spatial; ++p) total += v[at(s, c, p)];
      }
      const real mu = total / static_cast<real>(count);
      real sq = 0;
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t p = 0; p < spatial; ++p) {
          const real d = v[at(s, c, p)] - mu;
          sq += d * d;
        }
      }
      mean_c[c] = mu;
      var_c[c] = sq / static_cast<real>(count);
      const real unbiased = count > 1 ? sq / static_cast<real>(count - 1) : var_c[c];
      state.running_mean[c] = (real(1) - options.momentum) * state.running_mean[c] + options.momentum * mu;
      state.running_var[c] = (real(1) - options.momentum) * state.running_var[c] + options.momentum * unbiased;
    }
  } else {
    mean_c = state.running_mean;
    var_c = state.running_var;
  }

  auto inv_std = std::make_shared<Tensor>(channel_shape);
  for (std::size_t c = 0; c < channels; ++c) (*inv_std)[c] = real(1) / std::sqrt(var_c[c] + options.eps);

  auto normalized = std::make_shared<Tensor>(shape);
  Tensor out(shape);
  const Tensor& g = gamma.value();
  const Tensor& b = beta.value();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t p = 0; p < spatial; ++p) {
        const std::size_t i = at(s, c, p);
        const real xhat = (v[i] - mean_c[c]) * (*inv_std)[c];
        (*normalized)[i] = xhat;
        out[i] = g[c] * xhat + b[c];
      }
    }
  }

  return make_result(std::move(out), {x, gamma, beta},
                     [x, gamma, beta, mode, normalized, inv_std, n, channels, spatial, count](const Tensor& dy) {
    auto at = [&](std::size_t s, std::size_t c, std::size_t p) { return (s * channels + c) * spatial + p; };
    const Tensor& xhat = *normalized;
    Tensor sum_dy = Tensor::zeros({channels});
    Tensor sum_dy_xhat = Tensor::zeros({channels});
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t p = 0; p < spatial; ++p) {
          const std::size_t i = at(s, c, p);
          sum_dy[c] += dy[i];
          sum_dy_xhat[c] += dy[i] * xhat[i];
        }
      }
    }
    if (x.requires_grad()) {
      const Tensor& gm = gamma.value();
      Tensor dx(x.shape());
      const real m = static_cast<real>(count);
      for (std::size_t c = 0; c < channels; ++c) {
        const real k = gm[c] * (*inv_std)[c];
        for (std::size_t s = 0; s < n; ++s) {
          for (std::size_t p = 0; p < spatial; ++p) {
            const std::size_t i = at(s, c, p);
            if (mode == Mode::train) {
              dx[i] = k * (dy[i] - sum_dy[c] / m - xhat[i] * sum_dy_xhat[c] / m);
            } else {
              dx[i] = k * dy[i];
            }
          }
        }
      }
      accumulate_grad(x, std::move(dx));
    }
    accumulate_grad(gamma, std::move(sum_dy_xhat));
    accumulate_grad(beta, std::move(sum_dy));
  });
}

}  // namespace lsaf
