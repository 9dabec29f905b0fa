#include "lsaf/optimizer.hpp"

#include <cmath>
#include <string>

namespace lsaf {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite non-negative number");
  if (batch == 0) throw ConfigError("batch must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
}

void adam_step(AdamState& state, std::span<const NamedVar> params, const TrainConfig& config) {
  for (const auto& [name, p] : params) {
    if (!p.has_grad()) throw ContractError("adam_step: parameter '" + name + "' has no gradient");
  }
  if (state.first_moment.empty()) {
    for (const auto& [name, p] : params) {
      state.first_moment.push_back(Tensor::zeros(p.shape()));
      state.second_moment.push_back(Tensor::zeros(p.shape()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(state.first_moment[i].shape(), params[i].second.shape(), "adam_step moment");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  const real b1 = static_cast<real>(config.beta1);
  const real b2 = static_cast<real>(config.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Var p = params[i].second;
    const Tensor& g = p.grad();
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    Tensor& w = p.mutable_value();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = b1 * m[j] + (real(1) - b1) * g[j];
      v[j] = b2 * v[j] + (real(1) - b2) * g[j] * g[j];
      const double m_hat = static_cast<double>(m[j]) / correction1;
      const double v_hat = static_cast<double>(v[j]) / correction2;
      w[j] -= static_cast<real>(config.lr * m_hat / (std::sqrt(v_hat) + config.eps));
    }
  }
}

}  // namespace lsaf
