#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lsaf/model.hpp"

namespace lsaf {

/// Optimizer and loop settings. lr, epochs and batch default to the values
/// the method was published with; betas and eps are the usual Adam defaults.
struct TrainConfig {
  double lr = 1e-4;
  std::size_t epochs = 110;
  std::size_t batch = 128;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;

  /// Throws ConfigError for lr < 0, batch 0 or betas outside [0,1).
  void validate() const;
};

struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update over `params`, reading each gradient from
/// the parameter. Every parameter must hold a gradient (ContractError
/// otherwise); moments are allocated on the first call.
void adam_step(AdamState& state, std::span<const NamedVar> params, const TrainConfig& config);

}  // namespace lsaf
