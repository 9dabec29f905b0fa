#pragma once

#include <cstdint>
#include <functional>

#include "lsaf/autodiff.hpp"

namespace lsaf {

struct GradCheckOptions {
  real step = real(1e-5);
  /// Denominator floor for the relative error, so coordinates whose true
  /// gradient is zero are compared absolutely.
  real floor = real(1e-6);
  /// 0 checks every coordinate, otherwise a seeded random subset.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  real max_relative_error = 0;
  std::size_t checked = 0;
  std::size_t worst_index = 0;
  real worst_analytic = 0;
  real worst_numeric = 0;
};

/// Compares backward() against central differences
/// (f(theta + h e_i) - f(theta - h e_i)) / 2h, coordinate by coordinate.
/// Relative error per coordinate is |a - n| / max(|a|, |n|, floor).
GradCheckReport finite_diff_check(const std::function<Var(const Var&)>& f, const Tensor& theta,
                                  GradCheckOptions options = {});

/// Same check for a parameter embedded in a larger model; `loss` must rebuild
/// its graph from the parameter's current value on every call.
GradCheckReport finite_diff_check(const std::function<Var()>& loss, Var& parameter, GradCheckOptions options = {});

}  // namespace lsaf
