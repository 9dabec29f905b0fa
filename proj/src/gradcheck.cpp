#include "lsaf/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lsaf {

namespace {

std::vector<std::size_t> coordinates(std::size_t size, const GradCheckOptions& options) {
  std::vector<std::size_t> idx(size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (options.max_coordinates == 0 || options.max_coordinates >= size) return idx;
  std::mt19937_64 rng(options.seed);
  for (std::size_t i = 0; i < options.max_coordinates; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (size - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(options.max_coordinates);
  std::sort(idx.begin(), idx.end());
  return idx;
}

real scalar_of(const Var& v) {
  if (v.size() != 1) throw ContractError("finite_diff_check: objective is not scalar, shape " + to_string(v.shape()));
  return v.value()[0];
}

}  // namespace

GradCheckReport finite_diff_check(const std::function<Var()>& loss, Var& parameter, GradCheckOptions options) {
  if (!(options.step > real(0))) throw ConfigError("finite_diff_check: step must be positive");
  if (!parameter.requires_grad()) throw ContractError("finite_diff_check: Var is not a parameter");

  parameter.zero_grad();
  backward(loss());
  const Tensor analytic = parameter.grad();

  GradCheckReport report;
  Tensor& theta = parameter.mutable_value();
  NoGradGuard no_grad;
  for (std::size_t i : coordinates(theta.size(), options)) {
    const real saved = theta[i];
    theta[i] = saved + options.step;
    const real up = scalar_of(loss());
    theta[i] = saved - options.step;
    const real down = scalar_of(loss());
    theta[i] = saved;

    const real numeric = (up - down) / (real(2) * options.step);
    const real a = analytic[i];
    const real denom = std::max({std::abs(a), std::abs(numeric), options.floor});
    const real err = std::abs(a - numeric) / denom;
    ++report.checked;
    if (err > report.max_relative_error || report.checked == 1) {
      report.max_relative_error = err;
      report.worst_index = i;
      report.worst_analytic = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

GradCheckReport finite_diff_check(const std::function<Var(const Var&)>& f, const Tensor& theta,
                                  GradCheckOptions options) {
  Var parameter = Var::parameter(theta);
  return finite_diff_check([&] { return f(parameter); }, parameter, options);
}

}  // namespace lsaf
