#include "lsaf/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "lsaf/errors.hpp"

namespace lsaf {

namespace {

std::vector<int> zero_based(std::span<const int> labels, std::size_t classes) {
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || static_cast<std::size_t>(labels[i]) > classes) {
      throw ContractError("label " + std::to_string(labels[i]) + " outside 1.." + std::to_string(classes));
    }
    out[i] = labels[i] - 1;
  }
  return out;
}

std::string first_non_finite(std::span<const NamedVar> params, bool gradients) {
  for (const auto& [name, p] : params) {
    if (gradients) {
      if (p.has_grad() && !p.grad().all_finite()) return name;
    } else if (!p.value().all_finite()) {
      return name;
    }
  }
  return {};
}

[[noreturn]] void numeric_failure(const std::string& what, std::size_t epoch, std::size_t batch,
                                  const std::string& culprit) {
  throw NumericError(what + " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) +
                     "; offending parameter group: " + (culprit.empty() ? "none (input or activation)" : culprit));
}

std::size_t argmax_row(const Tensor& logits, std::size_t row) {
  const std::size_t k = logits.dim(1);
  const real* p = logits.raw() + row * k;
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (p[j] > p[best]) best = j;
  }
  return best;
}

}  // namespace

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch)};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Tensor gather_samples(const Tensor& source, std::span<const std::size_t> indices) {
  if (indices.empty()) throw ContractError("gather_samples: empty index list");
  Shape shape = source.shape();
  const std::size_t n = shape[0];
  const std::size_t stride = source.size() / n;
  shape[0] = indices.size();
  Tensor out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= n) throw ContractError("gather_samples: index " + std::to_string(indices[i]) + " out of range");
    std::copy_n(source.raw() + indices[i] * stride, stride, out.raw() + i * stride);
  }
  return out;
}

std::vector<EpochRecord> train(LsafModel& model, AdamState& adam, const PatchSet& set, const TrainConfig& config,
                               const TrainCallbacks& callbacks, std::size_t first_epoch) {
  config.validate();
  if (set.empty()) throw ConfigError("training set is empty");
  const std::vector<int> targets = zero_based(set.labels, model.config.classes);
  const auto params = active_parameters(model);

  std::vector<EpochRecord> trace;
  for (std::size_t epoch = first_epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto order = epoch_order(set.size(), config.seed, epoch);
    double loss_sum = 0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch, ++batch_index) {
      const std::size_t count = std::min(config.batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      const Var hsi = Var::constant(gather_samples(set.hsi, idx));
      const Var lidar = Var::constant(gather_samples(set.lidar, idx));
      std::vector<int> batch_targets(count);
      for (std::size_t i = 0; i < count; ++i) batch_targets[i] = targets[idx[i]];

      for (const auto& [name, p] : params) Var(p).clear_grad();
      const Decision out = forward(model, hsi, lidar, Mode::train);
      const Var loss = cross_entropy(out.logits, batch_targets);
      const double value = static_cast<double>(loss.value()[0]);
      if (!std::isfinite(value)) numeric_failure("non-finite loss", epoch, batch_index, first_non_finite(params, false));
      backward(loss);
      if (const auto bad = first_non_finite(params, true); !bad.empty()) {
        numeric_failure("non-finite gradient", epoch, batch_index, bad);
      }
      adam_step(adam, params, config);

      loss_sum += value * static_cast<double>(count);
      const Tensor& logits = out.logits.value();
      for (std::size_t i = 0; i < count; ++i) {
        if (static_cast<int>(argmax_row(logits, i)) == batch_targets[i]) ++correct;
      }
    }
    const double n = static_cast<double>(set.size());
    trace.push_back({epoch, loss_sum / n, 100.0 * static_cast<double>(correct) / n});
    const bool keep_going = !callbacks.on_epoch || callbacks.on_epoch(trace.back());
    if (callbacks.on_checkpoint && callbacks.checkpoint_every > 0 &&
        (epoch % callbacks.checkpoint_every == 0 || epoch == config.epochs || !keep_going)) {
      callbacks.on_checkpoint(epoch);
    }
    if (!keep_going) break;
  }
  return trace;
}

std::string loss_trace_csv(std::span<const EpochRecord> trace) {
  std::string out = "epoch,loss,accuracy\n";
  char buf[128];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.loss, r.accuracy);
    out += buf;
  }
  return out;
}

Tensor predict_logits(LsafModel& model, const Tensor& hsi, const Tensor& lidar, std::size_t chunk) {
  if (chunk == 0) throw ConfigError("prediction chunk must be positive");
  if (hsi.rank() == 0 || lidar.rank() == 0 || hsi.dim(0) != lidar.dim(0)) {
    throw DimensionError("predict: HSI and LiDAR patch counts differ");
  }
  NoGradGuard no_grad;
  const std::size_t n = hsi.dim(0);
  const std::size_t k = model.config.classes;
  Tensor logits({n, k});
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t count = std::min(chunk, n - start);
    idx.resize(count);
    for (std::size_t i = 0; i < count; ++i) idx[i] = start + i;
    const Decision out = forward(model, Var::constant(gather_samples(hsi, idx)),
                                 Var::constant(gather_samples(lidar, idx)), Mode::eval);
    std::copy_n(out.logits.value().raw(), count * k, logits.raw() + start * k);
  }
  return logits;
}

std::vector<int> predict(LsafModel& model, const Tensor& hsi, const Tensor& lidar, std::size_t chunk) {
  const Tensor logits = predict_logits(model, hsi, lidar, chunk);
  std::vector<int> out(logits.dim(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(argmax_row(logits, i)) + 1;
  return out;
}

MetricsReport evaluate(LsafModel& model, const PatchSet& set, std::size_t chunk) {
  if (set.empty()) throw ConfigError("evaluation set is empty");
  zero_based(set.labels, model.config.classes);
  const auto predicted = predict(model, set.hsi, set.lidar, chunk);
  return metrics_from_predictions(set.labels, predicted, model.config.classes);
}

}  // namespace lsaf
