#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lsaf/metrics.hpp"
#include "lsaf/optimizer.hpp"
#include "lsaf/patches.hpp"

namespace lsaf {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0;        // sample-weighted mean cross-entropy over the epoch
  double accuracy = 0;    // train-mode accuracy of the same batches, percent
};

struct TrainCallbacks {
  /// Called after every epoch; returning false ends training after it.
  std::function<bool(const EpochRecord&)> on_epoch;
  /// Called with the completed epoch count every `checkpoint_every` epochs.
  std::function<void(std::size_t)> on_checkpoint;
  std::size_t checkpoint_every = 0;
};

/// Sample order for one epoch: Fisher-Yates driven by a generator seeded
/// from (seed, epoch), so any epoch can be replayed in isolation.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

/// Copies the samples at `indices` from a [n, ...] tensor.
Tensor gather_samples(const Tensor& source, std::span<const std::size_t> indices);

/// Mini-batch Adam on softmax cross-entropy, epochs first_epoch+1 ..
/// config.epochs. Throws NumericError naming the epoch, batch and offending
/// parameter when the loss or a gradient is not finite.
std::vector<EpochRecord> train(LsafModel& model, AdamState& adam, const PatchSet& set, const TrainConfig& config,
                               const TrainCallbacks& callbacks = {}, std::size_t first_epoch = 0);

/// epoch,loss,accuracy rows with 17 significant digits.
std::string loss_trace_csv(std::span<const EpochRecord> trace);

/// Eval-mode logits for [n, ...] patches, computed in chunks.
Tensor predict_logits(LsafModel& model, const Tensor& hsi, const Tensor& lidar, std::size_t chunk = 128);

/// 1-based argmax class per sample; ties go to the lower class.
std::vector<int> predict(LsafModel& model, const Tensor& hsi, const Tensor& lidar, std::size_t chunk = 128);

MetricsReport evaluate(LsafModel& model, const PatchSet& set, std::size_t chunk = 128);

}  // namespace lsaf
