#pragma once

#include <cstdint>

#include "lsaf/checkpoint.hpp"
#include "lsaf/optimizer.hpp"
#include "lsaf/patches.hpp"
#include "lsaf/pca.hpp"

namespace lsaf {

/// Everything fitted on the training scene that inference must replay:
/// spectral PCA, then per-band min-max ranges of the reduced HSI and of the
/// LiDAR raster.
struct Preprocessing {
  PcaModel pca;
  BandRange hsi_range;
  BandRange lidar_range;
};

Preprocessing fit_preprocessing(const RasterPair& pair, std::size_t pca_dims, bool labeled_only = false);

/// Returns the reduced, normalized scene; labels are copied unchanged.
RasterPair apply_preprocessing(const Preprocessing& prep, const RasterPair& pair);

/// Stored as pca.mean, pca.components, pca.explained_variance,
/// norm.hsi.min/max and norm.lidar.min/max.
void store_preprocessing(TensorTable& table, const Preprocessing& prep);
Preprocessing load_preprocessing(const TensorTable& table);

/// Optimizer moments as adam.m.<param> / adam.v.<param> plus adam.step.
void store_adam_state(TensorTable& table, const AdamState& adam, std::span<const NamedVar> params);
/// Empty state when the table holds no optimizer entries.
AdamState load_adam_state(const TensorTable& table, std::span<const NamedVar> params);

struct Dataset {
  PatchSet train;
  PatchSet test;
};

/// Patches of every labeled pixel, split per class with `train_fraction`.
Dataset build_dataset(const RasterPair& prepared, std::size_t patch, double train_fraction, std::uint64_t seed);

}  // namespace lsaf
