#pragma once

#include <vector>

#include "lsaf/raster.hpp"
#include "lsaf/tensor.hpp"

namespace lsaf {

/// Spectral PCA fitted on the band covariance of an HSI cube.
struct PcaModel {
  std::vector<real> mean;                 // [bands]
  Tensor components;                      // [bands, r], orthonormal columns
  std::vector<real> explained_variance;   // [r], non-increasing

  std::size_t bands() const { return mean.size(); }
  std::size_t rank() const { return explained_variance.size(); }
};

/// Eigendecomposition of the sample covariance (divisor n-1) of the pixel
/// spectra. With `mask`, only pixels whose label is non-zero are used. Each
/// component is signed so that its largest-magnitude entry is positive.
PcaModel pca_fit(const Tensor& hsi, std::size_t components, const LabelMap* mask = nullptr);

/// Per-pixel projection (x - mean) * components: [bands,H,W] -> [r,H,W].
Tensor pca_transform(const PcaModel& model, const Tensor& hsi);

/// Back-projection mean + components * y: [r,H,W] -> [bands,H,W].
Tensor pca_inverse(const PcaModel& model, const Tensor& reduced);

}  // namespace lsaf
