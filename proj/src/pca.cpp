#define EIGEN_DONT_PARALLELIZE
#include "lsaf/pca.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace lsaf {

PcaModel pca_fit(const Tensor& hsi, std::size_t components, const LabelMap* mask) {
  if (hsi.rank() != 3) throw DimensionError("pca_fit expects [bands,H,W], got " + to_string(hsi.shape()));
  const std::size_t bands = hsi.dim(0);
  const std::size_t pixels = hsi.dim(1) * hsi.dim(2);
  if (components == 0 || components > bands) {
    throw ConfigError("pca_fit: requested " + std::to_string(components) + " components from " +
                      std::to_string(bands) + " bands");
  }
  if (mask != nullptr && (mask->height != hsi.dim(1) || mask->width != hsi.dim(2))) {
    throw RegistrationError("pca_fit: label mask does not match the HSI extent");
  }

  std::vector<std::size_t> used;
  used.reserve(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    if (mask == nullptr || mask->values[p] != 0) used.push_back(p);
  }
  if (used.empty()) throw ConfigError("pca_fit: no pixels to fit");

  Eigen::MatrixXd samples(static_cast<Eigen::Index>(used.size()), static_cast<Eigen::Index>(bands));
  for (std::size_t b = 0; b < bands; ++b) {
    const real* band = hsi.raw() + b * pixels;
    for (std::size_t i = 0; i < used.size(); ++i) {
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) = static_cast<double>(band[used[i]]);
    }
  }
  const Eigen::RowVectorXd mu = samples.colwise().mean();
  samples.rowwise() -= mu;
  const double divisor = used.size() > 1 ? static_cast<double>(used.size() - 1) : 1.0;
  const Eigen::MatrixXd covariance = (samples.transpose() * samples) / divisor;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) throw NumericError("pca_fit: eigendecomposition failed");
  const Eigen::VectorXd& values = solver.eigenvalues();  // ascending
  const Eigen::MatrixXd& vectors = solver.eigenvectors();

  PcaModel model;
  model.mean.resize(bands);
  for (std::size_t b = 0; b < bands; ++b) model.mean[b] = static_cast<real>(mu(static_cast<Eigen::Index>(b)));
  model.components = Tensor({bands, components});
  model.explained_variance.resize(components);
  for (std::size_t j = 0; j < components; ++j) {
    const auto col = static_cast<Eigen::Index>(bands - 1 - j);
    Eigen::Index peak = 0;
    for (Eigen::Index b = 1; b < static_cast<Eigen::Index>(bands); ++b) {
      if (std::abs(vectors(b, col)) > std::abs(vectors(peak, col))) peak = b;
    }
    const double sign = vectors(peak, col) < 0 ? -1.0 : 1.0;
    for (std::size_t b = 0; b < bands; ++b) {
      model.components[b * components + j] = static_cast<real>(sign * vectors(static_cast<Eigen::Index>(b), col));
    }
    // Round-off can push null-space eigenvalues slightly negative.
    model.explained_variance[j] = static_cast<real>(std::max(values(col), 0.0));
  }
  return model;
}

Tensor pca_transform(const PcaModel& model, const Tensor& hsi) {
  if (hsi.rank() != 3 || hsi.dim(0) != model.bands()) {
    throw DimensionError("pca_transform: model has " + std::to_string(model.bands()) + " bands, raster is " +
                         to_string(hsi.shape()));
  }
  const std::size_t bands = model.bands();
  const std::size_t r = model.rank();
  const std::size_t pixels = hsi.dim(1) * hsi.dim(2);
  Tensor out = Tensor::zeros({r, hsi.dim(1), hsi.dim(2)});
  std::vector<real> centered(pixels);
  for (std::size_t b = 0; b < bands; ++b) {
    const real* band = hsi.raw() + b * pixels;
    for (std::size_t p = 0; p < pixels; ++p) centered[p] = band[p] - model.mean[b];
    for (std::size_t j = 0; j < r; ++j) {
      const real w = model.components[b * r + j];
      real* dst = out.raw() + j * pixels;
      for (std::size_t p = 0; p < pixels; ++p) dst[p] += centered[p] * w;
    }
  }
  return out;
}

Tensor pca_inverse(const PcaModel& model, const Tensor& reduced) {
  if (reduced.rank() != 3 || reduced.dim(0) != model.rank()) {
    throw DimensionError("pca_inverse: model has " + std::to_string(model.rank()) + " components, raster is " +
                         to_string(reduced.shape()));
  }
  const std::size_t bands = model.bands();
  const std::size_t r = model.rank();
  const std::size_t pixels = reduced.dim(1) * reduced.dim(2);
  Tensor out({bands, reduced.dim(1), reduced.dim(2)});
  for (std::size_t b = 0; b < bands; ++b) {
    real* dst = out.raw() + b * pixels;
    for (std::size_t p = 0; p < pixels; ++p) dst[p] = model.mean[b];
    for (std::size_t j = 0; j < r; ++j) {
      const real w = model.components[b * r + j];
      const real* src = reduced.raw() + j * pixels;
      for (std::size_t p = 0; p < pixels; ++p) dst[p] += w * src[p];
    }
  }
  return out;
}

}  // namespace lsaf
