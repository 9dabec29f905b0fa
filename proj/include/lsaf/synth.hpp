#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "lsaf/raster.hpp"

namespace lsaf {

struct SynthOptions {
  double spectral_noise = 0.02;   // reflectance units
  double elevation_noise = 0.25;  // meters
  double elevation_step = 2.0;    // meters between distinct class elevations
  std::size_t cells_per_class = 3;
};

/// Class pairs (1-based labels) that only one modality can tell apart.
struct DesignatedPairs {
  std::array<int, 2> hsi_separable;    // same elevation, different spectra
  std::array<int, 2> lidar_separable;  // same spectrum, different elevation
};

/// Present for K >= 4; smaller scenes give every class its own spectrum and
/// elevation.
std::optional<DesignatedPairs> designated_pairs(std::size_t classes);

/// Voronoi-cell scene. Every class has a Gaussian-bump spectral signature and
/// a mean elevation; the designated pairs share one of the two. All pixels are
/// labeled. Bit-identical for a fixed seed.
RasterPair synth_generate(std::size_t classes, std::size_t height, std::size_t width, std::size_t bands,
                          std::uint64_t seed, const SynthOptions& options = {});

/// Noise-free spectral signature of a class (1-based) over `bands` bands.
std::vector<real> class_signature(int label, std::size_t classes, std::size_t bands);

}  // namespace lsaf
