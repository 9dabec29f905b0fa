#include "lsaf/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace lsaf {

namespace {

// Portable uniform in [0,1) and Box-Muller normal; std distributions are
// implementation-defined and would break cross-platform reproducibility.
double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Classes whose spectrum is borrowed from another class.
int spectral_source(int label, std::size_t classes) {
  const auto pairs = designated_pairs(classes);
  if (pairs && label == pairs->lidar_separable[1]) return pairs->lidar_separable[0];
  return label;
}

}  // namespace

std::optional<DesignatedPairs> designated_pairs(std::size_t classes) {
  if (classes < 4) return std::nullopt;
  return DesignatedPairs{{1, 2}, {3, 4}};
}

std::vector<real> class_signature(int label, std::size_t classes, std::size_t bands) {
  const int source = spectral_source(label, classes);
  const double centre = (static_cast<double>(source) - 0.5) / static_cast<double>(classes);
  const double width = 0.6 / static_cast<double>(classes) + 0.04;
  const double amplitude = 0.45 + 0.1 * static_cast<double>(source % 3);
  std::vector<real> sig(bands);
  for (std::size_t b = 0; b < bands; ++b) {
    const double t = bands > 1 ? static_cast<double>(b) / static_cast<double>(bands - 1) : 0.5;
    const double d = (t - centre) / width;
    sig[b] = static_cast<real>(0.15 + amplitude * std::exp(-0.5 * d * d));
  }
  return sig;
}

RasterPair synth_generate(std::size_t classes, std::size_t height, std::size_t width, std::size_t bands,
                          std::uint64_t seed, const SynthOptions& options) {
  if (classes < 2) throw ConfigError("synth_generate needs at least 2 classes, got " + std::to_string(classes));
  if (classes > 0xffff) throw ConfigError("synth_generate: too many classes for 16-bit labels");
  if (height == 0 || width == 0 || bands == 0) throw ConfigError("synth_generate: empty scene");
  if (options.cells_per_class == 0) throw ConfigError("synth_generate: cells_per_class must be positive");
  std::mt19937_64 rng(seed);

  // Distinct seed pixels so every cell owns at least its own pixel.
  const std::size_t cells = std::min(classes * options.cells_per_class, height * width);
  std::vector<std::size_t> sites(height * width);
  for (std::size_t i = 0; i < sites.size(); ++i) sites[i] = i;
  for (std::size_t i = 0; i < cells; ++i) {
    std::swap(sites[i], sites[i + static_cast<std::size_t>(rng() % (sites.size() - i))]);
  }
  sites.resize(cells);

  LabelMap labels{height, width, std::vector<std::uint16_t>(height * width)};
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      std::size_t best = 0;
      double best_d = 0;
      for (std::size_t s = 0; s < cells; ++s) {
        const double dr = static_cast<double>(r) - static_cast<double>(sites[s] / width);
        const double dc = static_cast<double>(c) - static_cast<double>(sites[s] % width);
        const double d = dr * dr + dc * dc;
        if (s == 0 || d < best_d) {
          best = s;
          best_d = d;
        }
      }
      labels.values[r * width + c] = static_cast<std::uint16_t>(best % classes + 1);
    }
  }

  // Elevation levels: a seeded permutation of distinct steps; the
  // HSI-separable pair shares one level.
  std::vector<std::size_t> level(classes);
  for (std::size_t k = 0; k < classes; ++k) level[k] = k;
  for (std::size_t k = classes - 1; k > 0; --k) std::swap(level[k], level[static_cast<std::size_t>(rng() % (k + 1))]);
  std::vector<double> elevation(classes);
  for (std::size_t k = 0; k < classes; ++k) elevation[k] = options.elevation_step * static_cast<double>(level[k]);
  if (const auto pairs = designated_pairs(classes)) {
    elevation[static_cast<std::size_t>(pairs->hsi_separable[1] - 1)] =
        elevation[static_cast<std::size_t>(pairs->hsi_separable[0] - 1)];
  }

  std::vector<std::vector<real>> signatures(classes);
  for (std::size_t k = 0; k < classes; ++k) signatures[k] = class_signature(static_cast<int>(k + 1), classes, bands);

  const std::size_t pixels = height * width;
  RasterPair pair{Tensor({bands, height, width}), Tensor({1, height, width}), std::move(labels)};
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::size_t k = pair.labels.values[p] - 1u;
    for (std::size_t b = 0; b < bands; ++b) {
      pair.hsi[b * pixels + p] = static_cast<real>(signatures[k][b] + options.spectral_noise * standard_normal(rng));
    }
    pair.lidar[p] = static_cast<real>(elevation[k] + options.elevation_noise * standard_normal(rng));
  }
  return pair;
}

}  // namespace lsaf
