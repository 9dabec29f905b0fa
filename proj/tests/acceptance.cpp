// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// Usage: acceptance [criterion ...] to run a subset by name.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>

#include "equation_oracles.hpp"
#include "lsaf/checkpoint.hpp"
#include "lsaf/pipeline.hpp"
#include "lsaf/render.hpp"
#include "lsaf/synth.hpp"
#include "lsaf/trainer.hpp"
#include "model_checks.hpp"
#include "temp_dir.hpp"

using namespace lsaf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

// Synthetic scene preprocessed the way the CLI does it: PCA to 30 bands,
// min-max, 11x11 patches, 20% train.
struct Scene {
  RasterPair prepared;
  Dataset data;
};

Scene make_scene(std::size_t classes, std::size_t side, std::uint64_t seed, const SynthOptions& options = {}) {
  const RasterPair raw = synth_generate(classes, side, side, 48, seed, options);
  const Preprocessing prep = fit_preprocessing(raw, 30);
  Scene s;
  s.prepared = apply_preprocessing(prep, raw);
  s.data = build_dataset(s.prepared, 11, 0.2, seed);
  return s;
}

ModelConfig scene_model(std::size_t classes, HeadMode head = HeadMode::fusion) {
  ModelConfig c;
  c.bands = 30;
  c.patch = 11;
  c.classes = classes;
  c.head = head;
  return c;
}

// ---- criteria ------------------------------------------------------------------------

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  LsafModel model = init_params(scene_model(15), 1);
  const oracle::Batch batch = oracle::random_batch(model.config, 2, 2);
  const auto groups = oracle::model_gradcheck(model, batch, 12, 3);
  double worst = 0;
  std::string worst_name;
  for (const auto& g : groups) {
    if (g.report.max_relative_error > worst) {
      worst = g.report.max_relative_error;
      worst_name = g.name;
    }
  }
  const double elapsed = seconds_since(t0);
  return {worst < 1e-4 && elapsed < 120,
          fmt("%zu parameter tensors, max relative error %.3g (%s), %.1f s", groups.size(), worst,
              worst_name.c_str(), elapsed)};
}

Outcome equation_oracles() {
  const std::pair<const char*, double (*)(std::uint64_t)> checks[] = {
      {"pre_transform", oracle::pre_transform_error},     {"channel_attention", oracle::channel_attention_error},
      {"concat_transpose", oracle::concat_transpose_error}, {"se_block", oracle::se_block_error},
      {"spatial_attention", oracle::spatial_attention_error}, {"decision_fusion", oracle::decision_fusion_error},
  };
  const std::uint64_t seeds = 25;
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, check] : checks) {
    for (std::uint64_t s = 0; s < seeds; ++s) {
      const double e = check(1000 + s);
      if (!(e <= worst)) {
        worst = e;
        worst_name = name;
      }
    }
  }
  return {worst < 1e-10, fmt("6 operations x %llu seeds, max deviation %.3g (%s)",
                             static_cast<unsigned long long>(seeds), worst, worst_name.c_str())};
}

Outcome shape_contract() {
  std::string detail;
  bool pass = true;
  for (std::size_t patch : {9u, 11u, 13u}) {
    ModelConfig c = scene_model(15);
    c.patch = patch;
    LsafModel m = init_params(c, 4);
    const oracle::Batch b = oracle::random_batch(c, 2, 5);
    const Features f = extract_features(m, Var::constant(b.hsi), Var::constant(b.lidar), Mode::eval);
    const bool agree = f.hsi.shape() == f.lidar.shape() && m.shapes.hsi == m.shapes.lidar;
    pass &= agree;
    detail += fmt("s=%zu -> %s; ", patch, to_string(f.hsi.shape()).c_str());
  }
  // A mismatched LiDAR width must be rejected when the model is built.
  ModelConfig bad = scene_model(15);
  bad.lidar_channels.back() = 48;
  bool rejected = false;
  try {
    init_params(bad, 0);
  } catch (const ContractError&) {
    rejected = true;
  }
  pass &= rejected;
  detail += rejected ? "mismatch rejected at construction" : "mismatch NOT rejected at construction";
  return {pass, detail};
}

Outcome normalizations() {
  double softmax_worst = 0;
  std::mt19937_64 rng(6);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n = 1 + rng() % 3, c = 2 + rng() % 6, hw = 1 + rng() % 49;
    const Tensor fused = oracle::random_tensor({n, c, hw}, 50 + s, -20, 20);
    const Tensor weights =
        spatial_attention(Var::constant(Tensor::ones({n, c, hw})), Var::constant(fused)).value();
    for (std::size_t i = 0; i < n * c; ++i) {
      double sum = 0;
      for (std::size_t q = 0; q < hw; ++q) sum += weights[i * hw + q];
      softmax_worst = std::max(softmax_worst, std::abs(sum - 1));
    }
  }
  const RasterPair raw = synth_generate(15, 32, 32, 64, 7);
  const PcaModel pca = pca_fit(raw.hsi, 30);
  double ortho_worst = 0;
  for (std::size_t a = 0; a < 30; ++a)
    for (std::size_t b = 0; b < 30; ++b) {
      double dot = 0;
      for (std::size_t k = 0; k < 64; ++k) dot += pca.components[k * 30 + a] * pca.components[k * 30 + b];
      ortho_worst = std::max(ortho_worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  bool sorted = true;
  for (std::size_t j = 1; j < 30; ++j) sorted &= pca.explained_variance[j] <= pca.explained_variance[j - 1];
  return {softmax_worst < 1e-6 && ortho_worst < 1e-8 && sorted,
          fmt("softmax sum error %.3g, PCA orthonormality error %.3g, variance %s", softmax_worst, ortho_worst,
              sorted ? "non-increasing" : "NOT sorted")};
}

Outcome learning_capacity() {
  const auto t0 = Clock::now();
  const Scene scene = make_scene(15, 36, 11);
  LsafModel model = init_params(scene_model(15), 11);
  AdamState adam;
  TrainConfig config;  // lr 1e-4, batch 128
  config.epochs = 300;
  config.seed = 11;
  double reached = 0;
  std::size_t epochs = 0;
  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochRecord& r) {
    epochs = r.epoch;
    if (r.accuracy < 99.0) return true;
    // Confirm on the whole training set with inference-mode batch norm.
    reached = evaluate(model, scene.data.train).overall;
    return reached < 99.0;
  };
  train(model, adam, scene.data.train, config, callbacks);
  const double elapsed = seconds_since(t0);
  return {reached >= 99.0 && elapsed < 600,
          fmt("%zu training samples, train accuracy %.2f%% after %zu epochs, %.0f s", scene.data.train.size(),
              reached, epochs, elapsed)};
}

// Fusion vs separately trained single-branch models. K = 4 makes every class
// a member of a designated pair, so each branch alone is missing the cue for
// half of the classes.
constexpr std::size_t kFusionClasses = 4;
constexpr std::size_t kFusionSide = 48;
constexpr std::size_t kFusionEpochs = 40;

Outcome fusion_benefit() {
  const auto t0 = Clock::now();
  double sums[3] = {0, 0, 0};
  std::string detail;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Scene scene = make_scene(kFusionClasses, kFusionSide, 200 + seed);
    double oa[3];
    int i = 0;
    for (HeadMode head : {HeadMode::fusion, HeadMode::hsi_only, HeadMode::lidar_only}) {
      LsafModel model = init_params(scene_model(kFusionClasses, head), seed);
      AdamState adam;
      TrainConfig config;
      config.epochs = kFusionEpochs;
      config.seed = seed;
      train(model, adam, scene.data.train, config);
      oa[i] = evaluate(model, scene.data.test).overall;
      sums[i] += oa[i];
      ++i;
    }
    detail += fmt("seed %llu: %.2f/%.2f/%.2f; ", static_cast<unsigned long long>(seed), oa[0], oa[1], oa[2]);
  }
  const double fusion = sums[0] / 3, hsi = sums[1] / 3, lidar = sums[2] / 3;
  return {fusion - hsi >= 5 && fusion - lidar >= 5,
          detail + fmt("mean OA fusion %.2f, hsi_only %.2f (%+.2f pp), lidar_only %.2f (%+.2f pp), %.0f s", fusion,
                       hsi, fusion - hsi, lidar, fusion - lidar, seconds_since(t0))};
}

Outcome determinism() {
  const Scene scene = make_scene(15, 36, 12);
  auto run = [&] {
    LsafModel model = init_params(scene_model(15), 12);
    AdamState adam;
    TrainConfig config;
    config.epochs = 5;
    config.seed = 12;
    const auto trace = train(model, adam, scene.data.train, config);
    return std::make_pair(loss_trace_csv(trace), model_state(model));
  };
  const auto a = run();
  const auto b = run();
  const bool same_trace = a.first == b.first;
  const bool same_weights = a.second == b.second;
  return {same_trace && same_weights, fmt("5-epoch loss traces %s, final weights %s",
                                          same_trace ? "bit-identical" : "DIFFER",
                                          same_weights ? "bit-identical" : "DIFFER")};
}

Outcome metrics_oracle() {
  std::mt19937_64 rng(13);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 14;
    const std::size_t n = 1 + rng() % 2000;
    std::vector<int> truth(n), predicted(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(1 + rng() % k);
      predicted[i] = rng() % 4 == 0 ? static_cast<int>(1 + rng() % k) : truth[i];
    }
    const MetricsReport r = metrics_from_predictions(truth, predicted, k);

    // Naive recount straight from the label lists.
    std::uint64_t agree = 0;
    std::vector<std::uint64_t> row(k, 0), col(k, 0), hit(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++row[truth[i] - 1];
      ++col[predicted[i] - 1];
      if (truth[i] == predicted[i]) {
        ++agree;
        ++hit[truth[i] - 1];
      }
    }
    const double oa = 100.0 * static_cast<double>(agree) / static_cast<double>(n);
    double aa_sum = 0;
    std::size_t supported = 0;
    std::uint64_t chance = 0;
    for (std::size_t c = 0; c < k; ++c) {
      if (row[c] > 0) {
        aa_sum += 100.0 * static_cast<double>(hit[c]) / static_cast<double>(row[c]);
        ++supported;
      }
      chance += row[c] * col[c];
    }
    const double aa = aa_sum / static_cast<double>(supported);
    const double po = static_cast<double>(agree) / static_cast<double>(n);
    const double pe = static_cast<double>(chance) / (static_cast<double>(n) * static_cast<double>(n));
    const double kappa = pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
    if (r.overall != oa || r.average != aa || r.kappa != kappa) ++mismatches;
  }
  return {mismatches == 0, fmt("50 random confusion matrices, %zu mismatches", mismatches)};
}

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LSAF_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome io_round_trips() {
  TempDir dir;
  std::vector<std::string> failures;

  // Rasters: write, read, write again; the bytes must not change.
  const RasterPair scene = synth_generate(6, 17, 23, 20, 14);
  save_raster(scene, dir / "h.lsaf", dir / "l.lsaf", dir / "y.lsaf");
  const RasterPair back = load_raster(dir / "h.lsaf", dir / "l.lsaf", dir / "y.lsaf");
  save_raster(back, dir / "h2.lsaf", dir / "l2.lsaf", dir / "y2.lsaf");
  for (const char* f : {"h", "l", "y"}) {
    if (read_bytes(dir / (std::string(f) + ".lsaf")) != read_bytes(dir / (std::string(f) + "2.lsaf"))) {
      failures.push_back(std::string("raster ") + f);
    }
  }
  // Stored as float32, so compare against the rounded originals.
  Tensor rounded = scene.hsi;
  for (std::size_t i = 0; i < rounded.size(); ++i) rounded[i] = static_cast<float>(rounded[i]);
  if (!(back.hsi == rounded) || back.labels.values != scene.labels.values) failures.push_back("raster values");

  // Checkpoint with weights, preprocessing and optimizer state.
  ModelConfig c = scene_model(6);
  c.bands = 16;
  c.patch = 9;
  LsafModel model = init_params(c, 15);
  const Preprocessing prep = fit_preprocessing(scene, 16);
  const Dataset data = build_dataset(apply_preprocessing(prep, scene), 9, 0.2, 15);
  AdamState adam;
  TrainConfig tc;
  tc.epochs = 1;
  train(model, adam, data.train, tc);
  TensorTable table = model_state(model);
  store_preprocessing(table, prep);
  store_adam_state(table, adam, active_parameters(model));
  write_tensor_table(dir / "c.lsaf", table);
  const TensorTable loaded = read_tensor_table(dir / "c.lsaf");
  write_tensor_table(dir / "c2.lsaf", loaded);
  if (read_bytes(dir / "c.lsaf") != read_bytes(dir / "c2.lsaf")) failures.push_back("checkpoint bytes");
  LsafModel restored = init_params(c, 16);
  load_model_state(restored, loaded);
  if (!(model_state(restored) == model_state(model))) failures.push_back("checkpoint weights");

  // cmd_map on a non-square scene.
  const std::string scene_dir = (dir / "scene").string(), out = (dir / "run").string();
  const std::string data_flags = " --hsi " + scene_dir + "/hsi.lsaf --lidar " + scene_dir + "/lidar.lsaf --labels " +
                                 scene_dir + "/labels.lsaf --patch 9 --pca-dims 16 --out " + out;
  std::size_t map_w = 0, map_h = 0;
  if (run_cli("synth --classes 5 --height 21 --width 34 --bands 24 --seed 3 --out " + scene_dir) != 0 ||
      run_cli("train --epochs 1 --batch 64" + data_flags) != 0 ||
      run_cli("map" + data_flags + " --image " + (dir / "map.ppm").string()) != 0) {
    failures.push_back("cli run");
  } else {
    std::ifstream ppm(dir / "map.ppm", std::ios::binary);
    std::string magic;
    int maxval = 0;
    ppm >> magic >> map_w >> map_h >> maxval;
    if (magic != "P6" || map_w != 34 || map_h != 21 || maxval != 255) failures.push_back("map header");
    if (std::filesystem::file_size(dir / "map.ppm") != 3 * 34 * 21 + std::string("P6\n34 21\n255\n").size()) {
      failures.push_back("map size");
    }
  }

  std::string detail = fmt("rasters and checkpoint re-encode byte-exactly; map %zux%zu for a 34x21 scene", map_w,
                           map_h);
  if (!failures.empty()) {
    detail = "failed:";
    for (const auto& f : failures) detail += " " + f;
  }
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient-integrity", gradient_integrity}, {"equation-oracles", equation_oracles},
      {"shape-contract", shape_contract},         {"normalizations", normalizations},
      {"learning-capacity", learning_capacity},   {"fusion-benefit", fusion_benefit},
      {"determinism", determinism},               {"metrics-oracle", metrics_oracle},
      {"io-round-trips", io_round_trips},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    if (argc > 1 && std::none_of(argv + 1, argv + argc, [&](const char* f) { return name == f; })) {
      continue;
    }
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
