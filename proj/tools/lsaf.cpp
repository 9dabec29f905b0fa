// lsaf: synthesize scenes, train, evaluate and render classification maps.
//
//   lsaf synth --classes 15 --height 96 --width 96 --bands 48 --out scene/
//   lsaf train --config run.json --epochs 110
//   lsaf eval  --config run.json
//   lsaf map   --config run.json
//
// Exit codes: 0 ok, 1 usage or configuration, 2 data or format, 3 numeric.

#include <CLI11.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "lsaf/checkpoint.hpp"
#include "lsaf/detail/binary.hpp"
#include "lsaf/errors.hpp"
#include "lsaf/metrics.hpp"
#include "lsaf/pipeline.hpp"
#include "lsaf/render.hpp"
#include "lsaf/run_config.hpp"
#include "lsaf/synth.hpp"
#include "lsaf/trainer.hpp"

namespace fs = std::filesystem;
using namespace lsaf;

namespace {

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };
Level g_level = Level::info;

void log(Level level, const std::string& message) {
  static const char* tags[] = {"error", "warn", "info", "debug"};
  if (level <= g_level) std::cerr << "[" << tags[static_cast<int>(level)] << "] " << message << "\n";
}

void read_environment() {
  if (const char* level = std::getenv("LSAF_LOG_LEVEL")) {
    const std::string s = level;
    if (s == "error") g_level = Level::error;
    else if (s == "warn") g_level = Level::warn;
    else if (s == "info") g_level = Level::info;
    else if (s == "debug") g_level = Level::debug;
    else throw ConfigError("LSAF_LOG_LEVEL must be error, warn, info or debug, got '" + s + "'");
  }
  if (const char* threads = std::getenv("LSAF_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(threads, &end, 10);
    if (end == threads || *end != '\0' || n < 1) throw ConfigError("LSAF_THREADS must be a positive integer");
    omp_set_num_threads(static_cast<int>(n));
  }
}

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<double> lr;
  std::optional<std::size_t> batch;
  std::optional<std::size_t> patch;
  std::optional<std::size_t> pca_dims;
  std::optional<std::string> out;
  std::optional<std::string> hsi, lidar, labels;
  std::optional<std::string> head;
  std::optional<std::string> checkpoint;
};

void add_run_options(CLI::App* cmd, Overrides& o, bool training) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed for splitting, initialization and shuffling");
  cmd->add_option("--patch", o.patch, "Odd patch size in pixels");
  cmd->add_option("--pca-dims", o.pca_dims, "Spectral components kept by PCA");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--hsi", o.hsi, "HSI raster (overrides data.hsi)");
  cmd->add_option("--lidar", o.lidar, "LiDAR raster (overrides data.lidar)");
  cmd->add_option("--labels", o.labels, "Label raster (overrides data.labels)");
  cmd->add_option("--head", o.head, "Head mode: fusion, hsi_only or lidar_only");
  if (training) {
    cmd->add_option("--epochs", o.epochs, "Training epochs");
    cmd->add_option("--lr", o.lr, "Adam learning rate");
    cmd->add_option("--batch", o.batch, "Mini-batch size");
    cmd->add_option("--resume", o.checkpoint, "Continue from this checkpoint");
  } else {
    cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint to load (default <out>/checkpoint.lsaf)");
  }
}

RunConfig resolve(const Overrides& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (o.epochs) c.train.epochs = *o.epochs;
  if (o.lr) c.train.lr = *o.lr;
  if (o.batch) c.train.batch = *o.batch;
  if (o.patch) c.data.patch = *o.patch;
  if (o.pca_dims) c.data.pca_dims = *o.pca_dims;
  if (o.out) c.out = *o.out;
  if (o.hsi) c.data.hsi = *o.hsi;
  if (o.lidar) c.data.lidar = *o.lidar;
  if (o.labels) c.data.labels = *o.labels;
  if (o.head) c.model.head = parse_head_mode(*o.head);
  c.validate();
  c.require_data();
  return c;
}

ModelConfig model_config(const RunConfig& c, std::size_t classes) {
  ModelConfig m = c.model;
  m.bands = c.data.pca_dims;
  m.patch = c.data.patch;
  m.classes = classes;
  return m;
}

// Loads the scene and replays the preprocessing; `prep` is fitted when empty.
RasterPair prepare(const RunConfig& c, std::optional<Preprocessing>& prep) {
  const RasterPair raw = load_raster(c.data.hsi, c.data.lidar, c.data.labels);
  log(Level::info, "scene " + std::to_string(raw.height()) + "x" + std::to_string(raw.width()) + ", " +
                       std::to_string(raw.bands()) + " bands, " + std::to_string(raw.classes()) + " classes, " +
                       std::to_string(raw.labels.labeled_count()) + " labeled pixels");
  if (!prep) prep = fit_preprocessing(raw, c.data.pca_dims, c.data.pca_labeled_only);
  return apply_preprocessing(*prep, raw);
}

void save_checkpoint(const fs::path& path, LsafModel& model, const Preprocessing& prep, const AdamState& adam,
                     std::size_t epoch) {
  TensorTable table = model_state(model);
  store_preprocessing(table, prep);
  store_adam_state(table, adam, active_parameters(model));
  table.emplace_back("train.epoch", Tensor::scalar(static_cast<real>(epoch)));
  write_tensor_table(path, table);
}

void print_report(const MetricsReport& report, const std::string& heading) {
  std::cout << heading << "\n" << render_report(report, default_class_names(report.classes())) << std::flush;
}

int cmd_synth(std::size_t classes, std::size_t height, std::size_t width, std::size_t bands, std::uint64_t seed,
              const fs::path& out) {
  const RasterPair pair = synth_generate(classes, height, width, bands, seed);
  fs::create_directories(out);
  save_raster(pair, out / "hsi.lsaf", out / "lidar.lsaf", out / "labels.lsaf");
  log(Level::info, "wrote " + (out / "hsi.lsaf").string() + ", lidar.lsaf, labels.lsaf");
  return 0;
}

int cmd_train(const Overrides& o) {
  const RunConfig c = resolve(o);
  std::optional<Preprocessing> prep;
  std::optional<TensorTable> resume;
  if (o.checkpoint) {
    resume = read_tensor_table(*o.checkpoint);
    prep = load_preprocessing(*resume);
  }
  const RasterPair scene = prepare(c, prep);
  const Dataset data = build_dataset(scene, c.data.patch, c.data.train_fraction, c.train.seed);
  LsafModel model = init_params(model_config(c, scene.classes()), c.train.seed);
  log(Level::debug, summary(model));
  log(Level::info, std::to_string(data.train.size()) + " training / " + std::to_string(data.test.size()) +
                       " test samples, " + std::to_string(parameter_count(model)) + " parameters");

  AdamState adam;
  std::size_t first_epoch = 0;
  if (resume) {
    load_model_state(model, *resume);
    adam = load_adam_state(*resume, active_parameters(model));
    if (const Tensor* e = find_tensor(*resume, "train.epoch")) first_epoch = static_cast<std::size_t>(e->data()[0]);
    log(Level::info, "resuming after epoch " + std::to_string(first_epoch));
  }

  fs::create_directories(c.out);
  detail::write_file(c.out / "config.json", dump_run_config(c));
  const fs::path checkpoint = c.out / "checkpoint.lsaf";
  std::vector<EpochRecord> trace;
  if (resume && fs::exists(c.out / "loss.csv")) {
    // Keep the epochs already recorded before the resume point.
    const std::string previous = detail::read_file(c.out / "loss.csv");
    std::size_t pos = previous.find('\n');
    while (pos != std::string::npos && pos + 1 < previous.size()) {
      const std::size_t next = previous.find('\n', pos + 1);
      EpochRecord r;
      if (std::sscanf(previous.c_str() + pos + 1, "%zu,%lf,%lf", &r.epoch, &r.loss, &r.accuracy) == 3 &&
          r.epoch <= first_epoch) {
        trace.push_back(r);
      }
      pos = next;
    }
  }

  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochRecord& r) {
    trace.push_back(r);
    char line[160];
    std::snprintf(line, sizeof line, "epoch %zu/%zu  loss %.6f  train acc %.2f%%", r.epoch, c.train.epochs, r.loss,
                  r.accuracy);
    log(Level::info, line);
    return true;
  };
  callbacks.checkpoint_every = c.checkpoint_every;
  callbacks.on_checkpoint = [&](std::size_t epoch) {
    save_checkpoint(checkpoint, model, *prep, adam, epoch);
    detail::write_file(c.out / "loss.csv", loss_trace_csv(trace));
  };
  train(model, adam, data.train, c.train, callbacks, first_epoch);
  save_checkpoint(checkpoint, model, *prep, adam, std::max(first_epoch, c.train.epochs));
  detail::write_file(c.out / "loss.csv", loss_trace_csv(trace));

  const MetricsReport report = evaluate(model, data.test);
  detail::write_file(c.out / "metrics.csv", metrics_csv(report, default_class_names(report.classes())));
  print_report(report, "Test accuracy (%)");
  return 0;
}

int cmd_eval(const Overrides& o) {
  const RunConfig c = resolve(o);
  const fs::path checkpoint = o.checkpoint ? fs::path(*o.checkpoint) : c.out / "checkpoint.lsaf";
  const TensorTable table = read_tensor_table(checkpoint);
  std::optional<Preprocessing> prep = load_preprocessing(table);
  const RasterPair scene = prepare(c, prep);
  const Dataset data = build_dataset(scene, c.data.patch, c.data.train_fraction, c.train.seed);
  LsafModel model = init_params(model_config(c, scene.classes()), c.train.seed);
  load_model_state(model, table);
  const MetricsReport report = evaluate(model, data.test);
  fs::create_directories(c.out);
  detail::write_file(c.out / "metrics.csv", metrics_csv(report, default_class_names(report.classes())));
  print_report(report, "Test accuracy (%)");
  return 0;
}

int cmd_map(const Overrides& o, const std::optional<std::string>& image) {
  const RunConfig c = resolve(o);
  const fs::path checkpoint = o.checkpoint ? fs::path(*o.checkpoint) : c.out / "checkpoint.lsaf";
  const TensorTable table = read_tensor_table(checkpoint);
  std::optional<Preprocessing> prep = load_preprocessing(table);
  const RasterPair scene = prepare(c, prep);
  LsafModel model = init_params(model_config(c, scene.classes()), c.train.seed);
  load_model_state(model, table);
  const LabelMap predicted = classify_scene(model, scene);
  const fs::path path = image ? fs::path(*image) : c.out / "map.ppm";
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_ppm(path, predicted);

  std::size_t agree = 0;
  for (std::size_t i = 0; i < predicted.values.size(); ++i) {
    if (scene.labels.values[i] != 0 && predicted.values[i] == scene.labels.values[i]) ++agree;
  }
  char line[160];
  std::snprintf(line, sizeof line, "wrote %s (%zux%zu), %.2f%% of labeled pixels match the ground truth",
                path.string().c_str(), predicted.width, predicted.height,
                100.0 * static_cast<double>(agree) / static_cast<double>(scene.labels.labeled_count()));
  log(Level::info, line);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LSAF: joint HSI and LiDAR classification with linear self-attention fusion"};
  app.require_subcommand(1);

  std::size_t classes = 15, height = 96, width = 96, bands = 48;
  std::uint64_t synth_seed = 0;
  std::string synth_out = "scene";
  auto* synth = app.add_subcommand("synth", "Generate a synthetic co-registered scene");
  synth->add_option("--classes", classes, "Number of classes K (>= 2)")->capture_default_str();
  synth->add_option("--height", height, "Scene height in pixels")->capture_default_str();
  synth->add_option("--width", width, "Scene width in pixels")->capture_default_str();
  synth->add_option("--bands", bands, "Spectral bands")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Scene seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  Overrides train_opts, eval_opts, map_opts;
  std::optional<std::string> image;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, loss trace and metrics");
  add_run_options(train_cmd, train_opts, true);
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  add_run_options(eval_cmd, eval_opts, false);
  auto* map_cmd = app.add_subcommand("map", "Render the classification map of the labeled pixels as PPM");
  add_run_options(map_cmd, map_opts, false);
  map_cmd->add_option("--image", image, "Output image (default <out>/map.ppm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    read_environment();
    if (*synth) return cmd_synth(classes, height, width, bands, synth_seed, synth_out);
    if (*train_cmd) return cmd_train(train_opts);
    if (*eval_cmd) return cmd_eval(eval_opts);
    if (*map_cmd) return cmd_map(map_opts, image);
  } catch (const NumericError& e) {
    log(Level::error, e.what());
    return 3;
  } catch (const ConfigError& e) {
    log(Level::error, e.what());
    return 1;
  } catch (const Error& e) {
    log(Level::error, e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    log(Level::error, e.what());
    return 2;
  }
  return 1;
}
