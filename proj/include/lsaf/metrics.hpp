#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lsaf {

using ConfusionMatrix = std::vector<std::vector<std::uint64_t>>;  // [truth][predicted]

/// Accuracy summary in percent, kappa as a fraction.
struct MetricsReport {
  ConfusionMatrix confusion;
  std::vector<double> per_class;  // NaN for classes without support
  double overall = 0;
  double average = 0;  // mean over classes with support
  double kappa = 0;

  std::size_t classes() const { return confusion.size(); }
  std::uint64_t total() const;
  std::vector<std::uint64_t> support() const;
};

MetricsReport metrics_from_confusion(ConfusionMatrix confusion);

/// Labels are 1-based class ids; both spans must have equal length.
MetricsReport metrics_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                       std::size_t classes);

/// The 15 land-cover classes of the 2013 GRSS Data Fusion Contest scene.
const std::vector<std::string>& houston_class_names();

/// Houston names for K = 15, "Class k" otherwise.
std::vector<std::string> default_class_names(std::size_t classes);

/// One column of an accuracy table: a value per class, then OA and the
/// optional AA and kappa rows.
struct AccuracyColumn {
  std::string title;
  std::vector<double> per_class;
  double overall = 0;
  std::optional<double> average;
  std::optional<double> kappa;
};

/// Plain-text table with one row per class and one column per method,
/// accuracies in percent with two decimals, kappa with four.
std::string render_accuracy_table(std::span<const std::string> class_names, std::span<const AccuracyColumn> columns);

AccuracyColumn to_column(const MetricsReport& report, const std::string& title = "LSAF");

std::string render_report(const MetricsReport& report, std::span<const std::string> class_names);

/// metric,value rows: per-class accuracies, OA, AA, kappa, then the confusion
/// matrix as confusion_<truth>_<predicted>.
std::string metrics_csv(const MetricsReport& report, std::span<const std::string> class_names);

}  // namespace lsaf
