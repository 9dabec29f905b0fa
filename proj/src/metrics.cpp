#include "lsaf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "lsaf/errors.hpp"

namespace lsaf {

std::uint64_t MetricsReport::total() const {
  std::uint64_t sum = 0;
  for (const auto& row : confusion)
    for (auto v : row) sum += v;
  return sum;
}

std::vector<std::uint64_t> MetricsReport::support() const {
  std::vector<std::uint64_t> out;
  out.reserve(confusion.size());
  for (const auto& row : confusion) {
    std::uint64_t sum = 0;
    for (auto v : row) sum += v;
    out.push_back(sum);
  }
  return out;
}

MetricsReport metrics_from_confusion(ConfusionMatrix confusion) {
  const std::size_t k = confusion.size();
  if (k == 0) throw ConfigError("confusion matrix is empty");
  for (const auto& row : confusion) {
    if (row.size() != k) throw DimensionError("confusion matrix must be square");
  }
  MetricsReport report;
  report.confusion = std::move(confusion);
  const auto& c = report.confusion;

  std::uint64_t total = 0, trace = 0;
  std::vector<std::uint64_t> rows(k, 0), cols(k, 0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      total += c[i][j];
      rows[i] += c[i][j];
      cols[j] += c[i][j];
    }
    trace += c[i][i];
  }
  if (total == 0) throw ConfigError("confusion matrix has no samples");

  report.per_class.assign(k, std::numeric_limits<double>::quiet_NaN());
  double accuracy_sum = 0;
  std::size_t supported = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (rows[i] == 0) continue;
    report.per_class[i] = 100.0 * static_cast<double>(c[i][i]) / static_cast<double>(rows[i]);
    accuracy_sum += report.per_class[i];
    ++supported;
  }
  report.overall = 100.0 * static_cast<double>(trace) / static_cast<double>(total);
  report.average = accuracy_sum / static_cast<double>(supported);

  // Chance agreement from integer marginals: sum_i row_i * col_i / total^2.
  unsigned __int128 chance = 0;
  for (std::size_t i = 0; i < k; ++i) chance += static_cast<unsigned __int128>(rows[i]) * cols[i];
  const double po = static_cast<double>(trace) / static_cast<double>(total);
  const double pe = static_cast<double>(chance) / (static_cast<double>(total) * static_cast<double>(total));
  report.kappa = pe >= 1.0 ? 1.0 : (po - pe) / (1.0 - pe);
  return report;
}

MetricsReport metrics_from_predictions(std::span<const int> truth, std::span<const int> predicted,
                                       std::size_t classes) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("metrics: " + std::to_string(truth.size()) + " labels but " +
                         std::to_string(predicted.size()) + " predictions");
  }
  ConfusionMatrix confusion(classes, std::vector<std::uint64_t>(classes, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i], p = predicted[i];
    if (t < 1 || p < 1 || static_cast<std::size_t>(t) > classes || static_cast<std::size_t>(p) > classes) {
      throw ContractError("metrics: label outside 1.." + std::to_string(classes) + " at sample " + std::to_string(i));
    }
    ++confusion[t - 1][p - 1];
  }
  return metrics_from_confusion(std::move(confusion));
}

const std::vector<std::string>& houston_class_names() {
  static const std::vector<std::string> names{
      "Healthy grass", "Stressed grass", "Synthetic grass", "Trees",         "Soil",
      "Water",         "Residential",    "Commercial",      "Road",          "Highway",
      "Railway",       "Parking Lot 1",  "Parking Lot 2",   "Tennis Court",  "Running Track"};
  return names;
}

std::vector<std::string> default_class_names(std::size_t classes) {
  if (classes == houston_class_names().size()) return houston_class_names();
  std::vector<std::string> names;
  for (std::size_t i = 1; i <= classes; ++i) names.push_back("Class " + std::to_string(i));
  return names;
}

namespace {

// Display width in code points, so that "A³CLNN" lines up.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

std::string pad_left(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : std::string(width - w, ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
  const std::size_t w = display_width(s);
  return w >= width ? s : s + std::string(width - w, ' ');
}

std::string fixed(double v, int digits) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string render_accuracy_table(std::span<const std::string> class_names, std::span<const AccuracyColumn> columns) {
  for (const auto& col : columns) {
    if (col.per_class.size() != class_names.size()) {
      throw DimensionError("accuracy column '" + col.title + "' has " + std::to_string(col.per_class.size()) +
                           " rows for " + std::to_string(class_names.size()) + " classes");
    }
  }
  std::size_t label_width = display_width("Class");
  for (const auto& name : class_names) label_width = std::max(label_width, display_width(name));
  label_width += 2;
  std::vector<std::size_t> widths;
  for (const auto& col : columns) widths.push_back(std::max<std::size_t>(display_width(col.title), 6) + 2);
  std::size_t line_width = label_width;
  for (auto w : widths) line_width += w;

  std::string out;
  auto row = [&](const std::string& label, auto&& cell) {
    out += pad_right(label, label_width);
    for (std::size_t c = 0; c < columns.size(); ++c) out += pad_left(cell(columns[c]), widths[c]);
    out += '\n';
  };
  const std::string single(line_width, '-');
  const std::string twin(line_width, '=');

  row("Class", [](const AccuracyColumn& c) { return c.title; });
  out += twin + '\n';
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    row(class_names[i], [i](const AccuracyColumn& c) { return fixed(c.per_class[i], 2); });
  }
  out += twin + '\n';
  row("OA", [](const AccuracyColumn& c) { return fixed(c.overall, 2); });
  const bool any_aa = std::any_of(columns.begin(), columns.end(), [](const auto& c) { return c.average.has_value(); });
  const bool any_kappa = std::any_of(columns.begin(), columns.end(), [](const auto& c) { return c.kappa.has_value(); });
  if (any_aa) row("AA", [](const AccuracyColumn& c) { return c.average ? fixed(*c.average, 2) : "-"; });
  if (any_kappa) row("Kappa", [](const AccuracyColumn& c) { return c.kappa ? fixed(*c.kappa, 4) : "-"; });
  out += single + '\n';
  return out;
}

AccuracyColumn to_column(const MetricsReport& report, const std::string& title) {
  return AccuracyColumn{title, report.per_class, report.overall, report.average, report.kappa};
}

std::string render_report(const MetricsReport& report, std::span<const std::string> class_names) {
  const AccuracyColumn column = to_column(report);
  return render_accuracy_table(class_names, std::span(&column, 1));
}

std::string metrics_csv(const MetricsReport& report, std::span<const std::string> class_names) {
  if (class_names.size() != report.classes()) throw DimensionError("metrics_csv: class name count mismatch");
  std::string out = "metric,value\n";
  auto quoted = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  };
  for (std::size_t i = 0; i < report.classes(); ++i) {
    out += quoted(class_names[i]) + "," + (std::isnan(report.per_class[i]) ? "" : fixed(report.per_class[i], 6)) + "\n";
  }
  out += "OA," + fixed(report.overall, 6) + "\n";
  out += "AA," + fixed(report.average, 6) + "\n";
  out += "kappa," + fixed(report.kappa, 8) + "\n";
  for (std::size_t i = 0; i < report.classes(); ++i)
    for (std::size_t j = 0; j < report.classes(); ++j)
      out += "confusion_" + std::to_string(i + 1) + "_" + std::to_string(j + 1) + "," +
             std::to_string(report.confusion[i][j]) + "\n";
  return out;
}

}  // namespace lsaf
