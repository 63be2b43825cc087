#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace softaug {

/// Corruption name used for uncorrupted rows, which must have severity 0.
inline constexpr std::string_view kCleanCorruption = "clean";
inline constexpr int kMaxSeverity = 5;

struct PredictionRow {
  std::string sample_id;
  int true_class = 0;
  int predicted_class = 0;
  std::string corruption;
  int severity = 0;
};

/// The 19 corruption names of the common-corruptions benchmark. Other names are accepted with a
/// warning.
std::span<const std::string_view> default_corruptions() noexcept;

/// Comma-separated text with a header naming the columns sample_id, true_class, predicted_class,
/// corruption_name and severity (any order, extra columns ignored). FormatError carries the
/// 1-based line number.
std::vector<PredictionRow> parse_predictions(std::string_view text, std::string_view origin = "predictions");
std::vector<PredictionRow> read_predictions(const std::filesystem::path& path);

struct CellAccuracy {
  std::string corruption;
  int severity = 0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct RobustnessReport {
  /// Mean of per-(corruption, severity) cell accuracies; absent without corrupted rows.
  std::optional<double> robustness;
  /// Plain accuracy over all corrupted rows, for comparison with row-pooled conventions.
  std::optional<double> pooled_robustness;
  std::optional<double> clean_accuracy;
  std::map<std::string, double> per_corruption;  // mean over the corruption's cells
  std::map<int, double> per_severity;            // mean over the severity's cells
  std::vector<CellAccuracy> cells;               // sorted by (corruption, severity)
  std::size_t clean_rows = 0;
  std::size_t corrupted_rows = 0;
};

RobustnessReport eval_robustness(std::span<const PredictionRow> rows);

nlohmann::ordered_json report_to_json(const RobustnessReport& report);
/// Human-readable summary with percentages to two decimals.
std::string format_report(const RobustnessReport& report);

}  // namespace softaug
