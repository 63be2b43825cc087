#include "softaug/robustness.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include <spdlog/fmt/fmt.h>

#include "softaug/errors.hpp"
#include "util.hpp"

namespace softaug {

namespace {

constexpr std::array<std::string_view, 19> kCorruptions = {
    "gaussian_noise", "shot_noise",  "impulse_noise",     "speckle_noise",    "defocus_blur",
    "glass_blur",     "motion_blur", "zoom_blur",         "gaussian_blur",    "snow",
    "frost",          "fog",         "brightness",        "contrast",         "elastic_transform",
    "pixelate",       "jpeg_compression", "spatter",      "saturate"};

constexpr std::array<std::string_view, 5> kColumns = {"sample_id", "true_class", "predicted_class",
                                                      "corruption_name", "severity"};

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

std::string percent(double value) { return fmt::format("{:.2f}%", value * 100.0); }

}  // namespace

std::span<const std::string_view> default_corruptions() noexcept { return kCorruptions; }

std::vector<PredictionRow> parse_predictions(std::string_view text, std::string_view origin) {
  std::vector<PredictionRow> rows;
  std::array<std::size_t, kColumns.size()> position{};
  std::size_t column_count = 0;
  bool have_header = false;
  std::set<std::string> warned;
  std::uint64_t line_number = 0;

  auto fail = [&](const std::string& message) -> FormatError {
    return FormatError(std::string(origin) + ":" + std::to_string(line_number) + ": " + message, line_number);
  };

  for (std::size_t start = 0; start <= text.size();) {
    const auto newline = text.find('\n', start);
    const std::string_view raw =
        text.substr(start, newline == std::string_view::npos ? std::string_view::npos : newline - start);
    start = newline == std::string_view::npos ? text.size() + 1 : newline + 1;
    ++line_number;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    for (auto& f : fields) f = trim(f);

    if (!have_header) {
      for (std::size_t c = 0; c < kColumns.size(); ++c) {
        const auto it = std::find(fields.begin(), fields.end(), kColumns[c]);
        if (it == fields.end()) throw fail("header lacks column '" + std::string(kColumns[c]) + "'");
        position[c] = static_cast<std::size_t>(it - fields.begin());
      }
      column_count = fields.size();
      have_header = true;
      continue;
    }
    if (fields.size() != column_count) {
      throw fail("expected " + std::to_string(column_count) + " fields, found " + std::to_string(fields.size()));
    }
    PredictionRow row;
    row.sample_id = std::string(fields[position[0]]);
    const auto true_class = parse_int<int>(fields[position[1]]);
    const auto predicted = parse_int<int>(fields[position[2]]);
    const auto severity = parse_int<int>(fields[position[4]]);
    row.corruption = std::string(fields[position[3]]);
    if (!true_class || *true_class < 0) throw fail("true_class must be a non-negative integer");
    if (!predicted || *predicted < 0) throw fail("predicted_class must be a non-negative integer");
    if (!severity || *severity < 0 || *severity > kMaxSeverity) throw fail("severity must be an integer in 0..5");
    if (row.corruption.empty()) throw fail("corruption_name is empty");
    const bool clean = row.corruption == kCleanCorruption;
    if (clean != (*severity == 0)) throw fail("severity 0 is reserved for, and required by, clean rows");
    if (!clean && std::find(kCorruptions.begin(), kCorruptions.end(), row.corruption) == kCorruptions.end() &&
        warned.insert(row.corruption).second) {
      spdlog::warn("{}: unknown corruption '{}' kept under its literal name", origin, row.corruption);
    }
    row.true_class = *true_class;
    row.predicted_class = *predicted;
    row.severity = *severity;
    rows.push_back(std::move(row));
  }
  if (!have_header) throw FormatError(std::string(origin) + ": missing header", 1);
  return rows;
}

std::vector<PredictionRow> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_predictions(text.str(), path.string());
}

RobustnessReport eval_robustness(std::span<const PredictionRow> rows) {
  RobustnessReport report;
  std::map<std::pair<std::string, int>, std::pair<std::size_t, std::size_t>> cells;  // correct, total
  std::size_t clean_correct = 0;
  std::size_t corrupted_correct = 0;
  for (const auto& row : rows) {
    const bool correct = row.true_class == row.predicted_class;
    if (row.severity == 0) {
      ++report.clean_rows;
      clean_correct += correct;
      continue;
    }
    ++report.corrupted_rows;
    corrupted_correct += correct;
    auto& cell = cells[{row.corruption, row.severity}];
    cell.first += correct;
    ++cell.second;
  }
  if (report.clean_rows > 0) {
    report.clean_accuracy = static_cast<double>(clean_correct) / static_cast<double>(report.clean_rows);
  }
  if (cells.empty()) return report;

  std::vector<double> all;
  std::map<std::string, std::vector<double>> by_corruption;
  std::map<int, std::vector<double>> by_severity;
  for (const auto& [key, counts] : cells) {
    const double accuracy = static_cast<double>(counts.first) / static_cast<double>(counts.second);
    report.cells.push_back(CellAccuracy{key.first, key.second, counts.first, counts.second, accuracy});
    all.push_back(accuracy);
    by_corruption[key.first].push_back(accuracy);
    by_severity[key.second].push_back(accuracy);
  }
  report.robustness = mean(all);
  report.pooled_robustness = static_cast<double>(corrupted_correct) / static_cast<double>(report.corrupted_rows);
  for (const auto& [name, values] : by_corruption) report.per_corruption[name] = mean(values);
  for (const auto& [severity, values] : by_severity) report.per_severity[severity] = mean(values);
  return report;
}

nlohmann::ordered_json report_to_json(const RobustnessReport& report) {
  using J = nlohmann::ordered_json;
  auto optional = [](const std::optional<double>& v) { return v ? J(*v) : J(nullptr); };
  J per_corruption = J::object();
  for (const auto& [name, value] : report.per_corruption) per_corruption[name] = value;
  J per_severity = J::object();
  for (const auto& [severity, value] : report.per_severity) per_severity[std::to_string(severity)] = value;
  J cells = J::array();
  for (const auto& c : report.cells) {
    cells.push_back(J{{"corruption", c.corruption},
                      {"severity", c.severity},
                      {"correct", c.correct},
                      {"total", c.total},
                      {"accuracy", c.accuracy}});
  }
  return J{{"robustness", optional(report.robustness)},
           {"pooled_robustness", optional(report.pooled_robustness)},
           {"clean_accuracy", optional(report.clean_accuracy)},
           {"clean_rows", report.clean_rows},
           {"corrupted_rows", report.corrupted_rows},
           {"per_corruption", std::move(per_corruption)},
           {"per_severity", std::move(per_severity)},
           {"cells", std::move(cells)}};
}

std::string format_report(const RobustnessReport& report) {
  std::string out;
  auto line = [&](std::string_view label, const std::optional<double>& v) {
    out += fmt::format("{:<22}{}\n", label, v ? percent(*v) : std::string("n/a"));
  };
  line("robustness (cell mean)", report.robustness);
  line("robustness (pooled)", report.pooled_robustness);
  line("clean accuracy", report.clean_accuracy);
  if (!report.per_severity.empty()) {
    out += "per severity:\n";
    for (const auto& [severity, value] : report.per_severity) out += fmt::format("  {:<20}{}\n", severity, percent(value));
  }
  if (!report.per_corruption.empty()) {
    out += "per corruption:\n";
    for (const auto& [name, value] : report.per_corruption) out += fmt::format("  {:<20}{}\n", name, percent(value));
  }
  return out;
}

}  // namespace softaug
