#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "softaug/transforms.hpp"

namespace softaug {

/// confidence = 1 - phi^k * (1 - p_min)
struct Polynomial {
  double k = 2.0;
  double p_min = 0.0;
};

struct TablePoint {
  double phi = 0.0;
  double confidence = 1.0;
};

/// Piecewise-linear table. Construct through make_table(), which enforces the invariants:
/// first point (0, 1), strictly increasing phi inside [0, 1], confidences inside [0, 1].
struct InterpolatedTable {
  std::vector<TablePoint> points;
};

struct ConstantOne {};

using ConfidenceMapping = std::variant<Polynomial, InterpolatedTable, ConstantOne>;

/// Throws ContractViolation for phi outside [0, 1], k <= 0 or p_min outside [0, 1].
double poly_confidence(double phi, double k, double p_min);

/// Linear interpolation; phi past the last point clamps to its confidence.
double interp_confidence(double phi, const InterpolatedTable& table);

double evaluate(const ConfidenceMapping& mapping, double phi);

/// Product of the confidences; 1.0 for an empty list.
double compose_confidences(std::span<const double> confidences);

/// Validates and builds a table. Throws ConfigError; warns (does not fail) on non-monotone data.
InterpolatedTable make_table(std::vector<TablePoint> points, std::string_view origin = "table");

/// Mapping-table file: optional '#' comment lines, header `phi,confidence`, one row per point.
InterpolatedTable read_mapping_table(const std::filesystem::path& path);
std::string format_mapping_table(const InterpolatedTable& table, std::span<const std::string> comments = {});
void write_mapping_table(const std::filesystem::path& path, const InterpolatedTable& table,
                         std::span<const std::string> comments = {});

/// Per-kind assignment of mappings for one class count.
class MappingProfile {
 public:
  explicit MappingProfile(int class_count);

  int class_count() const noexcept { return class_count_; }
  double chance() const noexcept { return 1.0 / class_count_; }

  /// Equalize, AutoContrast, Identity and HorizontalFlip only accept ConstantOne.
  void set(TransformKind kind, ConfidenceMapping mapping);
  bool has(TransformKind kind) const noexcept { return mappings_[kind_index(kind)].has_value(); }
  /// Throws ConfigError naming the kind when unassigned.
  const ConfidenceMapping& at(TransformKind kind) const;
  double confidence(TransformKind kind, double phi) const { return evaluate(at(kind), phi); }

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

 private:
  int class_count_;
  std::string name_;
  std::array<std::optional<ConfidenceMapping>, kTransformKindCount> mappings_;
};

/// Built-in preset names accepted by load_mapping_profile().
std::span<const std::string_view> preset_names() noexcept;

/// Parses one mapping expression: `one`, `poly:<k>:<p_min|chance>` or `table:<path>`.
/// Relative table paths resolve against base_dir.
ConfidenceMapping parse_mapping(std::string_view expression, double chance,
                                const std::filesystem::path& base_dir);

/// Loads a preset (`poly-chance`, `poly-0.7`, `poly-noise`, `hvs`, `model-accuracy`, `k-est`) or a
/// profile file of `Kind = expression` lines with an optional `preset = <name>` base line. Data-backed
/// presets are read from `<data_dir>/<preset>.profile`.
MappingProfile load_mapping_profile(std::string_view preset_or_path, int class_count,
                                    const std::filesystem::path& data_dir);

struct PolynomialFit {
  double k = 2.0;
  double p_min = 0.0;
  double squared_error = 0.0;
};

/// Least-squares (k, p_min) over `bins` equally spaced magnitudes in [0, 1].
PolynomialFit fit_polynomial(const ConfidenceMapping& target, int bins = kTrivialAugmentLevels);

}  // namespace softaug
