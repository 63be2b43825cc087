#include "softaug/confidence.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "softaug/errors.hpp"
#include "util.hpp"

namespace softaug {

namespace {

constexpr std::array<std::string_view, 6> kPresets = {"poly-chance", "poly-0.7", "poly-noise",
                                                      "hvs",         "model-accuracy", "k-est"};

bool forced_constant_one(TransformKind kind) { return !has_magnitude(kind); }

MappingProfile polynomial_preset(std::string_view name, int class_count, double p_min) {
  MappingProfile profile(class_count);
  profile.set_name(std::string(name));
  for (TransformKind kind : all_kinds()) {
    if (forced_constant_one(kind)) {
      profile.set(kind, ConstantOne{});
    } else {
      profile.set(kind, Polynomial{2.0, p_min});
    }
  }
  return profile;
}

MappingProfile read_profile_file(const std::filesystem::path& path, int class_count,
                                 const std::filesystem::path& data_dir);

/// Kinds a data-backed preset must assign, and the mapping variant they must use.
void check_preset_requirements(std::string_view preset, const MappingProfile& profile) {
  auto require = [&](TransformKind kind, auto tag, std::string_view what) {
    using Wanted = decltype(tag);
    if (!profile.has(kind) || !std::holds_alternative<Wanted>(profile.at(kind))) {
      throw ConfigError("preset '" + std::string(preset) + "' requires a " + std::string(what) +
                        " for " + std::string(kind_name(kind)));
    }
  };
  if (preset == "hvs") {
    for (TransformKind kind : {TransformKind::Rotate, TransformKind::ShearX, TransformKind::ShearY,
                               TransformKind::TranslateX, TransformKind::TranslateY,
                               TransformKind::Brightness, TransformKind::Contrast}) {
      require(kind, InterpolatedTable{}, "mapping table");
    }
    for (TransformKind kind : {TransformKind::Sharpness, TransformKind::Color, TransformKind::Posterize,
                               TransformKind::Solarize}) {
      require(kind, ConstantOne{}, "constant-one mapping");
    }
  } else if (preset == "model-accuracy" || preset == "k-est") {
    for (TransformKind kind : trivial_augment_kinds()) {
      if (!has_magnitude(kind)) continue;
      if (preset == "k-est") {
        require(kind, Polynomial{}, "polynomial mapping");
      } else {
        require(kind, InterpolatedTable{}, "mapping table");
      }
    }
  }
}

MappingProfile load_named(std::string_view name, int class_count, const std::filesystem::path& data_dir) {
  const double chance = 1.0 / class_count;
  if (name == "poly-chance") return polynomial_preset(name, class_count, chance);
  if (name == "poly-0.7") return polynomial_preset(name, class_count, 0.7);
  if (name == "poly-noise") return polynomial_preset(name, class_count, 0.3);
  const auto path = data_dir / (std::string(name) + ".profile");
  if (!std::filesystem::exists(path)) {
    throw ConfigError("preset '" + std::string(name) + "' needs " + path.string() + ", which does not exist");
  }
  MappingProfile profile = read_profile_file(path, class_count, data_dir);
  check_preset_requirements(name, profile);
  profile.set_name(std::string(name));
  return profile;
}

MappingProfile read_profile_file(const std::filesystem::path& path, int class_count,
                                 const std::filesystem::path& data_dir) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile " + path.string());
  const double chance = 1.0 / class_count;
  const auto base_dir = path.parent_path();

  MappingProfile profile(class_count);
  profile.set_name(path.stem().string());
  for (TransformKind kind : all_kinds()) {
    if (forced_constant_one(kind)) profile.set(kind, ConstantOne{});
  }

  std::string line;
  int line_number = 0;
  bool any_entry = false;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view text = trim(strip_comment(line));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": expected `Kind = mapping`");
    }
    const std::string_view key = trim(text.substr(0, eq));
    const std::string_view value = trim(text.substr(eq + 1));
    if (key == "preset") {
      if (any_entry) {
        throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                          ": `preset` must be the first entry and appear once");
      }
      any_entry = true;
      const MappingProfile base = load_named(value, class_count, data_dir);
      for (TransformKind kind : all_kinds()) {
        if (base.has(kind)) profile.set(kind, base.at(kind));
      }
      profile.set_name(std::string(value) + "+" + path.stem().string());
      continue;
    }
    any_entry = true;
    const auto kind = parse_kind(key);
    if (!kind) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": unknown transform kind '" +
                        std::string(key) + "'");
    }
    try {
      profile.set(*kind, parse_mapping(value, chance, base_dir));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return profile;
}

}  // namespace

double poly_confidence(double phi, double k, double p_min) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw ContractViolation("phi must lie in [0, 1]");
  if (!(k > 0.0)) throw ContractViolation("polynomial exponent k must be positive");
  if (!(p_min >= 0.0 && p_min <= 1.0)) throw ContractViolation("p_min must lie in [0, 1]");
  return 1.0 - std::pow(phi, k) * (1.0 - p_min);
}

double interp_confidence(double phi, const InterpolatedTable& table) {
  if (!(phi >= 0.0 && phi <= 1.0)) throw ContractViolation("phi must lie in [0, 1]");
  const auto& pts = table.points;
  if (pts.empty()) throw ContractViolation("empty mapping table");
  if (phi >= pts.back().phi) return pts.back().confidence;
  const auto upper = std::upper_bound(pts.begin(), pts.end(), phi,
                                      [](double value, const TablePoint& p) { return value < p.phi; });
  const auto lower = std::prev(upper);
  const double t = (phi - lower->phi) / (upper->phi - lower->phi);
  return lower->confidence + t * (upper->confidence - lower->confidence);
}

double evaluate(const ConfidenceMapping& mapping, double phi) {
  return std::visit(
      [phi](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Polynomial>) {
          return poly_confidence(phi, m.k, m.p_min);
        } else if constexpr (std::is_same_v<T, InterpolatedTable>) {
          return interp_confidence(phi, m);
        } else {
          if (!(phi >= 0.0 && phi <= 1.0)) throw ContractViolation("phi must lie in [0, 1]");
          return 1.0;
        }
      },
      mapping);
}

double compose_confidences(std::span<const double> confidences) {
  double product = 1.0;
  for (double p : confidences) product *= p;
  return product;
}

InterpolatedTable make_table(std::vector<TablePoint> points, std::string_view origin) {
  const std::string where(origin);
  if (points.empty()) throw ConfigError(where + ": mapping table has no points");
  if (points.front().phi != 0.0 || points.front().confidence != 1.0) {
    throw ConfigError(where + ": mapping table must start at (0, 1)");
  }
  bool monotone = true;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.phi >= 0.0 && p.phi <= 1.0)) throw ConfigError(where + ": phi outside [0, 1]");
    if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw ConfigError(where + ": confidence outside [0, 1]");
    }
    if (i > 0) {
      if (!(p.phi > points[i - 1].phi)) throw ConfigError(where + ": phi must be strictly increasing");
      if (p.confidence > points[i - 1].confidence) monotone = false;
    }
  }
  if (!monotone) spdlog::warn("{}: mapping table is not non-increasing in phi", where);
  return InterpolatedTable{std::move(points)};
}

InterpolatedTable read_mapping_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mapping table " + path.string());
  std::vector<TablePoint> points;
  std::string line;
  int line_number = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (!header_seen) {
      if (text != "phi,confidence") {
        throw ConfigError(path.string() + ":" + std::to_string(line_number) +
                          ": expected header `phi,confidence`");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split(text, ',');
    std::optional<double> phi;
    std::optional<double> confidence;
    if (fields.size() == 2) {
      phi = parse_double(trim(fields[0]));
      confidence = parse_double(trim(fields[1]));
    }
    if (!phi || !confidence) {
      throw ConfigError(path.string() + ":" + std::to_string(line_number) + ": expected `phi,confidence`");
    }
    points.push_back({*phi, *confidence});
  }
  if (!header_seen) throw ConfigError(path.string() + ": missing header `phi,confidence`");
  return make_table(std::move(points), path.string());
}

std::string format_mapping_table(const InterpolatedTable& table, std::span<const std::string> comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "phi,confidence\n";
  for (const auto& p : table.points) out << format_double(p.phi) << ',' << format_double(p.confidence) << '\n';
  return out.str();
}

void write_mapping_table(const std::filesystem::path& path, const InterpolatedTable& table,
                         std::span<const std::string> comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << format_mapping_table(table, comments);
  if (!out) throw IoError("failed writing " + path.string());
}

MappingProfile::MappingProfile(int class_count) : class_count_(class_count) {
  if (class_count < 2) throw ContractViolation("class_count must be at least 2");
}

void MappingProfile::set(TransformKind kind, ConfidenceMapping mapping) {
  if (forced_constant_one(kind) && !std::holds_alternative<ConstantOne>(mapping)) {
    throw ConfigError(std::string(kind_name(kind)) + " has no magnitude and only accepts `one`");
  }
  mappings_[kind_index(kind)] = std::move(mapping);
}

const ConfidenceMapping& MappingProfile::at(TransformKind kind) const {
  const auto& slot = mappings_[kind_index(kind)];
  if (!slot) {
    throw ConfigError("mapping profile '" + name_ + "' has no mapping for " + std::string(kind_name(kind)));
  }
  return *slot;
}

std::span<const std::string_view> preset_names() noexcept { return kPresets; }

ConfidenceMapping parse_mapping(std::string_view expression, double chance,
                                const std::filesystem::path& base_dir) {
  const std::string_view expr = trim(expression);
  if (expr == "one") return ConstantOne{};
  if (expr.starts_with("table:")) {
    std::filesystem::path file(std::string(trim(expr.substr(6))));
    if (file.is_relative()) file = base_dir / file;
    return read_mapping_table(file);
  }
  if (expr.starts_with("poly:")) {
    const auto fields = split(expr.substr(5), ':');
    if (fields.size() == 2) {
      const auto k = parse_double(trim(fields[0]));
      const std::string_view p_text = trim(fields[1]);
      const auto p_min = p_text == "chance" ? std::optional<double>(chance) : parse_double(p_text);
      if (k && p_min) {
        if (!(*k > 0.0) || !(*p_min >= 0.0 && *p_min <= 1.0)) {
          throw ConfigError("polynomial needs k > 0 and p_min in [0, 1]: '" + std::string(expr) + "'");
        }
        return Polynomial{*k, *p_min};
      }
    }
  }
  throw ConfigError("cannot parse mapping '" + std::string(expr) +
                    "' (expected one, poly:<k>:<p_min|chance> or table:<path>)");
}

MappingProfile load_mapping_profile(std::string_view preset_or_path, int class_count,
                                    const std::filesystem::path& data_dir) {
  if (std::find(kPresets.begin(), kPresets.end(), preset_or_path) != kPresets.end()) {
    return load_named(preset_or_path, class_count, data_dir);
  }
  const std::filesystem::path path{std::string(preset_or_path)};
  if (!std::filesystem::exists(path)) {
    throw ConfigError("unknown profile '" + std::string(preset_or_path) +
                      "': not a preset name and no such file");
  }
  return read_profile_file(path, class_count, data_dir);
}

PolynomialFit fit_polynomial(const ConfidenceMapping& target, int bins) {
  if (bins < 2) throw ContractViolation("fit_polynomial needs at least two bins");
  std::vector<double> phis(static_cast<std::size_t>(bins));
  std::vector<double> loss(static_cast<std::size_t>(bins));  // 1 - target confidence
  for (int i = 0; i < bins; ++i) {
    phis[static_cast<std::size_t>(i)] = i / static_cast<double>(bins - 1);
    loss[static_cast<std::size_t>(i)] = 1.0 - evaluate(target, phis[static_cast<std::size_t>(i)]);
  }

  // For fixed k the optimal amplitude (1 - p_min) is a clipped linear least-squares solution.
  auto solve = [&](double k) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const double basis = std::pow(phis[i], k);
      num += basis * loss[i];
      den += basis * basis;
    }
    const double amplitude = den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const double r = amplitude * std::pow(phis[i], k) - loss[i];
      sse += r * r;
    }
    return PolynomialFit{k, 1.0 - amplitude, sse};
  };

  constexpr double kLogLo = -3.0;  // k in [0.05, 20]
  constexpr double kLogHi = 3.0;
  constexpr int kGrid = 600;
  PolynomialFit best = solve(std::exp(kLogLo));
  int best_index = 0;
  for (int i = 1; i <= kGrid; ++i) {
    const PolynomialFit candidate = solve(std::exp(kLogLo + (kLogHi - kLogLo) * i / kGrid));
    if (candidate.squared_error < best.squared_error) {
      best = candidate;
      best_index = i;
    }
  }

  // Golden-section refinement in log k around the best grid point.
  const double step = (kLogHi - kLogLo) / kGrid;
  double a = kLogLo + step * std::max(0, best_index - 1);
  double b = kLogLo + step * std::min(kGrid, best_index + 1);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a);
  double d = a + ratio * (b - a);
  for (int iter = 0; iter < 80; ++iter) {
    if (solve(std::exp(c)).squared_error < solve(std::exp(d)).squared_error) {
      b = d;
    } else {
      a = c;
    }
    c = b - ratio * (b - a);
    d = a + ratio * (b - a);
  }
  const PolynomialFit refined = solve(std::exp((a + b) / 2.0));
  return refined.squared_error <= best.squared_error ? refined : best;
}

}  // namespace softaug
