#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "softaug/dataset.hpp"
#include "softaug/pipeline.hpp"

namespace softaug::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

struct DatasetSpec {
  DatasetSource source = DatasetSource::Cifar10;
  std::vector<std::filesystem::path> paths;
};

/// `cifar10:PATH[,PATH...]`, `cifar100:PATH[,PATH...]` or `folder:PATH`.
DatasetSpec parse_dataset_spec(std::string_view text);
/// Number of classes without decoding any images.
int dataset_class_count(const DatasetSpec& spec);
DatasetHandle open_dataset(const DatasetSpec& spec);

struct StageToken {
  std::string name;  // ta, re, rc, gauss, pgauss, flip
  bool soft = false;
};

/// `ta:soft,re:hard,flip` (a bare name is hard).
std::vector<StageToken> parse_stage_list(std::string_view text);

/// Everything an augment or preview run depends on. Serialized to config.json.
struct RunConfig {
  std::string dataset;
  std::string stages;
  std::string order = "canonical";  // or "listed"
  std::string profile = "poly-chance";
  std::string profile_dir;
  bool reweight = false;
  bool floor_at_chance = false;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t error_budget = 0;
  std::optional<std::size_t> limit;
  double re_prob = 0.5;
  std::string re_area = "0.02:0.33";
  std::string re_aspect = "0.3:3.3";
  int rc_padding = 4;
  double gauss_sigma = 0.1;
  double pgauss_sigma = 1.0;
  int pgauss_side = 25;
  double flip_prob = 0.5;
};

nlohmann::ordered_json config_to_json(const RunConfig& config);
/// Throws ConfigError on unknown or mistyped fields.
RunConfig config_from_json(const nlohmann::ordered_json& j);

/// Stage list in execution order, with parameters from the config. Canonical order is
/// flip, rc, ta, re, gauss, pgauss.
std::vector<PolicyStage> build_stages(const RunConfig& config);

/// Validates the whole config (dataset syntax and existence, stages, profile coverage).
Pipeline build_pipeline(const RunConfig& config, int class_count);

/// Confidence as shown in preview captions: three decimals.
std::string format_confidence(double confidence);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv);

}  // namespace softaug::cli
