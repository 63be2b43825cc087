#include "cli.hpp"

#include <spdlog/fmt/fmt.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "softaug/confidence.hpp"
#include "softaug/errors.hpp"
#include "softaug/manifest.hpp"
#include "softaug/robustness.hpp"
#include "softaug/simmetrics.hpp"

#ifndef SOFTAUG_DATA_DIR
#define SOFTAUG_DATA_DIR "data/profiles"
#endif

namespace softaug::cli {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::vector<std::string> split_list(std::string_view text, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(sep, start);
    const auto piece = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    const auto first = piece.find_first_not_of(" \t");
    if (first != std::string_view::npos) {
      const auto last = piece.find_last_not_of(" \t");
      out.emplace_back(piece.substr(first, last - first + 1));
    }
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& text, std::string_view field) {
  try {
    std::size_t used = 0;
    const double value = std::stod(text, &used);
    if (used == text.size()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError(std::string(field) + ": '" + text + "' is not a number");
}

std::pair<double, double> parse_range(const std::string& text, std::string_view field) {
  const auto parts = split_list(text, ':');
  if (parts.size() != 2) throw ConfigError(std::string(field) + ": expected lo:hi, got '" + text + "'");
  return {parse_number(parts[0], field), parse_number(parts[1], field)};
}

int stage_rank(std::string_view name) {
  static constexpr std::array<std::string_view, 6> kOrder = {"flip", "rc", "ta", "re", "gauss", "pgauss"};
  return static_cast<int>(std::find(kOrder.begin(), kOrder.end(), name) - kOrder.begin());
}

void configure_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  std::shared_ptr<spdlog::logger> logger;
  if (std::getenv("NO_COLOR") != nullptr) {
    logger = spdlog::stderr_logger_mt("softaug");
  } else {
    logger = spdlog::stderr_color_mt("softaug");
  }
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  if (const char* level = std::getenv("SOFTAUG_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  } else {
    spdlog::set_level(spdlog::level::warn);
  }
}

/// Finds `--config PATH` or `--config=PATH` ahead of the real parse so its values act as defaults.
std::optional<std::string> prescan_config(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.starts_with("--config=")) return std::string(arg.substr(9));
  }
  return std::nullopt;
}

RunConfig load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config: cannot open " + path.string());
  try {
    return config_from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("--config: " + path.string() + ": " + e.what());
  }
}

void add_run_options(CLI::App* cmd, RunConfig& c, std::string& config_path) {
  cmd->add_option("--config", config_path, "Re-run from a saved config.json; other flags override it");
  cmd->add_option("--dataset", c.dataset, "cifar10:PATH[,PATH], cifar100:PATH[,PATH] or folder:PATH");
  cmd->add_option("--stages", c.stages, "Comma list of ta, re, rc, gauss, pgauss, flip, each with :soft or :hard");
  cmd->add_option("--order", c.order, "canonical (flip, rc, ta, re, noise) or listed")
      ->check(CLI::IsMember({"canonical", "listed"}));
  cmd->add_option("--profile", c.profile, "Mapping preset or profile file");
  cmd->add_option("--profile-dir", c.profile_dir, "Directory holding data-backed presets");
  cmd->add_flag("--reweight", c.reweight, "Weight each sample's loss by its confidence");
  cmd->add_flag("--floor-at-chance", c.floor_at_chance, "Never let label confidence drop below chance");
  cmd->add_option("--seed", c.seed, "Global seed");
  cmd->add_option("--workers", c.workers, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--error-budget", c.error_budget, "Undecodable samples tolerated before aborting");
  cmd->add_option("--limit", c.limit, "Only process the first N samples");
  cmd->add_option("--re-prob", c.re_prob, "Random Erasing probability");
  cmd->add_option("--re-area", c.re_area, "Random Erasing area range lo:hi");
  cmd->add_option("--re-aspect", c.re_aspect, "Random Erasing aspect range lo:hi");
  cmd->add_option("--rc-padding", c.rc_padding, "Random Crop padding in pixels");
  cmd->add_option("--gauss-sigma", c.gauss_sigma, "Gaussian noise standard deviation");
  cmd->add_option("--pgauss-sigma", c.pgauss_sigma, "Patch Gaussian standard deviation");
  cmd->add_option("--pgauss-side", c.pgauss_side, "Patch Gaussian patch side");
  cmd->add_option("--flip-prob", c.flip_prob, "Horizontal flip probability");
}

fs::path profile_dir(const RunConfig& c) {
  return c.profile_dir.empty() ? fs::path(SOFTAUG_DATA_DIR) : fs::path(c.profile_dir);
}

void require_dataset(const RunConfig& c) {
  if (c.dataset.empty()) throw ConfigError("--dataset is required");
}

Json header_for(const RunConfig& config, const Pipeline& pipeline) {
  Json stages = Json::array();
  for (const auto& s : pipeline.stages()) stages.push_back(Json{{"stage", stage_name(s.config)}, {"soft", s.soft}});
  // Worker count is left out so manifests match across parallelism levels.
  Json settings = config_to_json(config);
  settings.erase("workers");
  return Json{{"profile", pipeline.profile().name()},
              {"class_count", pipeline.profile().class_count()},
              {"stages", std::move(stages)},
              {"config", std::move(settings)}};
}

int cmd_augment(RunConfig config, const std::string& out) {
  require_dataset(config);
  if (out.empty()) throw ConfigError("--out is required");
  const DatasetSpec spec = parse_dataset_spec(config.dataset);
  const Pipeline pipeline = build_pipeline(config, dataset_class_count(spec));

  const fs::path out_dir(out);
  if (fs::exists(out_dir / kManifestFile)) {
    throw ConfigError("--out: " + out_dir.string() + " already holds a manifest; choose an empty directory");
  }
  fs::create_directories(out_dir);
  {
    std::ofstream cfg(out_dir / "config.json");
    cfg << config_to_json(config).dump(2) << '\n';
    if (!cfg) throw IoError("cannot write " + (out_dir / "config.json").string());
  }

  const DatasetHandle dataset = open_dataset(spec);
  ManifestWriter writer(out_dir, header_for(config, pipeline));
  std::map<std::string, std::size_t> applied;
  double confidence_sum = 0.0;
  DatasetRunOptions options;
  options.global_seed = config.seed;
  options.workers = config.workers;
  options.error_budget = config.error_budget;
  options.limit = config.limit;
  const DatasetRunSummary summary =
      augment_dataset(dataset, pipeline, options, [&](const Image& image, const AugmentationRecord& record) {
        writer.write(image, record);
        confidence_sum += record.soft_label.confidence;
        for (const auto& s : record.stages) {
          if (s.spec.applied) ++applied[std::string(kind_name(s.spec.kind))];
        }
      });
  writer.finish();

  std::cout << "samples: " << summary.processed << '\n';
  if (summary.failed > 0) std::cout << "failed: " << summary.failed << '\n';
  const double mean = summary.processed ? confidence_sum / static_cast<double>(summary.processed) : 1.0;
  std::cout << fmt::format("mean confidence: {:.6f}\n", mean);
  std::cout << "applied transforms:\n";
  for (const auto& [kind, count] : applied) std::cout << fmt::format("  {:<20}{}\n", kind, count);
  return kExitOk;
}

struct CurvesArgs {
  std::string dataset;
  std::string kinds = "all";
  std::string metrics = "all";
  int bins = kTrivialAugmentLevels;
  int pairs = 500;
  std::uint64_t seed = 0;
  int workers = 1;
  std::size_t images = 1000;
  std::string out;
};

int cmd_curves(const CurvesArgs& args) {
  if (args.dataset.empty()) throw ConfigError("--dataset is required");
  if (args.out.empty()) throw ConfigError("--out is required");
  if (args.bins < 2) throw ConfigError("--bins must be at least 2");
  if (args.pairs < 1) throw ConfigError("--pairs must be positive");

  std::vector<std::pair<TransformKind, MetricKind>> jobs;
  const bool all_kinds = args.kinds == "all";
  const bool all_metrics = args.metrics == "all";
  std::vector<TransformKind> kinds;
  if (all_kinds) {
    for (TransformKind k : trivial_augment_kinds()) kinds.push_back(k);
  } else {
    for (const auto& name : split_list(args.kinds)) {
      const auto k = parse_kind(name);
      if (!k) throw ConfigError("--kinds: unknown transform '" + name + "'");
      kinds.push_back(*k);
    }
  }
  std::vector<MetricKind> metrics;
  if (all_metrics) {
    metrics = {MetricKind::SSIM, MetricKind::NCC, MetricKind::SCC, MetricKind::UIQ, MetricKind::SiftRetention};
  } else {
    for (const auto& name : split_list(args.metrics)) {
      const auto m = parse_metric(name);
      if (!m) throw ConfigError("--metrics: unknown metric '" + name + "'");
      metrics.push_back(*m);
    }
  }
  for (TransformKind k : kinds) {
    for (MetricKind m : metrics) {
      try {
        check_curve_compatible(k, m);
      } catch (const ConfigError&) {
        if (all_kinds || all_metrics) continue;
        throw;
      }
      jobs.emplace_back(k, m);
    }
  }
  if (jobs.empty()) throw ConfigError("no compatible (kind, metric) pairs selected");

  const DatasetSpec spec = parse_dataset_spec(args.dataset);
  const DatasetHandle dataset = open_dataset(spec);
  const std::size_t pool_size = std::min(args.images, dataset.size());
  if (pool_size == 0) throw ConfigError("--dataset: no images to build curves from");
  std::vector<Image> pool;
  pool.reserve(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) pool.push_back(dataset.sample(i).image);

  const fs::path out_dir(args.out);
  fs::create_directories(out_dir);
  CurveOptions options;
  options.bins = args.bins;
  options.n_pairs = args.pairs;
  options.seed = args.seed;
  options.chance = 1.0 / dataset.class_count();
  options.workers = args.workers;
  for (const auto& [kind, metric] : jobs) {
    const MappingCurve curve = build_curve(pool, kind, metric, options);
    const std::string stem = fmt::format("{}_{}", kind_name(kind), metric_name(metric));
    const std::vector<std::string> comments = {
        fmt::format("{} measured with {}", kind_name(kind), metric_name(metric)),
        fmt::format("bins={} pairs={} seed={} images={} chance={}", args.bins, args.pairs, args.seed, pool_size,
                    options.chance)};
    write_mapping_table(out_dir / (stem + ".csv"), curve.to_table(), comments);
    std::ofstream dat(out_dir / (stem + ".dat"));
    dat << format_plot_data(curve, options.ranges);
    if (!dat) throw IoError("cannot write " + (out_dir / (stem + ".dat")).string());
    std::cout << stem << '\n';
  }
  return kExitOk;
}

cv::Mat to_bgr(const Image& img) {
  cv::Mat m(img.height(), img.width(), img.channels() == 1 ? CV_8UC1 : CV_8UC3);
  std::copy(img.data().begin(), img.data().end(), m.data);
  cv::Mat bgr;
  cv::cvtColor(m, bgr, img.channels() == 1 ? cv::COLOR_GRAY2BGR : cv::COLOR_RGB2BGR);
  return bgr;
}

std::vector<std::string> caption_lines(const AugmentationRecord& record, const DatasetHandle& dataset) {
  std::string ta = "TA -";
  std::string re = "RE -";
  for (const auto& s : record.stages) {
    if (s.stage == "ta") ta = std::string(kind_name(s.spec.kind));
    if (s.stage == "re") re = s.spec.applied ? "RE yes" : "RE no";
  }
  return {ta, re, dataset.class_name(record.true_class), format_confidence(record.soft_label.confidence)};
}

int cmd_preview(RunConfig config, const std::string& grid, int scale, const std::string& out) {
  require_dataset(config);
  if (out.empty()) throw ConfigError("--out is required");
  const auto parts = split_list(grid, 'x');
  int rows = 0;
  int cols = 0;
  if (parts.size() == 2) {
    rows = static_cast<int>(parse_number(parts[0], "--grid"));
    cols = static_cast<int>(parse_number(parts[1], "--grid"));
  }
  if (rows < 1 || cols < 1) throw ConfigError("--grid: expected ROWSxCOLS with both at least 1, got '" + grid + "'");
  if (scale < 1) throw ConfigError("--tile-scale must be positive");

  const DatasetSpec spec = parse_dataset_spec(config.dataset);
  const Pipeline pipeline = build_pipeline(config, dataset_class_count(spec));
  const DatasetHandle dataset = open_dataset(spec);
  if (dataset.size() == 0) throw ConfigError("--dataset: no images to preview");
  const auto cells = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (dataset.size() < cells) {
    spdlog::warn("dataset has {} samples for a {}x{} grid; repeating samples", dataset.size(), rows, cols);
  }

  const Sample first = dataset.sample(0);
  const int tile_w = first.image.width() * scale;
  const int tile_h = first.image.height() * scale;
  constexpr int kLineHeight = 14;
  constexpr int kMargin = 4;
  const int caption_h = 4 * kLineHeight + kMargin;
  const int cell_w = tile_w + 2 * kMargin;
  const int cell_h = tile_h + caption_h + kMargin;
  cv::Mat canvas(rows * cell_h, cols * cell_w, CV_8UC3, cv::Scalar(255, 255, 255));

  for (std::size_t cell = 0; cell < cells; ++cell) {
    const Sample sample = dataset.sample(cell % dataset.size());
    const auto [image, record] = pipeline.run(sample.image, sample.label, config.seed, cell);
    cv::Mat tile;
    cv::resize(to_bgr(image), tile, cv::Size(tile_w, tile_h), 0, 0, cv::INTER_NEAREST);
    const int x0 = static_cast<int>(cell % static_cast<std::size_t>(cols)) * cell_w + kMargin;
    const int y0 = static_cast<int>(cell / static_cast<std::size_t>(cols)) * cell_h + kMargin;
    tile.copyTo(canvas(cv::Rect(x0, y0, tile_w, tile_h)));
    int y = y0 + tile_h + kLineHeight;
    for (const auto& line : caption_lines(record, dataset)) {
      cv::putText(canvas, line, cv::Point(x0, y), cv::FONT_HERSHEY_PLAIN, 0.9, cv::Scalar(0, 0, 0), 1, cv::LINE_8);
      y += kLineHeight;
    }
  }

  cv::Mat rgb;
  cv::cvtColor(canvas, rgb, cv::COLOR_BGR2RGB);
  Image composite(rgb.cols, rgb.rows, 3, std::vector<std::uint8_t>(rgb.data, rgb.data + rgb.total() * 3));
  const fs::path out_path(out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  write_png(out_path, composite);
  std::cout << out_path.string() << '\n';
  return kExitOk;
}

int cmd_eval_robust(const std::string& predictions, const std::string& report_path) {
  if (predictions.empty()) throw ConfigError("a predictions file is required");
  if (!fs::is_regular_file(predictions)) throw ConfigError("predictions file " + predictions + " does not exist");
  const auto rows = read_predictions(predictions);
  const RobustnessReport report = eval_robustness(rows);
  std::cout << format_report(report);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw IoError("cannot write " + report_path);
  }
  return kExitOk;
}

int cmd_fit(const std::string& profile_name, const std::string& dir, int classes, int bins) {
  if (classes < 2) throw ConfigError("--classes must be at least 2");
  const fs::path data_dir = dir.empty() ? fs::path(SOFTAUG_DATA_DIR) : fs::path(dir);
  const MappingProfile profile = load_mapping_profile(profile_name, classes, data_dir);
  for (TransformKind kind : trivial_augment_kinds()) {
    if (!profile.has(kind) || std::holds_alternative<ConstantOne>(profile.at(kind))) continue;
    const PolynomialFit fit = fit_polynomial(profile.at(kind), bins);
    std::cout << fmt::format("{} = poly:{:.4f}:{:.4f}  # squared error {:.3g}\n", kind_name(kind), fit.k, fit.p_min,
                             fit.squared_error);
  }
  return kExitOk;
}

}  // namespace

DatasetSpec parse_dataset_spec(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ConfigError("--dataset: expected cifar10:PATH, cifar100:PATH or folder:PATH, got '" + std::string(text) + "'");
  }
  const std::string_view kind = text.substr(0, colon);
  DatasetSpec spec;
  if (kind == "cifar10") {
    spec.source = DatasetSource::Cifar10;
  } else if (kind == "cifar100") {
    spec.source = DatasetSource::Cifar100;
  } else if (kind == "folder") {
    spec.source = DatasetSource::ImageFolder;
  } else {
    throw ConfigError("--dataset: unknown source '" + std::string(kind) + "'");
  }
  const std::string_view rest = text.substr(colon + 1);
  if (spec.source == DatasetSource::ImageFolder) {
    spec.paths.emplace_back(std::string(rest));
  } else {
    for (const auto& p : split_list(rest)) spec.paths.emplace_back(p);
  }
  if (spec.paths.empty() || spec.paths.front().empty()) throw ConfigError("--dataset: missing path");
  for (const auto& p : spec.paths) {
    const bool ok = spec.source == DatasetSource::ImageFolder ? fs::is_directory(p) : fs::is_regular_file(p);
    if (!ok) throw ConfigError("--dataset: " + p.string() + " does not exist");
  }
  return spec;
}

int dataset_class_count(const DatasetSpec& spec) {
  switch (spec.source) {
    case DatasetSource::Cifar10:
      return 10;
    case DatasetSource::Cifar100:
      return 100;
    default:
      break;
  }
  int count = 0;
  for (const auto& entry : fs::directory_iterator(spec.paths.front())) count += entry.is_directory();
  if (count < 2) throw ConfigError("--dataset: an image folder needs at least two class directories");
  return count;
}

DatasetHandle open_dataset(const DatasetSpec& spec) {
  switch (spec.source) {
    case DatasetSource::Cifar10:
      return load_cifar(spec.paths, CifarVariant::Cifar10);
    case DatasetSource::Cifar100:
      return load_cifar(spec.paths, CifarVariant::Cifar100);
    default:
      return load_image_folder(spec.paths.front());
  }
}

std::vector<StageToken> parse_stage_list(std::string_view text) {
  std::vector<StageToken> out;
  for (const auto& item : split_list(text)) {
    const auto parts = split_list(item, ':');
    if (parts.empty() || parts.size() > 2) throw ConfigError("--stages: cannot parse '" + item + "'");
    StageToken token{parts[0], false};
    if (stage_rank(token.name) == 6) throw ConfigError("--stages: unknown stage '" + token.name + "'");
    if (parts.size() == 2) {
      if (parts[1] == "soft") {
        token.soft = true;
      } else if (parts[1] != "hard") {
        throw ConfigError("--stages: '" + item + "' must end in :soft or :hard");
      }
    }
    out.push_back(std::move(token));
  }
  return out;
}

Json config_to_json(const RunConfig& c) {
  return Json{{"dataset", c.dataset},
              {"stages", c.stages},
              {"order", c.order},
              {"profile", c.profile},
              {"profile_dir", c.profile_dir},
              {"reweight", c.reweight},
              {"floor_at_chance", c.floor_at_chance},
              {"seed", c.seed},
              {"workers", c.workers},
              {"error_budget", c.error_budget},
              {"limit", c.limit ? Json(*c.limit) : Json(nullptr)},
              {"re_prob", c.re_prob},
              {"re_area", c.re_area},
              {"re_aspect", c.re_aspect},
              {"rc_padding", c.rc_padding},
              {"gauss_sigma", c.gauss_sigma},
              {"pgauss_sigma", c.pgauss_sigma},
              {"pgauss_side", c.pgauss_side},
              {"flip_prob", c.flip_prob}};
}

RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  const Json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (!defaults.contains(key)) throw ConfigError("config: unknown field '" + key + "'");
  }
  auto get = [&](const char* key, auto& target) {
    if (!j.contains(key)) return;
    try {
      j.at(key).get_to(target);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("config: field '") + key + "' has the wrong type");
    }
  };
  get("dataset", c.dataset);
  get("stages", c.stages);
  get("order", c.order);
  get("profile", c.profile);
  get("profile_dir", c.profile_dir);
  get("reweight", c.reweight);
  get("floor_at_chance", c.floor_at_chance);
  get("seed", c.seed);
  get("workers", c.workers);
  get("error_budget", c.error_budget);
  if (j.contains("limit") && !j.at("limit").is_null()) {
    std::size_t limit = 0;
    get("limit", limit);
    c.limit = limit;
  }
  get("re_prob", c.re_prob);
  get("re_area", c.re_area);
  get("re_aspect", c.re_aspect);
  get("rc_padding", c.rc_padding);
  get("gauss_sigma", c.gauss_sigma);
  get("pgauss_sigma", c.pgauss_sigma);
  get("pgauss_side", c.pgauss_side);
  get("flip_prob", c.flip_prob);
  return c;
}

std::vector<PolicyStage> build_stages(const RunConfig& c) {
  if (c.order != "canonical" && c.order != "listed") throw ConfigError("--order must be canonical or listed");
  std::vector<StageToken> tokens = parse_stage_list(c.stages);
  // Ranges are checked even when no re stage is listed, so a bad config.json never lingers.
  const auto area = parse_range(c.re_area, "--re-area");
  const auto aspect = parse_range(c.re_aspect, "--re-aspect");
  if (c.order == "canonical") {
    std::stable_sort(tokens.begin(), tokens.end(),
                     [](const StageToken& a, const StageToken& b) { return stage_rank(a.name) < stage_rank(b.name); });
  }
  std::vector<PolicyStage> stages;
  for (const auto& t : tokens) {
    StageConfig config;
    if (t.name == "ta") {
      config = TrivialAugmentStage{};
    } else if (t.name == "re") {
      RandomEraseStage re;
      re.prob = c.re_prob;
      std::tie(re.erase.area_lo, re.erase.area_hi) = area;
      std::tie(re.erase.aspect_lo, re.erase.aspect_hi) = aspect;
      config = re;
    } else if (t.name == "rc") {
      config = RandomCropStage{c.rc_padding};
    } else if (t.name == "gauss") {
      config = GaussianStage{c.gauss_sigma};
    } else if (t.name == "pgauss") {
      config = PatchGaussianStage{c.pgauss_sigma, c.pgauss_side};
    } else {
      config = HorizontalFlipStage{c.flip_prob};
    }
    validate_stage(config);
    stages.push_back(PolicyStage{config, t.soft});
  }
  return stages;
}

Pipeline build_pipeline(const RunConfig& c, int class_count) {
  if (c.workers < 1) throw ConfigError("--workers must be at least 1");
  std::vector<PolicyStage> stages = build_stages(c);
  MappingProfile profile = load_mapping_profile(c.profile, class_count, profile_dir(c));
  return Pipeline(std::move(stages), std::move(profile), PipelineOptions{c.reweight, c.floor_at_chance});
}

std::string format_confidence(double confidence) { return fmt::format("{:.3f}", confidence); }

int run(int argc, const char* const* argv) {
  configure_logging();
  CLI::App app{"softaug: soft augmentation with adaptive label smoothing"};
  app.require_subcommand(1);

  RunConfig augment_config;
  std::string augment_config_path;
  std::string augment_out;
  auto* augment = app.add_subcommand("augment", "Augment a dataset and write a manifest with soft labels");
  add_run_options(augment, augment_config, augment_config_path);
  augment->add_option("--out", augment_out, "Output directory");

  CurvesArgs curves_args;
  auto* curves = app.add_subcommand("curves", "Build magnitude-to-confidence tables from image similarity");
  curves->add_option("--dataset", curves_args.dataset, "Image source, as for augment");
  curves->add_option("--kinds", curves_args.kinds, "Comma list of TrivialAugment kinds, or all");
  curves->add_option("--metrics", curves_args.metrics, "Comma list of ssim, ncc, scc, uiq, sift, or all");
  curves->add_option("--bins", curves_args.bins, "Magnitude bins");
  curves->add_option("--pairs", curves_args.pairs, "Image pairs per bin");
  curves->add_option("--seed", curves_args.seed, "Seed");
  curves->add_option("--workers", curves_args.workers, "Worker threads")->check(CLI::PositiveNumber);
  curves->add_option("--images", curves_args.images, "Images drawn from the start of the dataset");
  curves->add_option("--out", curves_args.out, "Output directory");

  RunConfig preview_config;
  std::string preview_config_path;
  std::string grid = "2x4";
  int tile_scale = 4;
  std::string preview_out;
  auto* preview = app.add_subcommand("preview", "Render a captioned grid of augmented samples");
  add_run_options(preview, preview_config, preview_config_path);
  preview->add_option("--grid", grid, "ROWSxCOLS");
  preview->add_option("--tile-scale", tile_scale, "Nearest-neighbour upscaling of each tile");
  preview->add_option("--out", preview_out, "Output PNG");

  std::string predictions;
  std::string report_path;
  auto* eval = app.add_subcommand("eval-robust", "Corruption robustness from a predictions file");
  eval->add_option("predictions", predictions, "CSV with sample_id,true_class,predicted_class,corruption_name,severity");
  eval->add_option("--report", report_path, "Write the report as JSON");

  std::string fit_profile = "hvs";
  std::string fit_dir;
  int fit_classes = 10;
  int fit_bins = kTrivialAugmentLevels;
  auto* fit = app.add_subcommand("fit", "Fit polynomial mappings to a profile's tables");
  fit->add_option("--profile", fit_profile, "Preset or profile file");
  fit->add_option("--profile-dir", fit_dir, "Directory holding data-backed presets");
  fit->add_option("--classes", fit_classes, "Class count (sets chance)");
  fit->add_option("--bins", fit_bins, "Magnitude bins");

  try {
    if (const auto path = prescan_config(argc, argv)) {
      augment_config = load_config_file(*path);
      preview_config = augment_config;
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (augment->parsed()) return cmd_augment(augment_config, augment_out);
    if (curves->parsed()) return cmd_curves(curves_args);
    if (preview->parsed()) return cmd_preview(preview_config, grid, tile_scale, preview_out);
    if (eval->parsed()) return cmd_eval_robust(predictions, report_path);
    if (fit->parsed()) return cmd_fit(fit_profile, fit_dir, fit_classes, fit_bins);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace softaug::cli
