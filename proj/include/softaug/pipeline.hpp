#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "softaug/confidence.hpp"
#include "softaug/dataset.hpp"
#include "softaug/labels.hpp"
#include "softaug/rng.hpp"
#include "softaug/transforms.hpp"

namespace softaug {

struct TrivialAugmentStage {
  TaRanges ranges{};
};
struct RandomEraseStage {
  double prob = 0.5;
  EraseOptions erase{};
};
struct RandomCropStage {
  int padding = 4;
};
struct GaussianStage {
  double sigma = 0.1;
};
struct PatchGaussianStage {
  double sigma = 1.0;
  int patch_side = 25;
};
struct HorizontalFlipStage {
  double prob = 0.5;
};

using StageConfig = std::variant<TrivialAugmentStage, RandomEraseStage, RandomCropStage, GaussianStage,
                                 PatchGaussianStage, HorizontalFlipStage>;

struct PolicyStage {
  StageConfig config;
  bool soft = false;
};

/// Short names used on the command line and in manifests: ta, re, rc, gauss, pgauss, flip.
std::string_view stage_name(const StageConfig& config) noexcept;
/// Kinds a stage can emit, i.e. the kinds a profile must cover when the stage is soft.
std::vector<TransformKind> stage_kinds(const StageConfig& config);
/// Throws ConfigError when a stage parameter is out of range.
void validate_stage(const StageConfig& config);

struct TaDraw {
  TransformKind kind = TransformKind::Identity;
  int level = 0;
};

/// Uniform kind over the 14 TrivialAugment kinds, then uniform level over 0..30.
TaDraw ta_sample(Rng& rng);

struct StageOutcome {
  std::string stage;
  bool soft = false;
  TransformSpec spec;
  double confidence = 1.0;
};

struct AugmentationRecord {
  std::uint64_t sample_id = 0;
  int true_class = 0;
  int class_count = 2;
  std::vector<StageOutcome> stages;
  double composed_confidence = 1.0;
  SoftLabel soft_label;
  double loss_weight = 1.0;
  std::uint64_t global_seed = 0;
  std::uint64_t sample_index = 0;

  std::vector<double> stage_confidences() const;
};

/// Confidence a stage contributes: 1 for hard stages and for stages that did not fire, otherwise
/// the profile's mapping at the realized phi.
double stage_confidence(const TransformSpec& spec, bool soft, const MappingProfile& profile);

struct PipelineOptions {
  bool reweight = false;
  /// Raise the label confidence to 1 / class_count when the product falls below it. The record's
  /// composed_confidence stays the plain product.
  bool floor_at_chance = false;
};

/// Composes already-realized stage outcomes into a record. Useful on its own for forcing phi.
AugmentationRecord assemble_record(std::vector<StageOutcome> stages, int true_class, int class_count,
                                   const PipelineOptions& options = {});

/// Immutable stage list plus profile, validated once. Safe to share between threads.
class Pipeline {
 public:
  /// Throws ConfigError for bad stage parameters or when a soft stage's kinds are missing from
  /// the profile.
  Pipeline(std::vector<PolicyStage> stages, MappingProfile profile, PipelineOptions options = {});

  /// Stage i draws from Rng::derive(global_seed, {sample_index, i}).
  std::pair<Image, AugmentationRecord> run(const Image& img, int true_class, std::uint64_t global_seed,
                                           std::uint64_t sample_index) const;

  const std::vector<PolicyStage>& stages() const noexcept { return stages_; }
  const MappingProfile& profile() const noexcept { return profile_; }
  const PipelineOptions& options() const noexcept { return options_; }

 private:
  std::vector<PolicyStage> stages_;
  MappingProfile profile_;
  PipelineOptions options_;
};

/// One-off form of Pipeline::run. class_count must match the profile's.
std::pair<Image, AugmentationRecord> augment_sample(const Image& img, int true_class, int class_count,
                                                    const std::vector<PolicyStage>& stages,
                                                    const MappingProfile& profile, const PipelineOptions& options,
                                                    std::uint64_t global_seed, std::uint64_t sample_index);

struct DatasetRunOptions {
  std::uint64_t global_seed = 0;
  int workers = 1;
  /// Failed samples tolerated before the run aborts with IoError.
  std::size_t error_budget = 0;
  std::optional<std::size_t> limit;
  std::size_t block = 256;
};

struct SampleError {
  std::uint64_t sample_id = 0;
  std::string source;
  std::string message;
};

struct DatasetRunSummary {
  std::size_t processed = 0;
  std::size_t failed = 0;
};

using RecordSink = std::function<void(const Image&, const AugmentationRecord&)>;
using ErrorSink = std::function<void(const SampleError&)>;

/// Augments samples 0..n-1 and hands them to `sink` in index order, whatever the worker count.
/// Decode failures are reported through `on_error` and skipped.
DatasetRunSummary augment_dataset(const DatasetHandle& dataset, const Pipeline& pipeline,
                                  const DatasetRunOptions& options, const RecordSink& sink,
                                  const ErrorSink& on_error = {});

}  // namespace softaug
