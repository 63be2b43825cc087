#include "softaug/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "softaug/errors.hpp"

namespace softaug {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void check_probability(double p, std::string_view what) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw ConfigError(std::string(what) + " must lie in [0, 1], got " + std::to_string(p));
  }
}

TransformSpec skipped(TransformKind kind, TransformParams params) {
  return TransformSpec{kind, 0.0, false, std::move(params)};
}

TransformResult run_stage(const StageConfig& config, const Image& img, Rng& rng) {
  return std::visit(
      Overloaded{
          [&](const TrivialAugmentStage& s) {
            const TaDraw draw = ta_sample(rng);
            return apply_ta_transform(img, draw.kind, draw.level, rng, s.ranges);
          },
          [&](const RandomEraseStage& s) {
            if (!rng.bernoulli(s.prob)) return TransformResult{img, skipped(TransformKind::RandomErase, EraseParams{})};
            return random_erase(img, rng, s.erase);
          },
          [&](const RandomCropStage& s) { return random_crop(img, rng, s.padding); },
          [&](const GaussianStage& s) { return gaussian_noise(img, rng, s.sigma); },
          [&](const PatchGaussianStage& s) { return patch_gaussian(img, rng, s.sigma, s.patch_side); },
          [&](const HorizontalFlipStage& s) { return horizontal_flip(img, rng, s.prob); },
      },
      config);
}

void check_profile_coverage(const std::vector<PolicyStage>& stages, const MappingProfile& profile) {
  for (const auto& stage : stages) {
    validate_stage(stage.config);
    if (!stage.soft) continue;
    for (const TransformKind kind : stage_kinds(stage.config)) {
      if (!profile.has(kind)) {
        throw ConfigError("profile '" + profile.name() + "' has no mapping for " + std::string(kind_name(kind)) +
                          ", needed by soft stage '" + std::string(stage_name(stage.config)) + "'");
      }
    }
  }
}

std::pair<Image, AugmentationRecord> run_stages(const Image& img, int true_class, int class_count,
                                                const std::vector<PolicyStage>& stages,
                                                const MappingProfile& profile, const PipelineOptions& options,
                                                std::uint64_t global_seed, std::uint64_t sample_index) {
  Image current = img;
  std::vector<StageOutcome> outcomes;
  outcomes.reserve(stages.size());
  for (std::size_t i = 0; i < stages.size(); ++i) {
    Rng rng = Rng::derive(global_seed, {sample_index, i});
    TransformResult result = run_stage(stages[i].config, current, rng);
    const double confidence = stage_confidence(result.spec, stages[i].soft, profile);
    outcomes.push_back(
        StageOutcome{std::string(stage_name(stages[i].config)), stages[i].soft, std::move(result.spec), confidence});
    current = std::move(result.image);
  }
  AugmentationRecord record = assemble_record(std::move(outcomes), true_class, class_count, options);
  record.sample_id = sample_index;
  record.global_seed = global_seed;
  record.sample_index = sample_index;
  return {std::move(current), std::move(record)};
}

}  // namespace

std::string_view stage_name(const StageConfig& config) noexcept {
  static constexpr std::string_view names[] = {"ta", "re", "rc", "gauss", "pgauss", "flip"};
  return names[config.index()];
}

std::vector<TransformKind> stage_kinds(const StageConfig& config) {
  return std::visit(Overloaded{
                        [](const TrivialAugmentStage&) {
                          const auto kinds = trivial_augment_kinds();
                          return std::vector<TransformKind>(kinds.begin(), kinds.end());
                        },
                        [](const RandomEraseStage&) { return std::vector{TransformKind::RandomErase}; },
                        [](const RandomCropStage&) { return std::vector{TransformKind::RandomCrop}; },
                        [](const GaussianStage&) { return std::vector{TransformKind::GaussianNoise}; },
                        [](const PatchGaussianStage&) { return std::vector{TransformKind::PatchGaussianNoise}; },
                        [](const HorizontalFlipStage&) { return std::vector{TransformKind::HorizontalFlip}; },
                    },
                    config);
}

void validate_stage(const StageConfig& config) {
  std::visit(Overloaded{
                 [](const TrivialAugmentStage&) {},
                 [](const RandomEraseStage& s) {
                   check_probability(s.prob, "re.prob");
                   const auto& e = s.erase;
                   if (!(e.area_lo > 0.0 && e.area_lo <= e.area_hi && e.area_hi <= 1.0)) {
                     throw ConfigError("re.area must satisfy 0 < lo <= hi <= 1");
                   }
                   if (!(e.aspect_lo > 0.0 && e.aspect_lo <= e.aspect_hi)) {
                     throw ConfigError("re.aspect must satisfy 0 < lo <= hi");
                   }
                   if (e.max_attempts < 1) throw ConfigError("re.max_attempts must be positive");
                 },
                 [](const RandomCropStage& s) {
                   if (s.padding < 0) throw ConfigError("rc.padding must be non-negative");
                 },
                 [](const GaussianStage& s) {
                   if (!(s.sigma > 0.0 && s.sigma <= 1.0)) throw ConfigError("gauss.sigma must lie in (0, 1]");
                 },
                 [](const PatchGaussianStage& s) {
                   if (!(s.sigma > 0.0 && s.sigma <= 1.0)) throw ConfigError("pgauss.sigma must lie in (0, 1]");
                   if (s.patch_side < 1) throw ConfigError("pgauss.side must be positive");
                 },
                 [](const HorizontalFlipStage& s) { check_probability(s.prob, "flip.prob"); },
             },
             config);
}

TaDraw ta_sample(Rng& rng) {
  const auto kinds = trivial_augment_kinds();
  TaDraw draw;
  draw.kind = kinds[rng.below(kinds.size())];
  draw.level = static_cast<int>(rng.below(kTrivialAugmentLevels));
  return draw;
}

std::vector<double> AugmentationRecord::stage_confidences() const {
  std::vector<double> out;
  out.reserve(stages.size());
  for (const auto& s : stages) out.push_back(s.confidence);
  return out;
}

double stage_confidence(const TransformSpec& spec, bool soft, const MappingProfile& profile) {
  if (!soft || !spec.applied) return 1.0;
  return profile.confidence(spec.kind, spec.phi);
}

AugmentationRecord assemble_record(std::vector<StageOutcome> stages, int true_class, int class_count,
                                   const PipelineOptions& options) {
  AugmentationRecord record;
  record.true_class = true_class;
  record.class_count = class_count;
  record.stages = std::move(stages);
  const auto confidences = record.stage_confidences();
  record.composed_confidence = compose_confidences(confidences);
  double label_confidence = record.composed_confidence;
  if (options.floor_at_chance) label_confidence = std::max(label_confidence, 1.0 / class_count);
  record.soft_label = soft_target(true_class, class_count, label_confidence, options.reweight);
  record.loss_weight = record.soft_label.loss_weight;
  return record;
}

Pipeline::Pipeline(std::vector<PolicyStage> stages, MappingProfile profile, PipelineOptions options)
    : stages_(std::move(stages)), profile_(std::move(profile)), options_(options) {
  check_profile_coverage(stages_, profile_);
}

std::pair<Image, AugmentationRecord> Pipeline::run(const Image& img, int true_class, std::uint64_t global_seed,
                                                   std::uint64_t sample_index) const {
  return run_stages(img, true_class, profile_.class_count(), stages_, profile_, options_, global_seed,
                    sample_index);
}

std::pair<Image, AugmentationRecord> augment_sample(const Image& img, int true_class, int class_count,
                                                    const std::vector<PolicyStage>& stages,
                                                    const MappingProfile& profile, const PipelineOptions& options,
                                                    std::uint64_t global_seed, std::uint64_t sample_index) {
  if (class_count != profile.class_count()) {
    throw ConfigError("profile built for " + std::to_string(profile.class_count()) + " classes, dataset has " +
                      std::to_string(class_count));
  }
  check_profile_coverage(stages, profile);
  return run_stages(img, true_class, class_count, stages, profile, options, global_seed, sample_index);
}

DatasetRunSummary augment_dataset(const DatasetHandle& dataset, const Pipeline& pipeline,
                                  const DatasetRunOptions& options, const RecordSink& sink,
                                  const ErrorSink& on_error) {
  if (dataset.class_count() != pipeline.profile().class_count()) {
    throw ConfigError("profile built for " + std::to_string(pipeline.profile().class_count()) +
                      " classes, dataset has " + std::to_string(dataset.class_count()));
  }
  if (options.workers < 1) throw ConfigError("workers must be at least 1");
  if (options.block < 1) throw ConfigError("block must be at least 1");

  const std::size_t total = std::min(dataset.size(), options.limit.value_or(dataset.size()));
  DatasetRunSummary summary;

  struct Slot {
    std::optional<std::pair<Image, AugmentationRecord>> output;
    std::optional<SampleError> error;
    std::exception_ptr failure;
  };
  std::vector<Slot> slots;

  for (std::size_t begin = 0; begin < total; begin += options.block) {
    const std::size_t end = std::min(total, begin + options.block);
    slots.assign(end - begin, Slot{});

    std::atomic<std::size_t> next{begin};
    auto work = [&] {
      for (std::size_t i = next++; i < end; i = next++) {
        Slot& slot = slots[i - begin];
        try {
          Sample sample = dataset.sample(i);
          slot.output = pipeline.run(sample.image, sample.label, options.global_seed, i);
        } catch (const FormatError& e) {
          slot.error = SampleError{i, dataset.describe(i), e.what()};
        } catch (const IoError& e) {
          slot.error = SampleError{i, dataset.describe(i), e.what()};
        } catch (...) {
          slot.failure = std::current_exception();
        }
      }
    };
    const std::size_t thread_count =
        std::min<std::size_t>(static_cast<std::size_t>(options.workers), end - begin);
    if (thread_count <= 1) {
      work();
    } else {
      std::vector<std::jthread> threads;
      threads.reserve(thread_count);
      for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(work);
    }

    for (auto& slot : slots) {
      if (slot.failure) std::rethrow_exception(slot.failure);
      if (slot.error) {
        ++summary.failed;
        spdlog::warn("sample {} ({}): {}", slot.error->sample_id, slot.error->source, slot.error->message);
        if (on_error) on_error(*slot.error);
        if (summary.failed > options.error_budget) {
          throw IoError("aborting after " + std::to_string(summary.failed) + " failed samples (error budget " +
                        std::to_string(options.error_budget) + "); last: sample " +
                        std::to_string(slot.error->sample_id) + " (" + slot.error->source +
                        "): " + slot.error->message);
        }
        continue;
      }
      sink(slot.output->first, slot.output->second);
      ++summary.processed;
    }
  }
  return summary;
}

}  // namespace softaug
