#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "softaug/confidence.hpp"
#include "softaug/image.hpp"
#include "softaug/transforms.hpp"

namespace softaug {

enum class MetricKind : std::uint8_t { SSIM, NCC, SCC, UIQ, SiftRetention };

std::string_view metric_name(MetricKind metric) noexcept;
std::optional<MetricKind> parse_metric(std::string_view name) noexcept;

/// Side of the square windows used by ssim() and uiq(). Images smaller than this along an axis
/// use a single window spanning that axis.
inline constexpr int kMetricWindow = 8;
/// SSIM stabilizers on the 8-bit range.
inline constexpr double kSsimC1 = (0.01 * 255.0) * (0.01 * 255.0);
inline constexpr double kSsimC2 = (0.03 * 255.0) * (0.03 * 255.0);

// All metrics compare luma (ITU-R 601: 0.299 R + 0.587 G + 0.114 B) for 3-channel inputs and
// throw ContractViolation on shape mismatch.
//
// Zero-variance inputs: where a correlation would divide by zero because both signals are
// constant, the result is 1 when the constants are equal and 0 otherwise. A constant signal
// paired with a varying one scores 0.

/// Mean SSIM over all 8x8 sliding windows (stride 1), uniform weights, population moments.
double ssim(const Image& a, const Image& b);
/// Pearson correlation of the two luma planes.
double ncc(const Image& a, const Image& b);
/// Pearson correlation of the 3x3-Laplacian responses (replicated borders).
double scc(const Image& a, const Image& b);
/// Mean Wang-Bovik universal quality index over all 8x8 sliding windows.
double uiq(const Image& a, const Image& b);

/// Fixed SIFT settings: contrast threshold 0.04, 3 layers per octave (octave count follows the
/// image size; 4 for 32x32 inputs), Lowe ratio test 0.75, and a match only counts as retained when
/// it lands within kSiftTrackTolerance pixels of where `spec` moves the keypoint.
inline constexpr double kSiftContrastThreshold = 0.04;
inline constexpr double kSiftRatio = 0.75;
inline constexpr double kSiftTrackTolerance = 3.0;

/// Fraction of keypoints of `original` tracked into `transformed`. 0 (with a warning) when the
/// original has no keypoints. Throws ContractViolation unless spec is geometric.
double sift_retention(const Image& original, const Image& transformed, const TransformSpec& spec);

std::size_t sift_keypoint_count(const Image& img);

/// Linear map of [-1, 1] onto [chance, 1]; endpoints are exact.
double rescale_to_confidence(double score, double chance);

/// Whether `metric` may be used to build a curve for `kind`. Throws ConfigError naming the pair.
void check_curve_compatible(TransformKind kind, MetricKind metric);

struct CurveOptions {
  int bins = kTrivialAugmentLevels;
  int n_pairs = 500;
  std::uint64_t seed = 0;
  double chance = 0.1;
  int workers = 1;
  TaRanges ranges{};
};

/// Mean rescaled similarity per magnitude bin; bin b has phi = b / (bins - 1).
struct MappingCurve {
  TransformKind kind = TransformKind::Identity;
  MetricKind metric = MetricKind::SSIM;
  int n_pairs = 0;
  std::vector<TablePoint> points;

  /// Converts to a mapping table. Throws ConfigError if the curve does not start at (0, 1).
  InterpolatedTable to_table() const;
};

/// For every bin, draws n_pairs images with replacement from `images`, transforms each at the bin's
/// magnitude and scores it against its original. Every (bin, pair) uses its own substream of
/// options.seed, so the result does not depend on options.workers. SIFT curves only draw images
/// with at least one keypoint and throw ConfigError if there are none.
MappingCurve build_curve(std::span<const Image> images, TransformKind kind, MetricKind metric,
                         const CurveOptions& options);

/// Two-column text (`magnitude confidence`) with magnitudes in the transform's own units
/// (degrees, shear factor, image fraction, ...).
std::string format_plot_data(const MappingCurve& curve, const TaRanges& ranges = {});

}  // namespace softaug
