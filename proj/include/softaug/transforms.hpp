#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <variant>

#include "softaug/image.hpp"
#include "softaug/rng.hpp"

namespace softaug {

/// Every transformation the engine knows. The first 14 entries are the TrivialAugment set,
/// in a fixed order that ta_sample() indexes into.
enum class TransformKind : std::uint8_t {
  Rotate,
  ShearX,
  ShearY,
  TranslateX,
  TranslateY,
  Brightness,
  Contrast,
  Sharpness,
  Color,
  Posterize,
  Solarize,
  Equalize,
  AutoContrast,
  Identity,
  RandomErase,
  RandomCrop,
  GaussianNoise,
  PatchGaussianNoise,
  HorizontalFlip,
};

inline constexpr std::size_t kTransformKindCount = 19;
inline constexpr std::size_t kTrivialAugmentKindCount = 14;
inline constexpr int kTrivialAugmentMaxLevel = 30;
inline constexpr int kTrivialAugmentLevels = kTrivialAugmentMaxLevel + 1;

/// Fill for pixels exposed by geometric transforms and crop padding.
inline constexpr std::uint8_t kFillValue = 128;

std::span<const TransformKind> all_kinds() noexcept;
std::span<const TransformKind> trivial_augment_kinds() noexcept;
std::string_view kind_name(TransformKind kind) noexcept;
std::optional<TransformKind> parse_kind(std::string_view name) noexcept;
constexpr std::size_t kind_index(TransformKind kind) noexcept { return static_cast<std::size_t>(kind); }
bool is_trivial_augment_kind(TransformKind kind) noexcept;
/// False for kinds whose magnitude is always zero: Equalize, AutoContrast, Identity, HorizontalFlip.
bool has_magnitude(TransformKind kind) noexcept;
/// Kinds that move pixels without changing their values, plus Identity.
bool is_geometric(TransformKind kind) noexcept;

/// Realized-parameter ranges of the TrivialAugment transforms at phi = 1. Defaults are the wide
/// augmentation space; any field can be narrowed.
struct TaRanges {
  double rotate_degrees = 135.0;
  double shear = 0.99;
  double translate_fraction = 0.5;  // of the image dimension along the translation axis
  double enhance = 0.99;            // enhancement factor is 1 +/- phi * enhance
  double posterize_bits = 6.0;      // bits removed at phi = 1
  double solarize = 1.0;            // threshold is 255 * (1 - phi * solarize)
};

struct RotateParams {
  double degrees = 0.0;  // counter-clockwise
};
struct ShearParams {
  double factor = 0.0;
};
struct TranslateParams {
  double fraction = 0.0;  // signed, of the image dimension
  int pixels = 0;
};
struct EnhanceParams {
  double factor = 1.0;
};
struct PosterizeParams {
  double bits_removed = 0.0;  // before rounding
  int bits_kept = 8;
};
struct SolarizeParams {
  double threshold = 255.0;  // pixels >= threshold are inverted; no-op at phi = 0
};
struct EraseParams {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  double target_area = 0.0;  // fraction of the image, last attempt
  double aspect = 1.0;       // height / width, last attempt
  int attempts = 0;
};
struct NoiseParams {
  double sigma = 0.0;
  double scale = 0.0;
  double area_fraction = 1.0;
  int center_x = -1;  // patch noise only
  int center_y = -1;
  int patch_side = 0;
};
struct CropParams {
  int padding = 0;
  int offset_x = 0;  // crop window origin inside the padded image, in [0, 2 * padding]
  int offset_y = 0;
};
struct FlipParams {
  bool flipped = false;
};

using TransformParams = std::variant<std::monostate, RotateParams, ShearParams, TranslateParams,
                                     EnhanceParams, PosterizeParams, SolarizeParams, EraseParams,
                                     NoiseParams, CropParams, FlipParams>;

/// What a transform actually did: its kind, normalized magnitude phi in [0, 1] and the
/// concrete parameters it drew.
struct TransformSpec {
  TransformKind kind = TransformKind::Identity;
  double phi = 0.0;
  bool applied = true;  // false when a probabilistic transform did not fire
  TransformParams params;
};

struct TransformResult {
  Image image;
  TransformSpec spec;
};

/// Recomputes phi from the realized parameters alone. Used to check specs for consistency.
double derive_phi(const TransformSpec& spec, int width, int height, const TaRanges& ranges = {});

/// Forward-maps a pixel position through a geometric spec (Identity, Rotate, Shear, Translate,
/// HorizontalFlip, RandomCrop). Returns nullopt for non-geometric kinds.
std::optional<std::pair<double, double>> map_point(const TransformSpec& spec, int width, int height,
                                                   double x, double y);

// Deterministic primitives. Geometric ones fill exposed pixels with kFillValue.
Image rotate(const Image& img, double degrees);
Image shear_x(const Image& img, double factor);
Image shear_y(const Image& img, double factor);
Image translate_x(const Image& img, int pixels);
Image translate_y(const Image& img, int pixels);
Image adjust_brightness(const Image& img, double factor);
Image adjust_contrast(const Image& img, double factor);
Image adjust_sharpness(const Image& img, double factor);
Image adjust_color(const Image& img, double factor);
Image posterize(const Image& img, int bits_kept);
Image solarize(const Image& img, double threshold);
Image equalize(const Image& img);
Image autocontrast(const Image& img);
Image flip_horizontal(const Image& img);
Image crop_padded(const Image& img, int padding, int offset_x, int offset_y);

/// One TrivialAugment transform at a discrete level 0..30 (phi = level / 30). Symmetric kinds
/// draw a random sign from rng.
TransformResult apply_ta_transform(const Image& img, TransformKind kind, int level, Rng& rng,
                                   const TaRanges& ranges = {});

/// Same as apply_ta_transform with a continuous magnitude phi in [0, 1].
TransformResult apply_ta_transform_phi(const Image& img, TransformKind kind, double phi, Rng& rng,
                                       const TaRanges& ranges = {});

struct EraseOptions {
  double area_lo = 0.02;
  double area_hi = 0.33;
  double aspect_lo = 0.3;
  double aspect_hi = 3.3;
  int max_attempts = 100;
};

/// Random Erasing: replaces a rectangle of random area and aspect with gaussian noise
/// (value = clamp(round(128 + 64 z))). phi is the erased fraction of the image. If no rectangle
/// fits within max_attempts the image is returned unchanged with phi = 0.
TransformResult random_erase(const Image& img, Rng& rng, const EraseOptions& options = {});

/// Additive gaussian noise over the whole image on the [0, 1] pixel scale. The noise scale is
/// drawn uniformly from [0, 1] unless given. phi = sigma * scale.
TransformResult gaussian_noise(const Image& img, Rng& rng, double sigma = 0.1,
                               std::optional<double> scale = std::nullopt);

/// Gaussian noise inside a square patch of side patch_side centred on a uniformly drawn pixel,
/// clipped at the borders. phi = sigma * scale * (patch pixels / image pixels).
TransformResult patch_gaussian(const Image& img, Rng& rng, double sigma = 1.0, int patch_side = 25,
                               std::optional<double> scale = std::nullopt,
                               std::optional<std::pair<int, int>> center = std::nullopt);

/// Pads by `padding` on every side with kFillValue and crops the original size at a uniform
/// offset in [0, 2 * padding]^2. phi is the fraction of the crop taken from the padding.
TransformResult random_crop(const Image& img, Rng& rng, int padding,
                            std::optional<std::pair<int, int>> offset = std::nullopt);

/// Mirrors columns with probability prob. phi is always 0.
TransformResult horizontal_flip(const Image& img, Rng& rng, double prob = 0.5);

}  // namespace softaug
