#include "softaug/transforms.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "softaug/errors.hpp"

namespace softaug {

namespace {

constexpr std::array<TransformKind, kTransformKindCount> kAllKinds = {
    TransformKind::Rotate,       TransformKind::ShearX,        TransformKind::ShearY,
    TransformKind::TranslateX,   TransformKind::TranslateY,    TransformKind::Brightness,
    TransformKind::Contrast,     TransformKind::Sharpness,     TransformKind::Color,
    TransformKind::Posterize,    TransformKind::Solarize,      TransformKind::Equalize,
    TransformKind::AutoContrast, TransformKind::Identity,      TransformKind::RandomErase,
    TransformKind::RandomCrop,   TransformKind::GaussianNoise, TransformKind::PatchGaussianNoise,
    TransformKind::HorizontalFlip,
};

constexpr std::array<std::string_view, kTransformKindCount> kNames = {
    "Rotate",       "ShearX",        "ShearY",        "TranslateX",         "TranslateY",
    "Brightness",   "Contrast",      "Sharpness",     "Color",              "Posterize",
    "Solarize",     "Equalize",      "AutoContrast",  "Identity",           "RandomErase",
    "RandomCrop",   "GaussianNoise", "PatchGaussianNoise", "HorizontalFlip",
};

std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  // ITU-R 601-2 with 16-bit fixed-point rounding.
  return static_cast<std::uint8_t>((r * 19595U + g * 38470U + b * 7471U + 0x8000U) >> 16);
}

Image luma_plane(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y, 0) = luma(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
    }
  }
  return out;
}

double sample_bilinear(const Image& img, double sx, double sy, int c) {
  const double fx = std::floor(sx);
  const double fy = std::floor(sy);
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const double ax = sx - fx;
  const double ay = sy - fy;
  auto px = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= img.width() || y >= img.height()) return kFillValue;
    return img.at(x, y, c);
  };
  return (1.0 - ay) * ((1.0 - ax) * px(x0, y0) + ax * px(x0 + 1, y0)) +
         ay * ((1.0 - ax) * px(x0, y0 + 1) + ax * px(x0 + 1, y0 + 1));
}

/// Resamples img through an inverse map from output to source coordinates.
template <typename InverseMap>
Image warp(const Image& img, InverseMap inverse) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto [sx, sy] = inverse(static_cast<double>(x), static_cast<double>(y));
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = saturate_u8(sample_bilinear(img, sx, sy, c));
      }
    }
  }
  return out;
}

/// Blend toward a degenerate image: degenerate + factor * (img - degenerate).
Image blend(const Image& degenerate, const Image& img, double factor) {
  Image out(img.width(), img.height(), img.channels());
  auto src = img.data();
  auto deg = degenerate.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const double d = deg[i];
    dst[i] = saturate_u8(d + factor * (static_cast<double>(src[i]) - d));
  }
  return out;
}

template <typename Lut>
Image apply_lut_per_channel(const Image& img, const Lut& make_lut) {
  Image out = img;
  for (int c = 0; c < img.channels(); ++c) {
    std::array<std::uint64_t, 256> histogram{};
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) ++histogram[img.at(x, y, c)];
    }
    const std::optional<std::array<std::uint8_t, 256>> lut = make_lut(histogram);
    if (!lut) continue;
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) out.at(x, y, c) = (*lut)[img.at(x, y, c)];
    }
  }
  return out;
}

void require_phi(double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw ContractViolation("magnitude phi must lie in [0, 1], got " + std::to_string(phi));
  }
}

}  // namespace

std::span<const TransformKind> all_kinds() noexcept { return kAllKinds; }

std::span<const TransformKind> trivial_augment_kinds() noexcept {
  return std::span<const TransformKind>(kAllKinds).first(kTrivialAugmentKindCount);
}

std::string_view kind_name(TransformKind kind) noexcept { return kNames[kind_index(kind)]; }

std::optional<TransformKind> parse_kind(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return kAllKinds[i];
  }
  return std::nullopt;
}

bool is_trivial_augment_kind(TransformKind kind) noexcept {
  return kind_index(kind) < kTrivialAugmentKindCount;
}

bool has_magnitude(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::Equalize:
    case TransformKind::AutoContrast:
    case TransformKind::Identity:
    case TransformKind::HorizontalFlip:
      return false;
    default:
      return true;
  }
}

bool is_geometric(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::Identity:
    case TransformKind::Rotate:
    case TransformKind::ShearX:
    case TransformKind::ShearY:
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
    case TransformKind::HorizontalFlip:
    case TransformKind::RandomCrop:
      return true;
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------------------------
// Primitives

Image rotate(const Image& img, double degrees) {
  if (degrees == 0.0) return img;
  const double radians = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(radians);
  const double sin_t = std::sin(radians);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  return warp(img, [&](double x, double y) {
    const double dx = x - cx;
    const double dy = y - cy;
    return std::pair{cx + dx * cos_t - dy * sin_t, cy + dx * sin_t + dy * cos_t};
  });
}

Image shear_x(const Image& img, double factor) {
  if (factor == 0.0) return img;
  const double cy = (img.height() - 1) / 2.0;
  return warp(img, [&](double x, double y) { return std::pair{x + factor * (y - cy), y}; });
}

Image shear_y(const Image& img, double factor) {
  if (factor == 0.0) return img;
  const double cx = (img.width() - 1) / 2.0;
  return warp(img, [&](double x, double y) { return std::pair{x, y + factor * (x - cx)}; });
}

Image translate_x(const Image& img, int pixels) {
  Image out(img.width(), img.height(), img.channels(), kFillValue);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const int sx = x - pixels;
      if (sx < 0 || sx >= img.width()) continue;
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, y, c);
    }
  }
  return out;
}

Image translate_y(const Image& img, int pixels) {
  Image out(img.width(), img.height(), img.channels(), kFillValue);
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y - pixels;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(x, sy, c);
    }
  }
  return out;
}

Image adjust_brightness(const Image& img, double factor) {
  return blend(Image(img.width(), img.height(), img.channels(), 0), img, factor);
}

Image adjust_contrast(const Image& img, double factor) {
  const Image gray = luma_plane(img);
  std::uint64_t sum = 0;
  for (std::uint8_t v : gray.data()) sum += v;
  const double mean = std::floor(static_cast<double>(sum) / static_cast<double>(gray.pixel_count()) + 0.5);
  return blend(Image(img.width(), img.height(), img.channels(), static_cast<std::uint8_t>(mean)), img,
               factor);
}

Image adjust_sharpness(const Image& img, double factor) {
  // Degenerate is the 3x3 smoothing kernel [1 1 1; 1 5 1; 1 1 1] / 13 on interior pixels;
  // border pixels keep their values.
  Image degenerate = img;
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        int sum = 4 * img.at(x, y, c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) sum += img.at(x + dx, y + dy, c);
        }
        degenerate.at(x, y, c) = saturate_u8(sum / 13.0);
      }
    }
  }
  return blend(degenerate, img, factor);
}

Image adjust_color(const Image& img, double factor) {
  if (img.channels() == 1) return img;
  const Image gray = luma_plane(img);
  Image degenerate(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) degenerate.at(x, y, c) = gray.at(x, y, 0);
    }
  }
  return blend(degenerate, img, factor);
}

Image posterize(const Image& img, int bits_kept) {
  if (bits_kept < 0 || bits_kept > 8) {
    throw ContractViolation("posterize keeps 0..8 bits, got " + std::to_string(bits_kept));
  }
  const auto mask = static_cast<std::uint8_t>(0xFFU << (8 - bits_kept));
  Image out = img;
  for (std::uint8_t& v : out.data()) v = static_cast<std::uint8_t>(v & mask);
  return out;
}

Image solarize(const Image& img, double threshold) {
  Image out = img;
  for (std::uint8_t& v : out.data()) {
    if (v >= threshold) v = static_cast<std::uint8_t>(255 - v);
  }
  return out;
}

Image equalize(const Image& img) {
  return apply_lut_per_channel(img, [](const std::array<std::uint64_t, 256>& histogram)
                                        -> std::optional<std::array<std::uint8_t, 256>> {
    std::uint64_t total = 0;
    std::uint64_t last = 0;
    for (std::uint64_t count : histogram) {
      total += count;
      if (count != 0) last = count;
    }
    const std::uint64_t step = (total - last) / 255;
    if (step == 0) return std::nullopt;
    std::array<std::uint8_t, 256> lut{};
    std::uint64_t n = step / 2;
    for (std::size_t i = 0; i < 256; ++i) {
      lut[i] = static_cast<std::uint8_t>(std::min<std::uint64_t>(n / step, 255));
      n += histogram[i];
    }
    return lut;
  });
}

Image autocontrast(const Image& img) {
  return apply_lut_per_channel(img, [](const std::array<std::uint64_t, 256>& histogram)
                                        -> std::optional<std::array<std::uint8_t, 256>> {
    int lo = 0;
    while (lo < 256 && histogram[static_cast<std::size_t>(lo)] == 0) ++lo;
    int hi = 255;
    while (hi >= 0 && histogram[static_cast<std::size_t>(hi)] == 0) --hi;
    if (hi <= lo) return std::nullopt;
    const double scale = 255.0 / (hi - lo);
    const double offset = -lo * scale;
    std::array<std::uint8_t, 256> lut{};
    for (int i = 0; i < 256; ++i) {
      const int v = static_cast<int>(i * scale + offset);
      lut[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
    return lut;
  });
}

Image flip_horizontal(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = img.at(img.width() - 1 - x, y, c);
      }
    }
  }
  return out;
}

Image crop_padded(const Image& img, int padding, int offset_x, int offset_y) {
  Image out(img.width(), img.height(), img.channels(), kFillValue);
  for (int y = 0; y < img.height(); ++y) {
    const int sy = y + offset_y - padding;
    if (sy < 0 || sy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      const int sx = x + offset_x - padding;
      if (sx < 0 || sx >= img.width()) continue;
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = img.at(sx, sy, c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Magnitude bookkeeping

double derive_phi(const TransformSpec& spec, int width, int height, const TaRanges& ranges) {
  const double total = static_cast<double>(width) * static_cast<double>(height);
  switch (spec.kind) {
    case TransformKind::Rotate:
      return std::abs(std::get<RotateParams>(spec.params).degrees) / ranges.rotate_degrees;
    case TransformKind::ShearX:
    case TransformKind::ShearY:
      return std::abs(std::get<ShearParams>(spec.params).factor) / ranges.shear;
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
      return std::abs(std::get<TranslateParams>(spec.params).fraction) / ranges.translate_fraction;
    case TransformKind::Brightness:
    case TransformKind::Contrast:
    case TransformKind::Sharpness:
    case TransformKind::Color:
      return std::abs(std::get<EnhanceParams>(spec.params).factor - 1.0) / ranges.enhance;
    case TransformKind::Posterize:
      return std::get<PosterizeParams>(spec.params).bits_removed / ranges.posterize_bits;
    case TransformKind::Solarize:
      return (1.0 - std::get<SolarizeParams>(spec.params).threshold / 255.0) / ranges.solarize;
    case TransformKind::RandomErase: {
      if (!spec.applied) return 0.0;
      const auto& p = std::get<EraseParams>(spec.params);
      return static_cast<double>(p.width) * static_cast<double>(p.height) / total;
    }
    case TransformKind::GaussianNoise:
    case TransformKind::PatchGaussianNoise: {
      const auto& p = std::get<NoiseParams>(spec.params);
      return std::min(1.0, p.sigma * p.scale * p.area_fraction);
    }
    case TransformKind::RandomCrop: {
      const auto& p = std::get<CropParams>(spec.params);
      const double overlap_w = std::max(0, width - std::abs(p.offset_x - p.padding));
      const double overlap_h = std::max(0, height - std::abs(p.offset_y - p.padding));
      return (total - overlap_w * overlap_h) / total;
    }
    case TransformKind::Equalize:
    case TransformKind::AutoContrast:
    case TransformKind::Identity:
    case TransformKind::HorizontalFlip:
      return 0.0;
  }
  return 0.0;
}

std::optional<std::pair<double, double>> map_point(const TransformSpec& spec, int width, int height,
                                                   double x, double y) {
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  switch (spec.kind) {
    case TransformKind::Identity:
      return std::pair{x, y};
    case TransformKind::Rotate: {
      const double radians = std::get<RotateParams>(spec.params).degrees * std::numbers::pi / 180.0;
      const double c = std::cos(radians);
      const double s = std::sin(radians);
      const double dx = x - cx;
      const double dy = y - cy;
      return std::pair{cx + dx * c + dy * s, cy - dx * s + dy * c};
    }
    case TransformKind::ShearX:
      return std::pair{x - std::get<ShearParams>(spec.params).factor * (y - cy), y};
    case TransformKind::ShearY:
      return std::pair{x, y - std::get<ShearParams>(spec.params).factor * (x - cx)};
    case TransformKind::TranslateX:
      return std::pair{x + std::get<TranslateParams>(spec.params).pixels, y};
    case TransformKind::TranslateY:
      return std::pair{x, y + std::get<TranslateParams>(spec.params).pixels};
    case TransformKind::HorizontalFlip:
      return std::pair{std::get<FlipParams>(spec.params).flipped ? (width - 1) - x : x, y};
    case TransformKind::RandomCrop: {
      const auto& p = std::get<CropParams>(spec.params);
      return std::pair{x - (p.offset_x - p.padding), y - (p.offset_y - p.padding)};
    }
    default:
      return std::nullopt;
  }
}

// ---------------------------------------------------------------------------------------------
// Randomized operations

TransformResult apply_ta_transform(const Image& img, TransformKind kind, int level, Rng& rng,
                                   const TaRanges& ranges) {
  if (level < 0 || level > kTrivialAugmentMaxLevel) {
    throw ContractViolation("TrivialAugment level must be in 0..30, got " + std::to_string(level));
  }
  return apply_ta_transform_phi(img, kind, level / static_cast<double>(kTrivialAugmentMaxLevel),
                                rng, ranges);
}

TransformResult apply_ta_transform_phi(const Image& img, TransformKind kind, double phi, Rng& rng,
                                       const TaRanges& ranges) {
  if (!is_trivial_augment_kind(kind)) {
    throw ContractViolation(std::string(kind_name(kind)) + " is not a TrivialAugment transform");
  }
  require_phi(phi);
  TransformSpec spec{kind, has_magnitude(kind) ? phi : 0.0, true, std::monostate{}};
  const bool active = phi > 0.0;

  switch (kind) {
    case TransformKind::Rotate: {
      const double degrees = rng.sign() * phi * ranges.rotate_degrees;
      spec.params = RotateParams{degrees};
      return {active ? rotate(img, degrees) : img, spec};
    }
    case TransformKind::ShearX:
    case TransformKind::ShearY: {
      const double factor = rng.sign() * phi * ranges.shear;
      spec.params = ShearParams{factor};
      if (!active) return {img, spec};
      return {kind == TransformKind::ShearX ? shear_x(img, factor) : shear_y(img, factor), spec};
    }
    case TransformKind::TranslateX:
    case TransformKind::TranslateY: {
      const double fraction = rng.sign() * phi * ranges.translate_fraction;
      const int extent = kind == TransformKind::TranslateX ? img.width() : img.height();
      const int pixels = static_cast<int>(std::lround(fraction * extent));
      spec.params = TranslateParams{fraction, pixels};
      if (!active) return {img, spec};
      return {kind == TransformKind::TranslateX ? translate_x(img, pixels) : translate_y(img, pixels),
              spec};
    }
    case TransformKind::Brightness:
    case TransformKind::Contrast:
    case TransformKind::Sharpness:
    case TransformKind::Color: {
      const double factor = 1.0 + rng.sign() * phi * ranges.enhance;
      spec.params = EnhanceParams{factor};
      if (!active) return {img, spec};
      switch (kind) {
        case TransformKind::Brightness:
          return {adjust_brightness(img, factor), spec};
        case TransformKind::Contrast:
          return {adjust_contrast(img, factor), spec};
        case TransformKind::Sharpness:
          return {adjust_sharpness(img, factor), spec};
        default:
          return {adjust_color(img, factor), spec};
      }
    }
    case TransformKind::Posterize: {
      const double removed = phi * ranges.posterize_bits;
      const int kept = std::clamp(8 - static_cast<int>(std::lround(removed)), 0, 8);
      spec.params = PosterizeParams{removed, kept};
      return {kept == 8 ? img : posterize(img, kept), spec};
    }
    case TransformKind::Solarize: {
      const double threshold = 255.0 * (1.0 - phi * ranges.solarize);
      spec.params = SolarizeParams{threshold};
      // A threshold of 255 would still invert white pixels; zero magnitude must be an identity.
      return {active ? solarize(img, threshold) : img, spec};
    }
    case TransformKind::Equalize:
      return {equalize(img), spec};
    case TransformKind::AutoContrast:
      return {autocontrast(img), spec};
    case TransformKind::Identity:
      return {img, spec};
    default:
      break;
  }
  throw ContractViolation("unsupported TrivialAugment kind");
}

TransformResult random_erase(const Image& img, Rng& rng, const EraseOptions& options) {
  if (!(options.area_lo > 0.0 && options.area_lo <= options.area_hi && options.area_hi <= 1.0)) {
    throw ContractViolation("random_erase area range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(options.aspect_lo > 0.0 && options.aspect_lo <= options.aspect_hi)) {
    throw ContractViolation("random_erase aspect range must satisfy 0 < lo <= hi");
  }
  if (options.max_attempts < 1) throw ContractViolation("random_erase needs at least one attempt");

  const int width = img.width();
  const int height = img.height();
  const double total = static_cast<double>(img.pixel_count());
  EraseParams params;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    params.attempts = attempt;
    params.target_area = rng.uniform(options.area_lo, options.area_hi);
    params.aspect = rng.uniform(options.aspect_lo, options.aspect_hi);
    const double target_pixels = params.target_area * total;
    const int h = std::max(1, static_cast<int>(std::lround(std::sqrt(target_pixels * params.aspect))));
    const int w = std::max(1, static_cast<int>(std::lround(std::sqrt(target_pixels / params.aspect))));
    if (w > width || h > height) continue;

    params.x = static_cast<int>(rng.between(0, width - w));
    params.y = static_cast<int>(rng.between(0, height - h));
    params.width = w;
    params.height = h;
    Image out = img;
    for (int y = params.y; y < params.y + h; ++y) {
      for (int x = params.x; x < params.x + w; ++x) {
        for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = saturate_u8(128.0 + 64.0 * rng.normal());
      }
    }
    const double phi = static_cast<double>(w) * static_cast<double>(h) / total;
    return {std::move(out), TransformSpec{TransformKind::RandomErase, phi, true, params}};
  }
  spdlog::warn("random_erase: no rectangle fit {}x{} after {} attempts; image left unchanged", width,
               height, options.max_attempts);
  params.width = 0;
  params.height = 0;
  return {img, TransformSpec{TransformKind::RandomErase, 0.0, false, params}};
}

TransformResult gaussian_noise(const Image& img, Rng& rng, double sigma, std::optional<double> scale) {
  if (!(sigma > 0.0)) throw ContractViolation("gaussian_noise requires sigma > 0");
  const double s = scale ? *scale : rng.uniform();
  if (!(s >= 0.0 && s <= 1.0)) throw ContractViolation("noise scale must lie in [0, 1]");

  NoiseParams params{sigma, s, 1.0};
  TransformSpec spec{TransformKind::GaussianNoise, std::min(1.0, sigma * s * 1.0), true, params};
  const double stddev = sigma * s;
  if (stddev == 0.0) return {img, spec};
  Image out = img;
  for (std::uint8_t& v : out.data()) {
    const double value = std::clamp(v / 255.0 + stddev * rng.normal(), 0.0, 1.0);
    v = saturate_u8(value * 255.0);
  }
  return {std::move(out), spec};
}

TransformResult patch_gaussian(const Image& img, Rng& rng, double sigma, int patch_side,
                               std::optional<double> scale, std::optional<std::pair<int, int>> center) {
  if (patch_side < 1) throw ContractViolation("patch_gaussian requires patch_side >= 1");
  if (!(sigma > 0.0)) throw ContractViolation("patch_gaussian requires sigma > 0");
  const double s = scale ? *scale : rng.uniform();
  if (!(s >= 0.0 && s <= 1.0)) throw ContractViolation("noise scale must lie in [0, 1]");
  int cx = 0;
  int cy = 0;
  if (center) {
    std::tie(cx, cy) = *center;
    if (cx < 0 || cy < 0 || cx >= img.width() || cy >= img.height()) {
      throw ContractViolation("patch centre lies outside the image");
    }
  } else {
    cx = static_cast<int>(rng.between(0, img.width() - 1));
    cy = static_cast<int>(rng.between(0, img.height() - 1));
  }

  const int x0 = std::max(0, cx - patch_side / 2);
  const int y0 = std::max(0, cy - patch_side / 2);
  const int x1 = std::min(img.width() - 1, cx - patch_side / 2 + patch_side - 1);
  const int y1 = std::min(img.height() - 1, cy - patch_side / 2 + patch_side - 1);
  const auto affected = static_cast<double>(x1 - x0 + 1) * static_cast<double>(y1 - y0 + 1);
  const double area_fraction = affected / static_cast<double>(img.pixel_count());

  NoiseParams params{sigma, s, area_fraction, cx, cy, patch_side};
  TransformSpec spec{TransformKind::PatchGaussianNoise, std::min(1.0, sigma * s * area_fraction), true,
                     params};
  const double stddev = sigma * s;
  if (stddev == 0.0) return {img, spec};
  Image out = img;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double value = std::clamp(img.at(x, y, c) / 255.0 + stddev * rng.normal(), 0.0, 1.0);
        out.at(x, y, c) = saturate_u8(value * 255.0);
      }
    }
  }
  return {std::move(out), spec};
}

TransformResult random_crop(const Image& img, Rng& rng, int padding,
                            std::optional<std::pair<int, int>> offset) {
  if (padding < 0) throw ContractViolation("random_crop requires padding >= 0");
  CropParams params{padding, padding, padding};
  if (offset) {
    std::tie(params.offset_x, params.offset_y) = *offset;
    if (params.offset_x < 0 || params.offset_y < 0 || params.offset_x > 2 * padding ||
        params.offset_y > 2 * padding) {
      throw ContractViolation("crop offset must lie in [0, 2 * padding]");
    }
  } else {
    params.offset_x = static_cast<int>(rng.between(0, 2 * padding));
    params.offset_y = static_cast<int>(rng.between(0, 2 * padding));
  }
  TransformSpec spec{TransformKind::RandomCrop, 0.0, true, params};
  spec.phi = derive_phi(spec, img.width(), img.height());
  if (params.offset_x == padding && params.offset_y == padding) return {img, spec};
  return {crop_padded(img, padding, params.offset_x, params.offset_y), spec};
}

TransformResult horizontal_flip(const Image& img, Rng& rng, double prob) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw ContractViolation("flip probability must lie in [0, 1]");
  const bool flipped = rng.bernoulli(prob);
  TransformSpec spec{TransformKind::HorizontalFlip, 0.0, flipped, FlipParams{flipped}};
  return {flipped ? flip_horizontal(img) : img, spec};
}

}  // namespace softaug
