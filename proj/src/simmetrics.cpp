#include "softaug/simmetrics.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <opencv2/core.hpp>
#include <opencv2/features2d.hpp>
#include <sstream>
#include <mutex>
#include <thread>

#include "softaug/errors.hpp"
#include "util.hpp"

namespace softaug {

namespace {

constexpr std::array<std::string_view, 5> kMetricNames = {"ssim", "ncc", "scc", "uiq", "sift"};

__extension__ using Wide = __int128;

/// Integer luma: 299 R + 587 G + 114 B for colour (scale 1000), raw values for gray (scale 1).
/// Keeping it integral makes zero-variance detection exact.
struct LumaPlane {
  int width = 0;
  int height = 0;
  double scale = 1.0;
  std::vector<std::int64_t> values;
};

LumaPlane to_luma(const Image& img) {
  LumaPlane plane{img.width(), img.height(), img.channels() == 3 ? 1000.0 : 1.0, {}};
  plane.values.resize(img.pixel_count());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto i = static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width()) +
                     static_cast<std::size_t>(x);
      plane.values[i] = img.channels() == 3
                            ? 299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2)
                            : img.at(x, y, 0);
    }
  }
  return plane;
}

void require_same_shape(const Image& a, const Image& b, std::string_view metric) {
  if (!a.same_shape(b)) {
    throw ContractViolation(std::string(metric) + ": images differ in shape");
  }
}

/// Summed-area table with a zero first row and column.
class Integral {
 public:
  template <typename F>
  Integral(int width, int height, F value) : stride_(static_cast<std::size_t>(width) + 1) {
    table_.assign(stride_ * (static_cast<std::size_t>(height) + 1), 0);
    for (int y = 0; y < height; ++y) {
      std::int64_t row = 0;
      for (int x = 0; x < width; ++x) {
        row += value(static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
        table_[idx(x + 1, y + 1)] = table_[idx(x + 1, y)] + row;
      }
    }
  }

  /// Sum over [x0, x1) x [y0, y1).
  std::int64_t sum(int x0, int y0, int x1, int y1) const {
    return table_[idx(x1, y1)] - table_[idx(x0, y1)] - table_[idx(x1, y0)] + table_[idx(x0, y0)];
  }

 private:
  std::size_t idx(int x, int y) const {
    return static_cast<std::size_t>(y) * stride_ + static_cast<std::size_t>(x);
  }
  std::size_t stride_;
  std::vector<std::int64_t> table_;
};

/// Window moments as exact integers: n, sums, and the n-scaled (co)variances n*Sxy - Sx*Sy.
struct Moments {
  std::int64_t n = 0;
  std::int64_t sx = 0;
  std::int64_t sy = 0;
  Wide vx = 0;
  Wide vy = 0;
  Wide cxy = 0;
};

template <typename WindowFn>
double mean_over_windows(const LumaPlane& a, const LumaPlane& b, WindowFn fn) {
  if (static_cast<std::int64_t>(a.width) * a.height > (std::int64_t{1} << 27)) {
    throw ContractViolation("image too large for windowed metrics");
  }
  const Integral ia(a.width, a.height, [&](std::size_t i) { return a.values[i]; });
  const Integral ib(a.width, a.height, [&](std::size_t i) { return b.values[i]; });
  const Integral iaa(a.width, a.height, [&](std::size_t i) { return a.values[i] * a.values[i]; });
  const Integral ibb(a.width, a.height, [&](std::size_t i) { return b.values[i] * b.values[i]; });
  const Integral iab(a.width, a.height, [&](std::size_t i) { return a.values[i] * b.values[i]; });

  const int wx = std::min(kMetricWindow, a.width);
  const int wy = std::min(kMetricWindow, a.height);
  double total = 0.0;
  std::int64_t windows = 0;
  for (int y = 0; y + wy <= a.height; ++y) {
    for (int x = 0; x + wx <= a.width; ++x) {
      Moments m;
      m.n = static_cast<std::int64_t>(wx) * wy;
      m.sx = ia.sum(x, y, x + wx, y + wy);
      m.sy = ib.sum(x, y, x + wx, y + wy);
      const std::int64_t sxx = iaa.sum(x, y, x + wx, y + wy);
      const std::int64_t syy = ibb.sum(x, y, x + wx, y + wy);
      const std::int64_t sxy = iab.sum(x, y, x + wx, y + wy);
      m.vx = Wide(m.n) * sxx - Wide(m.sx) * m.sx;
      m.vy = Wide(m.n) * syy - Wide(m.sy) * m.sy;
      m.cxy = Wide(m.n) * sxy - Wide(m.sx) * m.sy;
      total += fn(m);
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

/// Pearson correlation of two integer signals with the zero-variance conventions.
double pearson(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  Wide sx = 0;
  Wide sy = 0;
  Wide sxx = 0;
  Wide syy = 0;
  Wide sxy = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sx += a[i];
    sy += b[i];
    sxx += Wide(a[i]) * a[i];
    syy += Wide(b[i]) * b[i];
    sxy += Wide(a[i]) * b[i];
  }
  const auto n = static_cast<Wide>(a.size());
  const Wide vx = n * sxx - sx * sx;
  const Wide vy = n * syy - sy * sy;
  const Wide cxy = n * sxy - sx * sy;
  if (vx == 0 && vy == 0) return sx == sy ? 1.0 : 0.0;
  if (vx == 0 || vy == 0) return 0.0;
  if (vx == vy && cxy == vx) return 1.0;
  const long double r = static_cast<long double>(cxy) /
                        (std::sqrt(static_cast<long double>(vx)) * std::sqrt(static_cast<long double>(vy)));
  return std::clamp(static_cast<double>(r), -1.0, 1.0);
}

std::vector<std::int64_t> laplacian(const LumaPlane& p) {
  std::vector<std::int64_t> out(p.values.size());
  auto at = [&](int x, int y) {
    x = std::clamp(x, 0, p.width - 1);
    y = std::clamp(y, 0, p.height - 1);
    return p.values[static_cast<std::size_t>(y) * static_cast<std::size_t>(p.width) + static_cast<std::size_t>(x)];
  };
  for (int y = 0; y < p.height; ++y) {
    for (int x = 0; x < p.width; ++x) {
      out[static_cast<std::size_t>(y) * static_cast<std::size_t>(p.width) + static_cast<std::size_t>(x)] =
          at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4 * at(x, y);
    }
  }
  return out;
}

cv::Mat to_gray_mat(const Image& img) {
  cv::Mat gray(img.height(), img.width(), CV_8UC1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (img.channels() == 1) {
        gray.at<std::uint8_t>(y, x) = img.at(x, y, 0);
      } else {
        const int v = 299 * img.at(x, y, 0) + 587 * img.at(x, y, 1) + 114 * img.at(x, y, 2);
        gray.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>((v + 500) / 1000);
      }
    }
  }
  return gray;
}

double magnitude_in_units(TransformKind kind, double phi, const TaRanges& r) {
  switch (kind) {
    case TransformKind::Rotate:
      return phi * r.rotate_degrees;
    case TransformKind::ShearX:
    case TransformKind::ShearY:
      return phi * r.shear;
    case TransformKind::TranslateX:
    case TransformKind::TranslateY:
      return phi * r.translate_fraction;
    case TransformKind::Brightness:
    case TransformKind::Contrast:
    case TransformKind::Sharpness:
    case TransformKind::Color:
      return phi * r.enhance;
    case TransformKind::Posterize:
      return phi * r.posterize_bits;
    case TransformKind::Solarize:
      return 255.0 * (1.0 - phi * r.solarize);
    default:
      return phi;
  }
}

}  // namespace

std::string_view metric_name(MetricKind metric) noexcept {
  return kMetricNames[static_cast<std::size_t>(metric)];
}

std::optional<MetricKind> parse_metric(std::string_view name) noexcept {
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    if (kMetricNames[i] == name) return static_cast<MetricKind>(i);
  }
  return std::nullopt;
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  const LumaPlane la = to_luma(a);
  const LumaPlane lb = to_luma(b);
  const double scale = la.scale;
  return mean_over_windows(la, lb, [scale](const Moments& m) {
    const double n = static_cast<double>(m.n);
    const double mu_x = static_cast<double>(m.sx) / (n * scale);
    const double mu_y = static_cast<double>(m.sy) / (n * scale);
    const double norm = n * n * scale * scale;
    const double var_x = static_cast<double>(m.vx) / norm;
    const double var_y = static_cast<double>(m.vy) / norm;
    const double cov = static_cast<double>(m.cxy) / norm;
    return ((2.0 * mu_x * mu_y + kSsimC1) * (2.0 * cov + kSsimC2)) /
           ((mu_x * mu_x + mu_y * mu_y + kSsimC1) * (var_x + var_y + kSsimC2));
  });
}

double ncc(const Image& a, const Image& b) {
  require_same_shape(a, b, "ncc");
  return pearson(to_luma(a).values, to_luma(b).values);
}

double scc(const Image& a, const Image& b) {
  require_same_shape(a, b, "scc");
  return pearson(laplacian(to_luma(a)), laplacian(to_luma(b)));
}

double uiq(const Image& a, const Image& b) {
  require_same_shape(a, b, "uiq");
  return mean_over_windows(to_luma(a), to_luma(b), [](const Moments& m) {
    // Q = 4 cov mu_x mu_y / ((var_x + var_y)(mu_x^2 + mu_y^2)); the n and scale factors cancel.
    const Wide var_sum = m.vx + m.vy;
    const Wide mean_sq = Wide(m.sx) * m.sx + Wide(m.sy) * m.sy;
    if (var_sum == 0) return m.sx == m.sy ? 1.0 : 0.0;
    if (mean_sq == 0) return 0.0;
    if (m.vx == m.vy && m.cxy == m.vx && m.sx == m.sy) return 1.0;
    const long double num = 4.0L * static_cast<long double>(m.cxy) * static_cast<long double>(m.sx) *
                            static_cast<long double>(m.sy);
    const long double den = static_cast<long double>(var_sum) * static_cast<long double>(mean_sq);
    return static_cast<double>(num / den);
  });
}

double sift_retention(const Image& original, const Image& transformed, const TransformSpec& spec) {
  if (!is_geometric(spec.kind)) {
    throw ContractViolation("sift_retention needs a geometric transform, got " +
                            std::string(kind_name(spec.kind)));
  }
  require_same_shape(original, transformed, "sift_retention");
  const cv::Mat gray_a = to_gray_mat(original);
  const cv::Mat gray_b = to_gray_mat(transformed);
  auto sift = cv::SIFT::create(0, 3, kSiftContrastThreshold);

  std::vector<cv::KeyPoint> keys_a;
  std::vector<cv::KeyPoint> keys_b;
  cv::Mat desc_a;
  cv::Mat desc_b;
  sift->detectAndCompute(gray_a, cv::noArray(), keys_a, desc_a);
  if (keys_a.empty()) {
    spdlog::warn("sift_retention: no keypoints detected in the original image");
    return 0.0;
  }
  sift->detectAndCompute(gray_b, cv::noArray(), keys_b, desc_b);
  if (keys_b.empty()) return 0.0;

  cv::BFMatcher matcher(cv::NORM_L2);
  std::vector<std::vector<cv::DMatch>> knn;
  matcher.knnMatch(desc_a, desc_b, knn, 2);

  std::size_t retained = 0;
  for (const auto& candidates : knn) {
    if (candidates.empty()) continue;
    const cv::DMatch& best = candidates[0];
    const bool distinctive = candidates.size() < 2 || best.distance == 0.0F ||
                             best.distance < kSiftRatio * candidates[1].distance;
    if (!distinctive) continue;
    const cv::Point2f from = keys_a[static_cast<std::size_t>(best.queryIdx)].pt;
    const cv::Point2f to = keys_b[static_cast<std::size_t>(best.trainIdx)].pt;
    const auto expected = map_point(spec, original.width(), original.height(), from.x, from.y);
    if (std::hypot(expected->first - to.x, expected->second - to.y) <= kSiftTrackTolerance) ++retained;
  }
  return static_cast<double>(retained) / static_cast<double>(keys_a.size());
}

std::size_t sift_keypoint_count(const Image& img) {
  std::vector<cv::KeyPoint> keys;
  cv::SIFT::create(0, 3, kSiftContrastThreshold)->detect(to_gray_mat(img), keys);
  return keys.size();
}

double rescale_to_confidence(double score, double chance) {
  if (!(score >= -1.0 && score <= 1.0)) throw ContractViolation("score must lie in [-1, 1]");
  if (!(chance >= 0.0 && chance <= 1.0)) throw ContractViolation("chance must lie in [0, 1]");
  return std::lerp(chance, 1.0, (score + 1.0) / 2.0);
}

void check_curve_compatible(TransformKind kind, MetricKind metric) {
  const std::string pair = std::string(kind_name(kind)) + "/" + std::string(metric_name(metric));
  if (!is_trivial_augment_kind(kind)) {
    throw ConfigError(pair + ": curves are built for TrivialAugment transforms only");
  }
  if (kind == TransformKind::Equalize || kind == TransformKind::AutoContrast) {
    throw ConfigError(pair + ": transform has no magnitude axis");
  }
  if (metric == MetricKind::SiftRetention && !is_geometric(kind)) {
    throw ConfigError(pair + ": SIFT retention applies to geometric transforms only");
  }
}

InterpolatedTable MappingCurve::to_table() const {
  return make_table(points, std::string(kind_name(kind)) + "/" + std::string(metric_name(metric)));
}

MappingCurve build_curve(std::span<const Image> images, TransformKind kind, MetricKind metric,
                         const CurveOptions& options) {
  check_curve_compatible(kind, metric);
  if (images.empty()) throw ContractViolation("build_curve needs at least one image");
  if (options.bins < 2) throw ContractViolation("build_curve needs at least two bins");
  if (options.n_pairs < 1) throw ContractViolation("build_curve needs at least one pair per bin");

  const auto bins = static_cast<std::size_t>(options.bins);
  const auto pairs = static_cast<std::size_t>(options.n_pairs);
  std::vector<double> scores(bins * pairs);

  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (metric != MetricKind::SiftRetention || sift_keypoint_count(images[i]) > 0) usable.push_back(i);
  }
  if (usable.empty()) throw ConfigError("no image in the set has a SIFT keypoint");

  auto evaluate_cell = [&](std::size_t cell) {
    const std::size_t bin = cell / pairs;
    const std::size_t pair = cell % pairs;
    const double phi = static_cast<double>(bin) / static_cast<double>(bins - 1);
    Rng rng = Rng::derive(options.seed, {bin, pair});
    const Image& original = images[usable[rng.below(usable.size())]];
    const TransformResult result = apply_ta_transform_phi(original, kind, phi, rng, options.ranges);
    switch (metric) {
      case MetricKind::SSIM:
        return rescale_to_confidence(std::clamp(ssim(original, result.image), -1.0, 1.0), options.chance);
      case MetricKind::NCC:
        return rescale_to_confidence(ncc(original, result.image), options.chance);
      case MetricKind::SCC:
        return rescale_to_confidence(scc(original, result.image), options.chance);
      case MetricKind::UIQ:
        return rescale_to_confidence(std::clamp(uiq(original, result.image), -1.0, 1.0), options.chance);
      case MetricKind::SiftRetention:
        return std::lerp(options.chance, 1.0, sift_retention(original, result.image, result.spec));
    }
    return 0.0;
  };

  const unsigned workers = static_cast<unsigned>(std::max(1, options.workers));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    try {
      for (std::size_t cell = next++; cell < scores.size(); cell = next++) scores[cell] = evaluate_cell(cell);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next = scores.size();
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  MappingCurve curve{kind, metric, options.n_pairs, {}};
  curve.points.reserve(bins);
  for (std::size_t bin = 0; bin < bins; ++bin) {
    double sum = 0.0;
    for (std::size_t pair = 0; pair < pairs; ++pair) sum += scores[bin * pairs + pair];
    curve.points.push_back({static_cast<double>(bin) / static_cast<double>(bins - 1),
                            sum / static_cast<double>(pairs)});
  }
  return curve;
}

std::string format_plot_data(const MappingCurve& curve, const TaRanges& ranges) {
  std::ostringstream out;
  out << "# " << kind_name(curve.kind) << ' ' << metric_name(curve.metric) << " n_pairs=" << curve.n_pairs
      << '\n';
  out << "# magnitude confidence\n";
  for (const auto& p : curve.points) {
    out << format_double(magnitude_in_units(curve.kind, p.phi, ranges)) << ' ' << format_double(p.confidence)
        << '\n';
  }
  return out.str();
}

}  // namespace softaug
