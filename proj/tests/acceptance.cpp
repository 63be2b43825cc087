// Runs each primary acceptance criterion at its stated tolerance and prints one PASS/FAIL line
// per criterion. Exit status is non-zero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <spdlog/fmt/fmt.h>
#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "oracles/metric_oracles.hpp"
#include "softaug/confidence.hpp"
#include "softaug/labels.hpp"
#include "softaug/manifest.hpp"
#include "softaug/pipeline.hpp"
#include "softaug/robustness.hpp"
#include "softaug/simmetrics.hpp"
#include "support/generators.hpp"

using namespace softaug;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

const std::filesystem::path kDataDir{SOFTAUG_DATA_DIR};

Verdict polynomial_mean() {
  Verdict v;
  const auto t0 = Clock::now();
  v.check(poly_confidence(1.0, 2.0, 0.7) == 0.7, "poly(1, 2, 0.7) != 0.7");
  Rng rng(20240601);
  double sum = 0.0;
  for (int i = 0; i < 1000000; ++i) sum += 1.0 - poly_confidence(rng.uniform(), 2.0, 0.7);
  const double mean = sum / 1e6;
  const double elapsed = seconds_since(t0);
  v.check(std::abs(mean - 0.1) <= 0.001, fmt::format("mean smoothing {:.6f}", mean));
  v.check(elapsed < 5.0, fmt::format("took {:.2f} s", elapsed));
  if (v.pass) v.detail = fmt::format("E[1-p] = {:.6f}, {:.2f} s", mean, elapsed);
  return v;
}

Verdict noise_phi() {
  Verdict v;
  const Image img(32, 32, 3, std::uint8_t{128});
  Rng rng(1);
  const double patch = patch_gaussian(img, rng, 1.0, 25, 0.5, std::pair{16, 16}).spec.phi;
  const double full = gaussian_noise(img, rng, 0.1, 1.0).spec.phi;
  v.check(patch == 0.30517578125, fmt::format("patch phi {:.17g}", patch));
  v.check(full == 0.1, fmt::format("full phi {:.17g}", full));
  if (v.pass) v.detail = "patch 0.30517578125, full 0.1";
  return v;
}

Verdict soft_label_suite() {
  Verdict v;
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> classes(2, 1000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int bad_sum = 0, negative = 0, bad_argmax = 0;
  for (int i = 0; i < 10000; ++i) {
    const int n = classes(gen);
    const int t = std::uniform_int_distribution<int>(0, n - 1)(gen);
    // Mix in exact chance and the endpoints.
    const double c = i % 50 == 0 ? 1.0 / n : (i % 50 == 1 ? 0.0 : (i % 50 == 2 ? 1.0 : unit(gen)));
    const auto dense = soft_target(t, n, c).dense();
    double s = 0.0;
    for (double x : dense) {
      s += x;
      negative += x < 0.0;
    }
    bad_sum += std::abs(s - 1.0) > 1e-9;
    if (c > 1.0 / n) {
      for (int k = 0; k < n; ++k) {
        if (k != t && dense[static_cast<std::size_t>(k)] >= dense[static_cast<std::size_t>(t)]) {
          ++bad_argmax;
          break;
        }
      }
    }
  }
  v.check(bad_sum == 0, fmt::format("{} vectors off by >1e-9", bad_sum));
  v.check(negative == 0, fmt::format("{} negative entries", negative));
  v.check(bad_argmax == 0, fmt::format("{} wrong argmax", bad_argmax));
  if (v.pass) v.detail = "10000 cases";
  return v;
}

Verdict composition_rule() {
  Verdict v;
  std::mt19937_64 gen(4);
  std::uniform_int_distribution<int> length(0, 8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  int identity_failures = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> ps(static_cast<std::size_t>(length(gen)));
    for (auto& p : ps) p = unit(gen);
    long double product = 1.0L;
    for (double p : ps) product *= p;
    worst = std::max(worst, std::abs(compose_confidences(ps) - static_cast<double>(product)));
    // Interleave ConstantOne stage outputs.
    std::vector<double> padded;
    for (double p : ps) {
      padded.push_back(evaluate(ConstantOne{}, unit(gen)));
      padded.push_back(p);
    }
    identity_failures += compose_confidences(padded) != compose_confidences(ps);
  }
  v.check(worst <= 1e-12, fmt::format("max deviation {:.3g}", worst));
  v.check(identity_failures == 0, fmt::format("{} ConstantOne identity failures", identity_failures));
  if (v.pass) v.detail = fmt::format("max deviation {:.3g}", worst);
  return v;
}

Verdict metric_oracles() {
  Verdict v;
  std::mt19937_64 gen(5);
  double worst = 0.0;
  double worst_self = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int c = i % 2 ? 3 : 1;
    const Image a = testing::random_image(gen, 16, 16, c);
    const Image b = testing::random_image(gen, 16, 16, c);
    worst = std::max({worst, std::abs(ssim(a, b) - oracle::ssim(a, b)), std::abs(ncc(a, b) - oracle::ncc(a, b)),
                      std::abs(scc(a, b) - oracle::scc(a, b)), std::abs(uiq(a, b) - oracle::uiq(a, b))});
    worst_self = std::max({worst_self, std::abs(ssim(a, a) - 1.0), std::abs(ncc(a, a) - 1.0),
                           std::abs(scc(a, a) - 1.0), std::abs(uiq(a, a) - 1.0)});
  }
  bool endpoints = true;
  for (int classes : {2, 10, 100, 200}) {
    const double chance = 1.0 / classes;
    endpoints = endpoints && rescale_to_confidence(-1.0, chance) == chance && rescale_to_confidence(1.0, chance) == 1.0;
  }
  v.check(worst <= 1e-6, fmt::format("oracle deviation {:.3g}", worst));
  v.check(worst_self <= 1e-9, fmt::format("self-similarity deviation {:.3g}", worst_self));
  v.check(endpoints, "rescale endpoints not exact");
  if (v.pass) v.detail = fmt::format("oracle dev {:.2g}, self dev {:.2g}", worst, worst_self);
  return v;
}

Verdict erase_geometry() {
  Verdict v;
  std::mt19937_64 gen(6);
  const EraseOptions options{0.02, 0.33, 0.3, 3.3, 100};
  int count_mismatch = 0, out_of_bounds = 0;
  for (int i = 0; i < 10000; ++i) {
    const Image img = testing::random_image(gen, 32, 32, i % 4 ? 3 : 1);
    Rng r1 = Rng::derive(66, {static_cast<std::uint64_t>(i)});
    Rng r2 = Rng::derive(66, {static_cast<std::uint64_t>(i)});
    const auto a = random_erase(img, r1, options);
    const auto b = random_erase(oracle::inverted(img), r2, options);
    const double counted = static_cast<double>(oracle::equal_pixels(a.image, b.image)) / 1024.0;
    count_mismatch += a.spec.phi != counted;
    out_of_bounds += a.spec.phi < 0.5 * 0.02 || a.spec.phi > 1.2 * 0.33;
  }
  v.check(count_mismatch == 0, fmt::format("{} phi/count mismatches", count_mismatch));
  v.check(out_of_bounds == 0, fmt::format("{} out of bounds", out_of_bounds));

  const auto profile = load_mapping_profile("poly-chance", 10, kDataDir);
  const Image img(32, 32, 3, std::uint8_t{77});
  std::string freq;
  for (double prob : {0.25, 0.5, 0.9}) {
    const Pipeline pipeline({{RandomEraseStage{prob, options}, true}}, profile);
    int fired = 0;
    for (std::uint64_t i = 0; i < 10000; ++i) fired += pipeline.run(img, 0, 606, i).second.stages[0].spec.applied;
    const double f = fired / 1e4;
    v.check(std::abs(f - prob) <= 0.02, fmt::format("p={} frequency {:.4f}", prob, f));
    freq += fmt::format(" {:.4f}", f);
  }
  if (v.pass) v.detail = "10000 draws exact; frequencies" + freq;
  return v;
}

Verdict ta_uniformity() {
  Verdict v;
  Rng rng(7);
  constexpr int kDraws = 140000;
  std::array<double, 14> kinds{};
  std::array<double, 31> levels{};
  std::vector<double> joint(14 * 31, 0.0);
  for (int i = 0; i < kDraws; ++i) {
    const auto d = ta_sample(rng);
    const auto k = kind_index(d.kind);
    ++kinds[k];
    ++levels[static_cast<std::size_t>(d.level)];
    ++joint[k * 31 + static_cast<std::size_t>(d.level)];
  }
  auto p_value = [](const auto& counts) {
    const double expected = static_cast<double>(kDraws) / static_cast<double>(counts.size());
    double stat = 0.0;
    for (double c : counts) stat += (c - expected) * (c - expected) / expected;
    const boost::math::chi_squared dist(static_cast<double>(counts.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, stat));
  };
  const double pk = p_value(kinds), pl = p_value(levels), pj = p_value(joint);
  v.check(pk > 0.001, fmt::format("kinds p={:.4g}", pk));
  v.check(pl > 0.001, fmt::format("levels p={:.4g}", pl));
  v.check(pj > 0.001, fmt::format("joint p={:.4g}", pj));
  if (v.pass) v.detail = fmt::format("p kinds {:.3f}, levels {:.3f}, joint {:.3f}", pk, pl, pj);
  return v;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"softaug"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Verdict parallel_determinism() {
  Verdict v;
  testing::TempDir dir("acceptance");
  std::mt19937_64 gen(8);
  const auto samples = testing::random_samples(gen, 10000, 10);
  const auto batch = dir.path() / "data_batch.bin";
  write_cifar(batch, samples, CifarVariant::Cifar10);

  double longest = 0.0;
  for (const auto* workers : {"1", "8"}) {
    const auto t0 = Clock::now();
    const int code = run_cli({"augment", "--dataset", "cifar10:" + batch.string(), "--stages", "ta:soft,re:soft",
                              "--profile", "poly-0.7", "--seed", "1234", "--workers", workers, "--out",
                              (dir.path() / (std::string("w") + workers)).string()});
    longest = std::max(longest, seconds_since(t0));
    v.check(code == 0, fmt::format("augment with {} workers exited {}", workers, code));
  }
  const auto m1 = slurp(dir.path() / "w1" / kManifestFile);
  const auto m8 = slurp(dir.path() / "w8" / kManifestFile);
  const auto lines = std::count(m1.begin(), m1.end(), '\n');
  v.check(lines == 10001, fmt::format("manifest has {} lines", lines));
  v.check(!m1.empty() && m1 == m8, "manifests differ");
  bool images_equal = true;
  for (std::uint64_t i = 0; i < 10000 && images_equal; i += 97) {
    images_equal = slurp(dir.path() / "w1" / image_relative_path(i)) == slurp(dir.path() / "w8" / image_relative_path(i));
  }
  v.check(images_equal, "image files differ");
  v.check(longest < 60.0, fmt::format("slowest run {:.1f} s", longest));
  if (v.pass) v.detail = fmt::format("{} bytes identical, slowest run {:.1f} s", m1.size(), longest);
  return v;
}

Verdict robustness_fixtures() {
  Verdict v;
  const std::string header = "sample_id,true_class,predicted_class,corruption_name,severity\n";
  const auto rows = parse_predictions(header + "a,1,1,fog,3\nb,2,2,fog,3\nc,3,3,fog,3\nd,4,0,fog,3\n");
  v.check(eval_robustness(rows).robustness == 0.75, "3/4 fixture is not 0.75");
  const auto unequal = parse_predictions(header + "a,1,1,snow,1\nb,1,1,frost,1\nc,2,2,frost,1\nd,3,0,frost,1\ne,4,0,frost,1\n");
  v.check(eval_robustness(unequal).robustness == 0.75, "two-cell fixture is not 0.75");

  std::mt19937_64 gen(9);
  std::vector<PredictionRow> many;
  for (int i = 0; i < 2000; ++i) {
    const bool clean = i % 7 == 0;
    many.push_back({std::to_string(i), i % 10, static_cast<int>(gen() % 10),
                    clean ? "clean" : std::string(default_corruptions()[gen() % 19]),
                    clean ? 0 : static_cast<int>(1 + gen() % 5)});
  }
  const auto base = report_to_json(eval_robustness(many));
  bool invariant = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::shuffle(many.begin(), many.end(), gen);
    invariant = invariant && report_to_json(eval_robustness(many)) == base;
  }
  v.check(invariant, "report depends on row order");
  if (v.pass) v.detail = "0.75 fixtures exact, 20 shuffles identical";
  return v;
}

Verdict soft_flag_invariance() {
  Verdict v;
  std::mt19937_64 gen(10);
  const auto profile = load_mapping_profile("poly-chance", 10, kDataDir);
  const std::vector<StageConfig> configs{TrivialAugmentStage{}, RandomEraseStage{}, RandomCropStage{},
                                         GaussianStage{},       PatchGaussianStage{}, HorizontalFlipStage{}};
  const auto samples = testing::random_samples(gen, 300, 10);
  int differing = 0;
  std::size_t checked = 0;
  // Each stage alone, then all six with every soft mask.
  for (const auto& config : configs) {
    const Pipeline hard({{config, false}}, profile), soft({{config, true}}, profile);
    for (std::size_t i = 0; i < samples.size(); ++i, ++checked) {
      differing += hard.run(samples[i].image, samples[i].label, 31, i).first !=
                   soft.run(samples[i].image, samples[i].label, 31, i).first;
    }
  }
  std::vector<PolicyStage> all_hard;
  for (const auto& c : configs) all_hard.push_back({c, false});
  const Pipeline reference(all_hard, profile);
  for (unsigned mask = 1; mask < 64; ++mask) {
    auto stages = all_hard;
    for (std::size_t s = 0; s < stages.size(); ++s) stages[s].soft = (mask >> s) & 1u;
    const Pipeline mixed(stages, profile);
    for (std::size_t i = 0; i < 20; ++i, ++checked) {
      differing += reference.run(samples[i].image, samples[i].label, mask, i).first !=
                   mixed.run(samples[i].image, samples[i].label, mask, i).first;
    }
  }
  v.check(differing == 0, fmt::format("{} of {} images differ", differing, checked));
  if (v.pass) v.detail = fmt::format("{} image pairs identical", checked);
  return v;
}

Verdict curve_builder() {
  Verdict v;
  std::mt19937_64 gen(11);
  std::vector<Image> pool;
  for (int i = 0; i < 200; ++i) pool.push_back(testing::textured_image(gen, 32, 32));
  const std::array metrics{MetricKind::SSIM, MetricKind::NCC, MetricKind::SCC, MetricKind::UIQ,
                           MetricKind::SiftRetention};
  CurveOptions small;
  small.n_pairs = 40;
  small.seed = 5;

  for (const auto metric : metrics) {
    const auto curve = build_curve(pool, TransformKind::Identity, metric, small);
    bool constant = curve.points.size() == 31;
    for (const auto& p : curve.points) constant = constant && p.confidence == 1.0;
    v.check(constant, fmt::format("Identity/{} not constant 1", metric_name(metric)));
  }

  CurveOptions bin0 = small;
  bin0.bins = 2;
  for (const auto kind : trivial_augment_kinds()) {
    if (!has_magnitude(kind)) continue;
    for (const auto metric : metrics) {
      if (metric == MetricKind::SiftRetention && !is_geometric(kind)) continue;
      const auto curve = build_curve(pool, kind, metric, bin0);
      v.check(curve.points.front().confidence == 1.0,
              fmt::format("{}/{} bin 0 = {:.17g}", kind_name(kind), metric_name(metric), curve.points.front().confidence));
    }
  }

  const auto a = build_curve(pool, TransformKind::ShearY, MetricKind::SiftRetention, small);
  const auto b = build_curve(pool, TransformKind::ShearY, MetricKind::SiftRetention, small);
  bool same = a.points.size() == b.points.size();
  for (std::size_t i = 0; same && i < a.points.size(); ++i) same = a.points[i].confidence == b.points[i].confidence;
  v.check(same, "fixed-seed reruns differ");

  CurveOptions full;
  full.seed = 6;
  const auto t0 = Clock::now();
  const auto rotate = build_curve(pool, TransformKind::Rotate, MetricKind::SSIM, full);
  const double elapsed = seconds_since(t0);
  v.check(rotate.points.size() == 31 && rotate.n_pairs == 500, "Rotate curve has the wrong shape");
  v.check(elapsed < 120.0, fmt::format("Rotate SSIM curve took {:.1f} s", elapsed));
  if (v.pass) v.detail = fmt::format("Rotate SSIM 31x500 in {:.2f} s", elapsed);
  return v;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"polynomial endpoint and mean smoothing", polynomial_mean},
      {"noise magnitude formula", noise_phi},
      {"soft-label distribution suite", soft_label_suite},
      {"composition rule", composition_rule},
      {"metric oracle equivalence", metric_oracles},
      {"random erasing geometry", erase_geometry},
      {"trivialaugment sampling uniformity", ta_uniformity},
      {"determinism under parallelism", parallel_determinism},
      {"robustness evaluator", robustness_fixtures},
      {"soft-flag image invariance", soft_flag_invariance},
      {"curve builder", curve_builder},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict verdict;
    try {
      verdict = criteria[i].second();
    } catch (const std::exception& e) {
      verdict = {false, std::string("exception: ") + e.what()};
    }
    failures += !verdict.pass;
    std::printf("%s [%zu] %s: %s\n", verdict.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                verdict.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
