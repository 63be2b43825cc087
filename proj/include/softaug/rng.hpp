#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>

namespace softaug {

/// Seeded random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the standard. The
/// distribution helpers are implemented here rather than taken from <random> because the
/// standard library distributions are implementation-defined, and augmentation outputs must
/// be bit-identical wherever the same seed is used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Counter-based substream: the seed is a hash of (root, path...). Adding a trailing path
  /// element (a new stage index, say) never changes the streams of existing paths.
  static Rng derive(std::uint64_t root, std::initializer_list<std::uint64_t> path);

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  /// +1 or -1 with equal probability.
  int sign();
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

/// SplitMix64 finalizer, used to derive substream seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace softaug
