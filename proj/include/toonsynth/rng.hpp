#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace toonsynth {

/// Stage tags for counter-based stream derivation.
enum class StreamTag : std::uint64_t {
  SubjectCount = 1,
  Background = 2,
  AssetChoice = 3,
  Strategy = 4,
  Augment = 5,
  Placement = 6,
  Harmonize = 7,
  Test = 99,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic random stream. The 64-bit key fully determines the sequence,
/// and every derived value (uniforms, integers, Poisson draws) is computed
/// here rather than by <random> distributions, whose algorithms differ
/// between standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t key);
  /// Keyed by (master_seed, sample_index, tag); independent of draw order.
  RngStream(std::uint64_t master_seed, std::uint64_t index, StreamTag tag);

  std::uint64_t key() const noexcept { return key_; }
  /// Child stream keyed from this stream's key; does not consume state.
  RngStream fork(std::uint64_t tag) const;

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  /// Poisson(lambda) by sequential inversion.
  int poisson(double lambda);
  /// Index drawn proportionally to non-negative `weights`.
  std::size_t categorical(std::span<const double> weights);

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace toonsynth
