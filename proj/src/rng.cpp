#include "toonsynth/rng.hpp"

#include <cmath>
#include <limits>

#include "toonsynth/error.hpp"

namespace toonsynth {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t key) : key_(key), engine_(splitmix64(key)) {}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t index, StreamTag tag)
    : RngStream(splitmix64(splitmix64(splitmix64(master_seed) ^ index) ^
                           static_cast<std::uint64_t>(tag))) {}

RngStream RngStream::fork(std::uint64_t tag) const {
  return RngStream(splitmix64(key_ ^ splitmix64(tag + 0x632BE59BD9B4E019ull)));
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::int64_t RngStream::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidArgument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo);
  if (span == std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::int64_t>(engine_());
  }
  const std::uint64_t range = span + 1;
  // Reject the top partial bucket.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % range + 1) % range;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r > limit);
  return lo + static_cast<std::int64_t>(r % range);
}

bool RngStream::bernoulli(double p) { return uniform() < p; }

int RngStream::poisson(double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("poisson: lambda must be >= 0");
  const double u = uniform();
  int k = 0;
  double p = std::exp(-lambda);
  double cdf = p;
  while (u >= cdf && k < 1000) {
    ++k;
    p *= lambda / k;
    cdf += p;
  }
  return k;
}

std::size_t RngStream::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("categorical: negative weight");
    total += w;
  }
  if (weights.empty() || !(total > 0.0)) throw InvalidArgument("categorical: no positive weight");
  const double u = uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding can leave u == total; fall back to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

}  // namespace toonsynth
