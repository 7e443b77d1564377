#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace acit {

// FNV-1a, used to turn stream names into derivation tags.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Counter-based random stream: output i is a pure function of (seed, i),
// namely the splitmix64 finalizer applied to seed + (i+1)*GOLDEN. Substreams
// are derived by mixing a tag into the seed, so independent consumers never
// share counters. The exact construction is documented in the README so the
// streams can be reproduced outside this codebase.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(seed ^ mix(tag + kGolden));
  }
  static std::uint64_t derive(std::uint64_t seed, std::string_view name) {
    return derive(seed, fnv1a64(name));
  }

  CounterRng substream(std::uint64_t tag) const {
    return CounterRng(derive(seed_, tag));
  }
  CounterRng substream(std::string_view name) const {
    return CounterRng(derive(seed_, name));
  }

  std::uint64_t next_u64() {
    ++counter_;
    return mix(seed_ + counter_ * kGolden);
  }

  // uniform in [0, 1), 53 mantissa bits
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller, cosine branch only: consumes exactly two counter values per
  // draw, which keeps the stream position a simple function of call count.
  double gaussian() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  double gaussian(double mean, double std) { return mean + std * gaussian(); }

  // unbiased enough for shuffles over small n; documented as modulo draw
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace acit
