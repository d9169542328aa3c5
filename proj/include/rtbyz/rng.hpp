#pragma once

#include <cstdint>

namespace rtbyz {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream split: derives an independent seed for a labelled
/// sub-stream. Used for links (i, j), nodes, jobs and repetitions.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a, std::uint64_t b = 0) {
  return mix64(mix64(parent ^ mix64(a + 0x5851f42d4c957f2dULL)) ^ mix64(b + 0x14057b7ef767814fULL));
}

/// Stateless draw from stream `seed` at position (counter, tag).
constexpr std::uint64_t draw_u64(std::uint64_t seed, std::uint64_t counter, std::uint64_t tag = 0) {
  return mix64(seed ^ mix64(counter * 0xd1342543de82ef95ULL + tag));
}

/// Uniform in [0, 1) with 53 bits of resolution.
constexpr double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

inline double draw_unit(std::uint64_t seed, std::uint64_t counter, std::uint64_t tag = 0) {
  return to_unit(draw_u64(seed, counter, tag));
}

/// Small sequential generator on top of the same mixer.
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double unit() { return to_unit(next()); }
  /// Uniform in [0, bound).
  std::uint64_t below(std::uint64_t bound) { return bound == 0 ? 0 : next() % bound; }
  bool bernoulli(double p) { return unit() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace rtbyz
