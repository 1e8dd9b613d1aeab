#pragma once

#include <cstdint>
#include <random>

namespace ghho {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Thin wrapper over mt19937_64 with the two draws the optimizers need.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream keyed by (seed, stream tag, iteration, index). Every
  /// candidate update draws from its own substream so evaluation order and
  /// thread count never change results.
  static Rng substream(std::uint64_t seed, std::uint64_t tag, std::uint64_t iteration,
                       std::uint64_t index) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ (tag * 0xD6E8FEB86659FD93ULL));
    h = splitmix64(h ^ (iteration * 0xA0761D6478BD642FULL));
    h = splitmix64(h ^ (index * 0xE7037ED1A0B428DBULL));
    return Rng(h);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ghho
