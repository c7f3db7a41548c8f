#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace unisam {

/// A seeded random stream. Every randomized routine in the library takes one
/// of these explicitly; nothing draws from global state.
///
/// Streams for independent trials are obtained with `derive(base, index)`,
/// which mixes both values through splitmix64 so that neighbouring seeds and
/// indices give unrelated engines.
class RngStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RngStream(std::uint64_t seed);

  static RngStream derive(std::uint64_t base_seed, std::uint64_t index);

  /// Uniform on [0, 1).
  double uniform01();
  /// Uniform on {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);
  double normal();

  engine_type& engine() { return engine_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  engine_type engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace unisam
