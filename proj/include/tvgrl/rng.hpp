#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace tvgrl {

/// Seeded random source with platform-independent output.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so uniform/normal/index are derived here directly
/// from the raw 64-bit words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform();

  /// Uniform integer in [0, n). Unbiased (rejection sampling).
  std::size_t index(std::size_t n);

  /// Standard normal (Box-Muller, caches the second variate).
  double normal();

  /// splitmix64 finalizer over a combination of two words; used to derive
  /// independent stream seeds such as (seed, iteration, sample index).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tvgrl
