#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pcbls {

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combine a seed with one more key into a new seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t key) noexcept;

/// Named sub-seed (data, init, shuffle, corruption, ...).
std::uint64_t named_seed(std::uint64_t seed, std::string_view name) noexcept;

/// Seeded generator with portable uniform/normal draws.
///
/// The standard distributions are implementation-defined, so draws are built
/// directly on the mt19937_64 bit stream to keep golden values stable across
/// standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace pcbls
