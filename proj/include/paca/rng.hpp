// Copyright 2026 The paca-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace paca {

/// SplitMix64 finalizer. Used to derive well-mixed seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for layer `ordinal` derived from an experiment-wide seed.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t ordinal) noexcept;

/// Portable random stream: std::mt19937_64 seeded with splitmix64(seed).
/// All draws are platform independent for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform integer in [0, bound) by rejection sampling; bound > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal draw (Box-Muller, one value per pair cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace paca
