// Copyright 2026 The memtrack Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

namespace memtrack {

/// Seedable stream with deterministic, order-free substream derivation.
class RandomStream {
public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  /// Stream for one frame of a sequence; independent of what other frames drew.
  static RandomStream for_frame(std::uint64_t sequence_seed, std::uint64_t frame_index) {
    return RandomStream(mix(sequence_seed ^ mix(frame_index + 0x5851f42d4c957f2dULL)));
  }

  /// Child stream keyed by `tag`, independent of draws already taken here.
  RandomStream substream(std::uint64_t tag) const {
    return RandomStream(mix(seed_ + 0x9e3779b97f4a7c15ULL * (tag + 1)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean, double stddev) {
    if (stddev <= 0.0) {
      return mean;
    }
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  /// splitmix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace memtrack
