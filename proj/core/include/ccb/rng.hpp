#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace ccb {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer folded over the inputs. Stable across releases: run
/// seeds are mix_seed({base_seed, policy_index, batch, rep}).
[[nodiscard]] std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) noexcept;

/// A reproducible random stream identified by (seed, stream id).
struct RngStream {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  /// Engine for the whole stream, consumed sequentially.
  [[nodiscard]] Engine engine() const { return Engine(mix_seed({seed, stream})); }
  /// Engine keyed additionally by a round index.
  [[nodiscard]] Engine engine(std::uint64_t round) const {
    return Engine(mix_seed({seed, stream, round}));
  }
  [[nodiscard]] RngStream substream(std::uint64_t id) const { return {mix_seed({seed, stream}), id}; }
};

/// Uniform draw from (0, 1]: P(u <= p) = p exactly at p = 0 and p = 1.
[[nodiscard]] inline double uniform_threshold(Engine& engine) {
  return static_cast<double>((engine() >> 11) + 1) * 0x1p-53;
}

/// Uniform draw from [0, 1).
[[nodiscard]] inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1p-53;
}

/// Uniform integer in [0, n).
[[nodiscard]] std::uint64_t uniform_index(Engine& engine, std::uint64_t n);

}  // namespace ccb
