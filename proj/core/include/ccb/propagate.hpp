#pragma once

// One round of the causal model under an intervention.
//
// Sampling follows the threshold view: each non-constant, non-intervened node
// draws gamma ~ U(0,1] and a noise term, and activates iff
// clamp(f(theta . pa) + eps, 0, 1) >= gamma, in topological order.

#include <cstdint>
#include <span>
#include <vector>

#include "ccb/model.hpp"
#include "ccb/rng.hpp"

namespace ccb {

struct Observation {
  /// Values of every node, hidden ones included; learners read only observed
  /// entries (see visible_values).
  std::vector<std::uint8_t> values;
  Intervention intervention;
  std::uint64_t round_index = 0;
};

/// Activation probability of `id` given realized values of its parents.
[[nodiscard]] double activation_probability(const Node& node, std::span<const std::uint8_t> values,
                                            double noise = 0.0);

/// One draw of the node's noise term (0 for kind none).
[[nodiscard]] double draw_noise(const NoiseSpec& noise, Engine& engine);

[[nodiscard]] Observation sample_round(const CausalModel& model, const Intervention& iv,
                                       Engine& engine, std::uint64_t round_index = 0);

/// Allocation-free form of sample_round: overwrites `values` (resized to the
/// node count). Consumes the engine identically.
void sample_values(const CausalModel& model, const Intervention& iv, Engine& engine,
                   std::vector<std::uint8_t>& values);

/// Same law, keyed by (seed, stream, round): identical triples give identical
/// observations.
[[nodiscard]] Observation sample_round(const CausalModel& model, const Intervention& iv,
                                       const RngStream& rng, std::uint64_t round_index);

[[nodiscard]] Observation sample_observational(const CausalModel& model, Engine& engine,
                                               std::uint64_t round_index = 0);
[[nodiscard]] Observation sample_observational(const CausalModel& model, const RngStream& rng,
                                               std::uint64_t round_index);

/// Realized values with hidden entries masked to 0.
[[nodiscard]] std::vector<std::uint8_t> visible_values(const CausalModel& model,
                                                       const Observation& obs);

}  // namespace ccb
