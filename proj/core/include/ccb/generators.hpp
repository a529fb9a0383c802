#pragma once

// Random model families for property tests and benchmarks.

#include <cstddef>

#include "ccb/model.hpp"
#include "ccb/rng.hpp"

namespace ccb {

struct RandomBlmOptions {
  /// Total node count: the constant root X1, the middle nodes and Y.
  std::size_t nodes = 6;
  double edge_probability = 0.5;
  /// Each node's weights are rescaled to an L1 norm drawn from this range.
  double min_total_weight = 0.3;
  double max_total_weight = 1.0;
};

/// Random linear model in id order X1, X2, ..., Y; every non-root node has at
/// least one parent and Y has at least one parent besides X1 when possible.
[[nodiscard]] CausalModel random_blm(const RandomBlmOptions& options, Engine& engine);

struct RandomHiddenOptions {
  /// Observed non-constant nodes, Y included.
  std::size_t observed = 5;
  /// Non-constant hidden nodes (the constant hidden root comes on top).
  std::size_t hidden = 2;
  double edge_probability = 0.4;
  double root_edge_probability = 0.5;
  double min_total_weight = 0.3;
  double max_total_weight = 1.0;
  std::size_t max_attempts = 10'000;
};

/// Random linear model with hidden nodes whose structure passes
/// validate_hidden_structure. Throws std::runtime_error if none is found
/// within max_attempts.
[[nodiscard]] CausalModel random_hidden_blm(const RandomHiddenOptions& options, Engine& engine);

/// Adds U(-magnitude, magnitude) to every weight of a non-constant node,
/// clamps into [0, 1] and rescales any node whose L1 norm exceeds 1.
[[nodiscard]] Weights perturb_weights(const CausalModel& model, double magnitude, Engine& engine);

}  // namespace ccb
