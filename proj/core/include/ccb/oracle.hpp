#pragma once

// Expected-reward oracles: sigma(S, theta) = E[Y | do(S)].

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ccb/model.hpp"
#include "ccb/rng.hpp"

namespace ccb {

struct ExactOptions {
  /// Maximum number of free (non-constant, non-intervened) nodes that the
  /// 2^n enumeration will branch over.
  std::size_t enumeration_cap = 20;
};

/// True when the linear forward pass is exact for `model`: identity links,
/// no noise, nonnegative weights with L1 norm <= 1 at every node.
[[nodiscard]] bool forward_pass_exact(const CausalModel& model);

/// E[X | do(iv)] for every node by the linear forward pass
/// E[X] = sum_Z theta_{Z,X} E[Z]. Throws unless forward_pass_exact(model).
[[nodiscard]] std::vector<double> forward_expectations(const CausalModel& model,
                                                       const Intervention& iv);

/// E[node | do(iv)] by enumerating joint assignments of the node's
/// topological predecessors, weighting each by its chain-rule mass.
/// Requires a noiseless model.
[[nodiscard]] double enumerate_expectation(const CausalModel& model, const Intervention& iv,
                                           NodeId node, const ExactOptions& options = {});

/// Visits every joint assignment of all nodes with nonzero probability under
/// do(iv). Requires a noiseless model.
void enumerate_joint(const CausalModel& model, const Intervention& iv,
                     const std::function<void(std::span<const std::uint8_t>, double)>& visit,
                     const ExactOptions& options = {});

/// Forward pass when exact, enumeration otherwise. Noisy models are rejected
/// with a message pointing at mc_expected_reward.
[[nodiscard]] double exact_expectation(const CausalModel& model, const Intervention& iv,
                                       NodeId node, const ExactOptions& options = {});
[[nodiscard]] double exact_expected_reward(const CausalModel& model, const Intervention& iv,
                                           const ExactOptions& options = {});

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

[[nodiscard]] McEstimate mc_expected_reward(const CausalModel& model, const Intervention& iv,
                                            std::size_t n_samples, const RngStream& rng);

// ---------------------------------------------------------------------------
// Subset search

/// Number of subsets of an n-set with size exactly k, or with size <= k.
[[nodiscard]] std::uint64_t count_subsets(std::size_t n, std::size_t k, bool exact_size);

/// Visits subsets of `items` (assumed sorted) in lexicographic order of their
/// sorted element sequences. When exact_size is false every size 0..k is
/// visited, so {} comes first and {a} precedes {a, b}.
void for_each_subset(std::span<const NodeId> items, std::size_t k, bool exact_size,
                     const std::function<void(std::span<const NodeId>)>& visit);

struct SearchOptions {
  std::uint64_t subset_cap = 1'000'000;
  /// Restrict to |S| = K instead of |S| <= K.
  bool exact_size = false;
  ExactOptions exact;
};

struct BestIntervention {
  Intervention set;
  double value = 0.0;
};

/// Exhaustive argmax of exact_expected_reward over all-ones interventions on
/// intervenable nodes. Ties (within 1e-12) go to the lexicographically first set.
[[nodiscard]] BestIntervention best_intervention(const CausalModel& model, std::size_t budget,
                                                 const SearchOptions& options = {});

// ---------------------------------------------------------------------------
// Path utilities and property checks

struct PathSet {
  std::vector<std::vector<NodeId>> paths;
};

/// All directed paths from any source to `target`. Throws past `cap` paths.
[[nodiscard]] PathSet enumerate_paths(const CausalModel& model, std::span<const NodeId> sources,
                                      NodeId target, std::size_t cap = 100'000);

/// Nodes lying on a directed path from S (or from a constant root, which is
/// always active) to the target, excluding those sources themselves.
[[nodiscard]] std::vector<NodeId> nodes_on_paths(const CausalModel& model,
                                                 const Intervention& iv);

struct GomResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double rhs_std_error = 0.0;
};

/// lhs = |sigma(S, theta1) - sigma(S, theta2)| by the exact oracle;
/// rhs = E[sum_{X on paths} |V_X . (theta1_X - theta2_X)| l1(f_X)] with V_X
/// propagated under theta2, estimated by Monte-Carlo.
[[nodiscard]] GomResult gom_check(const CausalModel& skeleton, const Weights& theta1,
                                  const Weights& theta2, const Intervention& iv,
                                  std::size_t n_samples, const RngStream& rng);

struct MonotonicityReport {
  std::size_t checked = 0;
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Checks sigma(S + {X}) >= sigma(S) for all |S| < K and X not in S.
[[nodiscard]] MonotonicityReport monotonicity_check(const CausalModel& model, std::size_t budget,
                                                    const ExactOptions& options = {});

}  // namespace ccb
