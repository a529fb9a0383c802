#pragma once

// Rewriting a linear model with hidden variables into an equivalent
// Markovian model over the observed nodes plus a fresh constant root.
//
// For observed X_i, X_j, a hidden path is a directed path whose interior
// nodes are all hidden. The Markovian edge X_i -> X_j carries the summed
// weight products of all such paths; the constant root's edge into X_j
// carries Pr{X_j = 1 | do(every other observed node = 0)}, which for a
// linear model is the path sum from the constant sources.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccb/model.hpp"

namespace ccb {

struct HiddenPath {
  std::vector<NodeId> nodes;  ///< ids in the original model, endpoints included
  double weight = 0.0;
};

struct HiddenStructureViolation {
  NodeId hidden = 0;
  NodeId xi = 0;
  NodeId xj = 0;  ///< a descendant of xi
};

struct HiddenStructureReport {
  std::vector<HiddenStructureViolation> violations;
  std::vector<std::string> messages;
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

/// Rejects a non-constant hidden node with hidden-only paths to both some
/// observed X_i and a descendant X_j of X_i.
[[nodiscard]] HiddenStructureReport validate_hidden_structure(const CausalModel& model);

/// All hidden paths from `xi` to `xj`, the direct edge included. Throws
/// std::length_error past `cap` paths.
[[nodiscard]] std::vector<HiddenPath> enumerate_hidden_paths(const CausalModel& model, NodeId xi,
                                                             NodeId xj, std::size_t cap = 100'000);

struct EdgeProvenance {
  NodeId from = 0;  ///< ids in the transformed model
  NodeId to = 0;
  double weight = 0.0;
  std::vector<HiddenPath> paths;  ///< contributing paths, original ids
};

struct TransformResult {
  CausalModel markovian;
  /// Original id of each transformed node; nullopt for the constant root
  /// unless it stands for an observed constant of the input.
  std::vector<std::optional<NodeId>> original_id;
  std::vector<EdgeProvenance> edges;
  /// Path-sum value vs exact oracle, largest disagreement over all nodes.
  double constant_weight_discrepancy = 0.0;
  std::vector<std::string> notes;

  /// Sidecar document: notes plus every edge with its contributing paths.
  [[nodiscard]] nlohmann::json provenance_json(const CausalModel& original) const;
};

struct TransformOptions {
  std::size_t path_cap = 100'000;
  double cross_check_tolerance = 1e-10;
};

/// Requires identity links and a legal hidden structure (std::invalid_argument
/// otherwise). Throws std::logic_error if the path-sum and oracle values of a
/// constant-root weight disagree beyond the tolerance.
[[nodiscard]] TransformResult transform_to_markovian(const CausalModel& model,
                                                     const TransformOptions& options = {});

struct EquivalenceReport {
  std::size_t reward_checks = 0;
  std::size_t conditional_checks = 0;
  double max_reward_gap = 0.0;
  double max_conditional_gap = 0.0;
  std::vector<std::string> failures;
  [[nodiscard]] bool ok() const noexcept { return failures.empty(); }
};

struct EquivalenceOptions {
  std::size_t max_k = 2;
  bool check_conditionals = true;
  /// Largest |S| used for the conditional checks.
  std::size_t conditional_max_k = 1;
  double tolerance = 1e-9;
};

/// Compares E[Y | do(S = s)] in both models for every S with |S| <= max_k
/// and every s in {0,1}^|S|; optionally compares every node's conditional
/// activation probability given its transformed parents by enumeration.
[[nodiscard]] EquivalenceReport verify_equivalence(const CausalModel& original,
                                                   const TransformResult& transformed,
                                                   const EquivalenceOptions& options = {});

}  // namespace ccb
