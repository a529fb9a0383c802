#pragma once

// Binary generalized linear causal models over a DAG.
//
// Every node is a {0,1} variable. A non-constant node X is activated with
// probability clamp(f_X(theta_X . pa(X)) + eps_X, 0, 1), where pa(X) is the
// vector of realized parent values in the order of the node's parents list.
// Constant nodes (the observed root X1, and the hidden root U0 of models with
// latent confounders) have no parents and are always 1.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ccb {

using NodeId = std::uint32_t;

/// Per-node weight vectors, indexed by node and aligned with the parents list.
using Weights = std::vector<std::vector<double>>;

enum class LinkKind { identity, logistic, tabulated };

/// Monotone link f_X together with the derivative constants used by the
/// learning guarantees: l1 = sup f', l2 = sup |f''|, kappa = inf f' over the
/// node's input domain [0, |Pa(X)|].
class LinkFunction {
 public:
  LinkFunction() = default;

  static LinkFunction identity(double l2 = 0.0);
  /// f(z) = 1 / (1 + exp(-(scale * z + offset))), scale > 0.
  static LinkFunction logistic(double scale, double offset);
  /// Piecewise-linear interpolation through (knots[i], values[i]); constant
  /// beyond the end knots. Knots strictly increasing, values nondecreasing.
  static LinkFunction tabulated(std::vector<double> knots, std::vector<double> values,
                                double l2 = 0.0);

  [[nodiscard]] LinkKind kind() const noexcept { return kind_; }
  [[nodiscard]] bool is_identity() const noexcept { return kind_ == LinkKind::identity; }

  [[nodiscard]] double value(double z) const;
  [[nodiscard]] double derivative(double z) const;

  [[nodiscard]] double l1() const noexcept { return l1_; }
  [[nodiscard]] double l2() const noexcept { return l2_; }
  [[nodiscard]] double kappa() const noexcept { return kappa_; }

  [[nodiscard]] double scale() const noexcept { return scale_; }
  [[nodiscard]] double offset() const noexcept { return offset_; }
  [[nodiscard]] const std::vector<double>& knots() const noexcept { return knots_; }
  [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }

  /// Recomputes kappa (and l1 for tabulated links) over [0, domain_max].
  [[nodiscard]] LinkFunction bound_to_domain(double domain_max) const;

  /// Compact text form: "identity", "logistic(2,-1)", "tabulated".
  [[nodiscard]] std::string describe() const;

  friend bool operator==(const LinkFunction&, const LinkFunction&) = default;

 private:
  LinkKind kind_ = LinkKind::identity;
  double l1_ = 1.0;
  double l2_ = 0.0;
  double kappa_ = 1.0;
  double scale_ = 1.0;
  double offset_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> values_;
};

enum class NoiseKind { none, truncated_gaussian };

/// Additive noise on the activation probability. The truncated Gaussian is
/// zero-mean, cut at +-3 stddev; the sum f + eps is clamped into [0, 1].
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  double stddev = 0.0;

  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

struct Node {
  std::string name;
  bool hidden = false;
  bool constant = false;
  std::vector<NodeId> parents;
  std::vector<double> theta;
  LinkFunction link;
  NoiseSpec noise;

  friend bool operator==(const Node&, const Node&) = default;
};

/// An intervention do(S = s). Nodes are kept sorted by id; values default to 1.
struct Intervention {
  std::vector<NodeId> nodes;
  std::vector<std::uint8_t> values;

  static Intervention all_ones(std::vector<NodeId> nodes);
  static Intervention with_values(std::vector<NodeId> nodes, std::vector<std::uint8_t> values);

  [[nodiscard]] bool empty() const noexcept { return nodes.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
  /// Forced value of `id`, or nullopt if the node is not intervened.
  [[nodiscard]] std::optional<std::uint8_t> forced(NodeId id) const;
  [[nodiscard]] bool contains(NodeId id) const { return forced(id).has_value(); }

  friend bool operator==(const Intervention&, const Intervention&) = default;
  friend auto operator<=>(const Intervention&, const Intervention&) = default;
};

/// Immutable causal model. Construction checks only index-level consistency
/// (parent ids in range, theta aligned with parents); semantic checks live in
/// validate_model().
class CausalModel {
 public:
  CausalModel() = default;
  CausalModel(std::string name, std::vector<Node> nodes, NodeId target);

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] std::size_t num_nodes() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const Node& node(NodeId id) const { return nodes_.at(id); }
  [[nodiscard]] NodeId target() const noexcept { return target_; }
  [[nodiscard]] const std::vector<NodeId>& children(NodeId id) const { return children_.at(id); }

  [[nodiscard]] bool is_acyclic() const noexcept { return acyclic_; }
  /// Throws std::logic_error when the graph has a cycle.
  [[nodiscard]] const std::vector<NodeId>& topological_order() const;

  [[nodiscard]] bool has_hidden() const noexcept;
  [[nodiscard]] bool all_identity() const noexcept;
  [[nodiscard]] bool noiseless() const noexcept;

  /// Maximum in-degree over non-constant nodes.
  [[nodiscard]] std::size_t max_in_degree() const noexcept { return max_in_degree_; }
  /// Maximum out-degree over nodes other than constant roots.
  [[nodiscard]] std::size_t max_out_degree() const noexcept { return max_out_degree_; }

  /// Observed, non-constant nodes other than the target, in id order.
  [[nodiscard]] std::vector<NodeId> intervenable() const;
  [[nodiscard]] std::optional<NodeId> find(const std::string& name) const;
  [[nodiscard]] NodeId id_of(const std::string& name) const;

  [[nodiscard]] Weights weights() const;
  /// Copy of this model with every node's theta replaced.
  [[nodiscard]] CausalModel with_weights(const Weights& theta) const;

  friend bool operator==(const CausalModel& a, const CausalModel& b) {
    return a.name_ == b.name_ && a.nodes_ == b.nodes_ && a.target_ == b.target_;
  }

 private:
  std::string name_;
  std::vector<Node> nodes_;
  NodeId target_ = 0;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> topo_;
  bool acyclic_ = true;
  std::size_t max_in_degree_ = 0;
  std::size_t max_out_degree_ = 0;
};

struct ValidationReport {
  std::vector<std::string> violations;
  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
};

[[nodiscard]] ValidationReport validate_model(const CausalModel& model);

/// Parents before children; constant roots first; the target last.
[[nodiscard]] std::vector<NodeId> topological_order(const CausalModel& model);

/// Throws std::invalid_argument unless `iv` touches only intervenable nodes
/// and has at most `budget` entries.
void check_intervention(const CausalModel& model, const Intervention& iv, std::size_t budget);

/// zeta = u^(d+1) / (u^(d+1) + (1-u)^(d+1)), the parent-balance constant
/// implied by every conditional activation probability lying in [u, 1-u].
[[nodiscard]] double compute_zeta(double upsilon, std::size_t d_out);

/// Smallest min(p, 1-p) over every non-constant node and every parent
/// assignment of a noiseless model (constant parents held at 1): the largest
/// u with p in [u, 1-u].
[[nodiscard]] double activation_margin(const CausalModel& model);

/// The five reference graphs G1..G5 with their published weights.
[[nodiscard]] CausalModel builtin_graph(const std::string& name);
[[nodiscard]] std::vector<std::string> builtin_graph_names();

}  // namespace ccb
