#include "ccb/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace ccb {

namespace {

constexpr double kWeightSlack = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// LinkFunction

LinkFunction LinkFunction::identity(double l2) {
  if (!(l2 >= 0.0)) throw std::invalid_argument("identity link: l2 must be >= 0");
  LinkFunction f;
  f.kind_ = LinkKind::identity;
  f.l1_ = 1.0;
  f.kappa_ = 1.0;
  f.l2_ = l2;
  return f;
}

LinkFunction LinkFunction::logistic(double scale, double offset) {
  if (!(scale > 0.0)) throw std::invalid_argument("logistic link: scale must be > 0");
  LinkFunction f;
  f.kind_ = LinkKind::logistic;
  f.scale_ = scale;
  f.offset_ = offset;
  // sup sigma' = 1/4, sup |sigma''| = 1/(6 sqrt 3).
  f.l1_ = scale / 4.0;
  f.l2_ = scale * scale / (6.0 * std::sqrt(3.0));
  return f.bound_to_domain(1.0);
}

LinkFunction LinkFunction::tabulated(std::vector<double> knots, std::vector<double> values,
                                     double l2) {
  if (knots.size() < 2 || knots.size() != values.size()) {
    throw std::invalid_argument("tabulated link: need >= 2 aligned knots and values");
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (!(knots[i] > knots[i - 1])) {
      throw std::invalid_argument("tabulated link: knots must be strictly increasing");
    }
    if (values[i] < values[i - 1]) {
      throw std::invalid_argument("tabulated link: values must be nondecreasing");
    }
  }
  if (!(l2 >= 0.0)) throw std::invalid_argument("tabulated link: l2 must be >= 0");
  LinkFunction f;
  f.kind_ = LinkKind::tabulated;
  f.knots_ = std::move(knots);
  f.values_ = std::move(values);
  f.l2_ = l2;
  return f.bound_to_domain(1.0);
}

double LinkFunction::value(double z) const {
  switch (kind_) {
    case LinkKind::identity:
      return z;
    case LinkKind::logistic:
      return sigmoid(scale_ * z + offset_);
    case LinkKind::tabulated: {
      if (z <= knots_.front()) return values_.front();
      if (z >= knots_.back()) return values_.back();
      auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
      const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
      const double t = (z - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
      return values_[i - 1] + t * (values_[i] - values_[i - 1]);
    }
  }
  return z;
}

double LinkFunction::derivative(double z) const {
  switch (kind_) {
    case LinkKind::identity:
      return 1.0;
    case LinkKind::logistic: {
      const double s = sigmoid(scale_ * z + offset_);
      return scale_ * s * (1.0 - s);
    }
    case LinkKind::tabulated: {
      if (z < knots_.front() || z >= knots_.back()) return 0.0;
      auto it = std::upper_bound(knots_.begin(), knots_.end(), z);
      const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
      return (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
    }
  }
  return 1.0;
}

LinkFunction LinkFunction::bound_to_domain(double domain_max) const {
  LinkFunction f = *this;
  const double hi = std::max(domain_max, 0.0);
  switch (kind_) {
    case LinkKind::identity:
      break;
    case LinkKind::logistic:
      // sigma' is unimodal, so its infimum over an interval sits at an end.
      f.kappa_ = std::min(derivative(0.0), derivative(hi));
      break;
    case LinkKind::tabulated: {
      double lo_slope = std::numeric_limits<double>::infinity();
      double hi_slope = 0.0;
      for (std::size_t i = 1; i < knots_.size(); ++i) {
        const double slope = (values_[i] - values_[i - 1]) / (knots_[i] - knots_[i - 1]);
        hi_slope = std::max(hi_slope, slope);
        if (knots_[i] > 0.0 && knots_[i - 1] < hi) lo_slope = std::min(lo_slope, slope);
      }
      // Any part of the domain outside the table is flat.
      if (knots_.front() > 0.0 || knots_.back() < hi) lo_slope = 0.0;
      f.l1_ = hi_slope;
      f.kappa_ = std::isfinite(lo_slope) ? lo_slope : 0.0;
      break;
    }
  }
  return f;
}

std::string LinkFunction::describe() const {
  switch (kind_) {
    case LinkKind::identity:
      return "identity";
    case LinkKind::logistic:
      return "logistic(" + format_double(scale_) + "," + format_double(offset_) + ")";
    case LinkKind::tabulated:
      return "tabulated";
  }
  return "identity";
}

// ---------------------------------------------------------------------------
// Intervention

Intervention Intervention::all_ones(std::vector<NodeId> nodes) {
  std::vector<std::uint8_t> values(nodes.size(), 1);
  return with_values(std::move(nodes), std::move(values));
}

Intervention Intervention::with_values(std::vector<NodeId> nodes,
                                       std::vector<std::uint8_t> values) {
  if (nodes.size() != values.size()) {
    throw std::invalid_argument("intervention: nodes and values differ in length");
  }
  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes[a] < nodes[b]; });
  Intervention iv;
  iv.nodes.reserve(nodes.size());
  iv.values.reserve(nodes.size());
  for (auto i : order) {
    if (!iv.nodes.empty() && iv.nodes.back() == nodes[i]) {
      throw std::invalid_argument("intervention: duplicate node");
    }
    iv.nodes.push_back(nodes[i]);
    iv.values.push_back(values[i] ? 1 : 0);
  }
  return iv;
}

std::optional<std::uint8_t> Intervention::forced(NodeId id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id);
  if (it == nodes.end() || *it != id) return std::nullopt;
  return values[static_cast<std::size_t>(it - nodes.begin())];
}

// ---------------------------------------------------------------------------
// CausalModel

CausalModel::CausalModel(std::string name, std::vector<Node> nodes, NodeId target)
    : name_(std::move(name)), nodes_(std::move(nodes)), target_(target) {
  const std::size_t n = nodes_.size();
  if (n == 0) throw std::invalid_argument("causal model: no nodes");
  if (target_ >= n) throw std::invalid_argument("causal model: target out of range");

  children_.assign(n, {});
  for (NodeId id = 0; id < n; ++id) {
    Node& node = nodes_[id];
    if (node.theta.size() != node.parents.size()) {
      throw std::invalid_argument("causal model: node '" + node.name +
                                  "' has theta misaligned with parents");
    }
    for (NodeId p : node.parents) {
      if (p >= n) throw std::invalid_argument("causal model: parent id out of range");
      children_[p].push_back(id);
    }
    if (!node.constant) {
      max_in_degree_ = std::max(max_in_degree_, node.parents.size());
      node.link = node.link.bound_to_domain(static_cast<double>(node.parents.size()));
    }
  }
  for (NodeId id = 0; id < n; ++id) {
    if (!nodes_[id].constant) max_out_degree_ = std::max(max_out_degree_, children_[id].size());
  }

  // Kahn's algorithm, smallest id first; the target is held back so it comes
  // last whenever it has no children.
  std::vector<std::size_t> indegree(n, 0);
  for (NodeId id = 0; id < n; ++id) indegree[id] = nodes_[id].parents.size();
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  const bool hold_target = children_[target_].empty();
  for (NodeId id = 0; id < n; ++id) {
    if (indegree[id] == 0 && !(hold_target && id == target_)) ready.push(id);
  }
  bool target_ready = hold_target && indegree[target_] == 0;
  while (!ready.empty() || target_ready) {
    NodeId id;
    if (!ready.empty()) {
      id = ready.top();
      ready.pop();
    } else {
      id = target_;
      target_ready = false;
    }
    topo_.push_back(id);
    for (NodeId c : children_[id]) {
      if (--indegree[c] == 0) {
        if (hold_target && c == target_) {
          target_ready = true;
        } else {
          ready.push(c);
        }
      }
    }
  }
  acyclic_ = topo_.size() == n;
  if (!acyclic_) topo_.clear();
}

const std::vector<NodeId>& CausalModel::topological_order() const {
  if (!acyclic_) throw std::logic_error("causal model '" + name_ + "' contains a cycle");
  return topo_;
}

bool CausalModel::has_hidden() const noexcept {
  return std::any_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.hidden; });
}

bool CausalModel::all_identity() const noexcept {
  return std::all_of(nodes_.begin(), nodes_.end(),
                     [](const Node& n) { return n.constant || n.link.is_identity(); });
}

bool CausalModel::noiseless() const noexcept {
  return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) {
    return n.constant || n.noise.kind == NoiseKind::none;
  });
}

std::vector<NodeId> CausalModel::intervenable() const {
  std::vector<NodeId> out;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    const Node& n = nodes_[id];
    if (!n.hidden && !n.constant && id != target_) out.push_back(id);
  }
  return out;
}

std::optional<NodeId> CausalModel::find(const std::string& name) const {
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (nodes_[id].name == name) return id;
  }
  return std::nullopt;
}

NodeId CausalModel::id_of(const std::string& name) const {
  auto id = find(name);
  if (!id) throw std::invalid_argument("unknown node '" + name + "' in model '" + name_ + "'");
  return *id;
}

Weights CausalModel::weights() const {
  Weights w;
  w.reserve(nodes_.size());
  for (const Node& n : nodes_) w.push_back(n.theta);
  return w;
}

CausalModel CausalModel::with_weights(const Weights& theta) const {
  if (theta.size() != nodes_.size()) {
    throw std::invalid_argument("with_weights: expected one weight vector per node");
  }
  CausalModel copy = *this;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (theta[i].size() != nodes_[i].parents.size()) {
      throw std::invalid_argument("with_weights: weight vector misaligned for node '" +
                                  nodes_[i].name + "'");
    }
    copy.nodes_[i].theta = theta[i];
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Free functions

ValidationReport validate_model(const CausalModel& model) {
  ValidationReport report;
  auto& v = report.violations;
  const auto& nodes = model.nodes();

  if (!model.is_acyclic()) v.push_back("cycle: the graph is not acyclic");

  if (!nodes.front().constant) {
    v.push_back("node '" + nodes.front().name + "' at index 0 must be a constant root");
  }

  const Node& y = model.node(model.target());
  if (y.hidden) v.push_back("target '" + y.name + "' must be observed");
  if (y.constant) v.push_back("target '" + y.name + "' must not be constant");
  if (!model.children(model.target()).empty()) {
    v.push_back("target '" + y.name + "' has children");
  }

  for (NodeId id = 0; id < nodes.size(); ++id) {
    const Node& n = nodes[id];
    if (n.constant) {
      if (!n.parents.empty()) v.push_back("constant node '" + n.name + "' has parents");
      continue;
    }
    for (std::size_t k = 0; k < n.theta.size(); ++k) {
      const double w = n.theta[k];
      if (!(w >= 0.0 && w <= 1.0)) {
        std::ostringstream os;
        os << "weight " << w << " on edge " << nodes[n.parents[k]].name << "->" << n.name
           << " outside [0,1]";
        v.push_back(os.str());
      }
    }
    std::vector<NodeId> sorted = n.parents;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      v.push_back("node '" + n.name + "' lists a parent twice");
    }
    if (n.link.is_identity() && n.noise.kind == NoiseKind::none) {
      double norm = 0.0;
      for (double w : n.theta) norm += std::abs(w);
      if (norm > 1.0 + kWeightSlack) {
        std::ostringstream os;
        os << "node '" << n.name << "': L1 norm " << norm << " > 1 for identity link";
        v.push_back(os.str());
      }
    }
    const LinkFunction& f = n.link;
    if (!(f.l1() > 0.0) || !(f.l2() >= 0.0) || !(f.kappa() > 0.0) ||
        f.kappa() > f.l1() + kWeightSlack) {
      std::ostringstream os;
      os << "node '" << n.name << "': link bounds must satisfy l1 > 0, l2 >= 0, 0 < kappa <= l1"
         << " (l1=" << f.l1() << ", l2=" << f.l2() << ", kappa=" << f.kappa() << ")";
      v.push_back(os.str());
    }
    if (n.noise.kind == NoiseKind::truncated_gaussian && !(n.noise.stddev >= 0.0)) {
      v.push_back("node '" + n.name + "': noise stddev must be >= 0");
    }
  }
  return report;
}

std::vector<NodeId> topological_order(const CausalModel& model) {
  return model.topological_order();
}

void check_intervention(const CausalModel& model, const Intervention& iv, std::size_t budget) {
  if (iv.size() > budget) {
    throw std::invalid_argument("intervention exceeds budget K=" + std::to_string(budget));
  }
  for (NodeId id : iv.nodes) {
    if (id >= model.num_nodes()) throw std::invalid_argument("intervention: node out of range");
    const Node& n = model.node(id);
    if (n.constant) throw std::invalid_argument("intervention: constant node '" + n.name + "'");
    if (n.hidden) throw std::invalid_argument("intervention: hidden node '" + n.name + "'");
    if (id == model.target()) throw std::invalid_argument("intervention: target node");
  }
}

double compute_zeta(double upsilon, std::size_t d_out) {
  if (!(upsilon > 0.0 && upsilon < 1.0)) {
    throw std::invalid_argument("compute_zeta: upsilon must lie in (0,1)");
  }
  const double e = static_cast<double>(d_out) + 1.0;
  const double a = std::pow(upsilon, e);
  const double b = std::pow(1.0 - upsilon, e);
  return a / (a + b);
}

double activation_margin(const CausalModel& model) {
  double margin = 0.5;
  for (const Node& n : model.nodes()) {
    if (n.constant) continue;
    const std::size_t d = n.parents.size();
    if (d > 20) throw std::invalid_argument("activation_margin: in-degree too large");
    // Constant parents are always active, so only the free parents vary.
    std::uint64_t fixed = 0;
    for (std::size_t k = 0; k < d; ++k) {
      if (model.node(n.parents[k]).constant) fixed |= std::uint64_t{1} << k;
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
      if ((mask & fixed) != fixed) continue;
      double z = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        if (mask >> k & 1U) z += n.theta[k];
      }
      const double p = std::clamp(n.link.value(z), 0.0, 1.0);
      margin = std::min({margin, p, 1.0 - p});
    }
  }
  return margin;
}

// ---------------------------------------------------------------------------
// Builtin graphs

namespace {

struct EdgeSpec {
  int from;  // 1-based X index, matching X1..Xn naming
  int to;
  double weight;
};

CausalModel make_graph(const std::string& name, int n, const std::vector<EdgeSpec>& edges) {
  std::vector<Node> nodes(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    nodes[static_cast<std::size_t>(i)].name = i + 1 == n ? "Y" : "X" + std::to_string(i + 1);
  }
  nodes[0].constant = true;
  for (const auto& e : edges) {
    Node& child = nodes[static_cast<std::size_t>(e.to - 1)];
    child.parents.push_back(static_cast<NodeId>(e.from - 1));
    child.theta.push_back(e.weight);
  }
  return CausalModel(name, std::move(nodes), static_cast<NodeId>(n - 1));
}

// Parallel graph: X1 -> X2..X_{k+1} -> Y.
CausalModel parallel_graph(const std::string& name, const std::vector<double>& root_weights,
                           const std::vector<double>& target_weights) {
  const int k = static_cast<int>(root_weights.size());
  const int n = k + 2;
  std::vector<EdgeSpec> edges;
  for (int i = 0; i < k; ++i) edges.push_back({1, i + 2, root_weights[static_cast<std::size_t>(i)]});
  for (int i = 0; i < k; ++i) edges.push_back({i + 2, n, target_weights[static_cast<std::size_t>(i)]});
  return make_graph(name, n, edges);
}

}  // namespace

CausalModel builtin_graph(const std::string& name) {
  if (name == "G1") {
    return parallel_graph("G1", {0.3, 0.4, 0.2, 0.1, 0.6, 0.5}, {0.1, 0.3, 0.2, 0.2, 0.1, 0.1});
  }
  const std::vector<double> g2_root{0.2, 0.2, 0.6, 0.6, 0.6, 0.6, 0.6, 0.6};
  const std::vector<double> g2_target{0.2, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1};
  auto prefix = [](const std::vector<double>& v, std::size_t k) {
    return std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k));
  };
  if (name == "G2") return parallel_graph("G2", g2_root, g2_target);
  if (name == "G3") return parallel_graph("G3", prefix(g2_root, 6), prefix(g2_target, 6));
  if (name == "G4") return parallel_graph("G4", prefix(g2_root, 4), prefix(g2_target, 4));
  if (name == "G5") {
    // Two layers: X1 -> X2..X6; {X2,X3} -> {X4,X5,X6}; {X4,X5,X6} -> Y.
    return make_graph("G5", 7,
                      {{1, 2, 0.1}, {1, 3, 0.1}, {1, 4, 0.1}, {2, 4, 0.1}, {3, 4, 0.2},
                       {1, 5, 0.1}, {2, 5, 0.7}, {3, 5, 0.1}, {1, 6, 0.1}, {2, 6, 0.7},
                       {3, 6, 0.1}, {4, 7, 0.6}, {5, 7, 0.1}, {6, 7, 0.1}});
  }
  throw std::invalid_argument("unknown builtin graph '" + name + "' (expected G1..G5)");
}

std::vector<std::string> builtin_graph_names() { return {"G1", "G2", "G3", "G4", "G5"}; }

}  // namespace ccb
