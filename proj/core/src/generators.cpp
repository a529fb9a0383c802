#include "ccb/generators.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "ccb/transform.hpp"

namespace ccb {

namespace {

double uniform(Engine& e, double lo, double hi) { return lo + (hi - lo) * uniform01(e); }

void assign_weights(Node& node, const RandomBlmOptions& o, Engine& e) {
  if (node.parents.empty()) return;
  std::vector<double> raw(node.parents.size());
  for (double& r : raw) r = uniform(e, 0.05, 1.0);
  const double sum = std::accumulate(raw.begin(), raw.end(), 0.0);
  const double total = uniform(e, o.min_total_weight, o.max_total_weight);
  node.theta.resize(raw.size());
  for (std::size_t k = 0; k < raw.size(); ++k) node.theta[k] = raw[k] / sum * total;
}

}  // namespace

CausalModel random_blm(const RandomBlmOptions& o, Engine& e) {
  if (o.nodes < 2) throw std::invalid_argument("random_blm: need at least 2 nodes");
  const std::size_t n = o.nodes;
  std::vector<Node> nodes(n);
  nodes[0].name = "X1";
  nodes[0].constant = true;
  for (NodeId j = 1; j < n; ++j) {
    Node& node = nodes[j];
    node.name = j + 1 == n ? "Y" : "X" + std::to_string(j + 1);
    for (NodeId i = 0; i < j; ++i) {
      if (uniform01(e) < o.edge_probability) node.parents.push_back(i);
    }
    if (node.parents.empty() || (j + 1 == n && n > 2 && node.parents == std::vector<NodeId>{0})) {
      // Guarantee a non-root parent for Y, any parent for the others.
      const NodeId lo = j + 1 == n && n > 2 ? 1 : 0;
      const auto pick = static_cast<NodeId>(lo + uniform_index(e, j - lo));
      if (std::find(node.parents.begin(), node.parents.end(), pick) == node.parents.end()) {
        node.parents.push_back(pick);
        std::sort(node.parents.begin(), node.parents.end());
      }
    }
    assign_weights(node, o, e);
  }
  return CausalModel("random-blm", std::move(nodes), static_cast<NodeId>(n - 1));
}

CausalModel random_hidden_blm(const RandomHiddenOptions& o, Engine& e) {
  if (o.observed < 2) throw std::invalid_argument("random_hidden_blm: need at least 2 observed nodes");
  const RandomBlmOptions wo{0, 0.0, o.min_total_weight, o.max_total_weight};
  for (std::size_t attempt = 0; attempt < o.max_attempts; ++attempt) {
    // Random interleaving of the non-target nodes; Y last.
    std::vector<char> is_hidden;
    for (std::size_t i = 0; i + 1 < o.observed; ++i) is_hidden.push_back(0);
    for (std::size_t i = 0; i < o.hidden; ++i) is_hidden.push_back(1);
    for (std::size_t i = is_hidden.size(); i > 1; --i) {
      std::swap(is_hidden[i - 1], is_hidden[uniform_index(e, i)]);
    }
    is_hidden.push_back(0);

    std::vector<Node> nodes(is_hidden.size() + 1);
    nodes[0].name = "U0";
    nodes[0].hidden = true;
    nodes[0].constant = true;
    std::size_t next_x = 2;
    std::size_t next_u = 1;
    for (std::size_t j = 1; j < nodes.size(); ++j) {
      Node& node = nodes[j];
      node.hidden = is_hidden[j - 1] != 0;
      if (j + 1 == nodes.size()) {
        node.name = "Y";
      } else {
        node.name = node.hidden ? "U" + std::to_string(next_u++) : "X" + std::to_string(next_x++);
      }
      if (uniform01(e) < o.root_edge_probability) node.parents.push_back(0);
      for (NodeId i = 1; i < j; ++i) {
        if (uniform01(e) < o.edge_probability) node.parents.push_back(i);
      }
      if (node.parents.empty()) node.parents.push_back(static_cast<NodeId>(uniform_index(e, j)));
      std::sort(node.parents.begin(), node.parents.end());
      assign_weights(node, wo, e);
    }
    CausalModel model("random-hidden-blm", std::move(nodes), static_cast<NodeId>(is_hidden.size()));
    if (validate_hidden_structure(model).ok()) return model;
  }
  throw std::runtime_error("random_hidden_blm: no legal structure found");
}

Weights perturb_weights(const CausalModel& model, double magnitude, Engine& e) {
  Weights w = model.weights();
  for (NodeId id = 0; id < model.num_nodes(); ++id) {
    if (model.node(id).constant) continue;
    double sum = 0.0;
    for (double& x : w[id]) {
      x = std::clamp(x + uniform(e, -magnitude, magnitude), 0.0, 1.0);
      sum += x;
    }
    if (sum > 1.0) {
      for (double& x : w[id]) x /= sum;
    }
  }
  return w;
}

}  // namespace ccb
