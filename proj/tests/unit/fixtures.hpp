#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "ccb/model.hpp"

namespace ccb::test {

struct EdgeDef {
  std::string from;
  std::string to;
  double weight;
};

/// Identity-link model. `names` lists the nodes in id order; the first is the
/// constant root, the last the target. Names listed in `hidden` are latent.
inline CausalModel build_model(const std::string& model_name, const std::vector<std::string>& names,
                               const std::vector<EdgeDef>& edges,
                               const std::vector<std::string>& hidden = {},
                               const std::vector<std::string>& constants = {}) {
  std::vector<Node> nodes(names.size());
  auto index_of = [&](const std::string& n) -> NodeId {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == n) return static_cast<NodeId>(i);
    }
    throw std::invalid_argument("fixture: unknown node " + n);
  };
  for (std::size_t i = 0; i < names.size(); ++i) nodes[i].name = names[i];
  nodes.front().constant = true;
  for (const auto& h : hidden) nodes[index_of(h)].hidden = true;
  for (const auto& c : constants) nodes[index_of(c)].constant = true;
  for (const auto& e : edges) {
    Node& child = nodes[index_of(e.to)];
    child.parents.push_back(index_of(e.from));
    child.theta.push_back(e.weight);
  }
  return CausalModel(model_name, std::move(nodes), static_cast<NodeId>(names.size() - 1));
}

inline CausalModel chain(double w1, double w2) {
  return build_model("chain", {"X1", "X2", "Y"}, {{"X1", "X2", w1}, {"X2", "Y", w2}});
}

}  // namespace ccb::test
