#include "ccb/transform.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ccb/model_io.hpp"
#include "ccb/oracle.hpp"

namespace ccb {

namespace {

bool observed(const Node& n) { return !n.hidden; }

/// Depth-first walk from `source` through hidden interiors. `visit` receives
/// each path that ends at an observed node (the source excluded as an end).
void walk_hidden_paths(const CausalModel& model, NodeId source, std::size_t cap,
                       const std::function<void(const std::vector<NodeId>&, double)>& visit) {
  std::vector<NodeId> path{source};
  std::size_t found = 0;
  std::function<void(NodeId, double)> rec = [&](NodeId at, double weight) {
    for (NodeId c : model.children(at)) {
      const Node& child = model.node(c);
      const auto& ps = child.parents;
      const auto k = static_cast<std::size_t>(std::find(ps.begin(), ps.end(), at) - ps.begin());
      const double w = weight * child.theta[k];
      path.push_back(c);
      if (observed(child)) {
        if (++found > cap) throw std::length_error("hidden path enumeration: cap exceeded");
        visit(path, w);
      } else {
        rec(c, w);
      }
      path.pop_back();
    }
  };
  rec(source, 1.0);
}

std::vector<std::vector<char>> descendants(const CausalModel& model) {
  const std::size_t n = model.num_nodes();
  std::vector<std::vector<char>> desc(n, std::vector<char>(n, 0));
  const auto& topo = model.topological_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    for (NodeId c : model.children(*it)) {
      desc[*it][c] = 1;
      for (std::size_t k = 0; k < n; ++k) {
        if (desc[c][k]) desc[*it][k] = 1;
      }
    }
  }
  return desc;
}

std::string path_text(const CausalModel& model, const std::vector<NodeId>& nodes) {
  std::string out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out += "->";
    out += model.node(nodes[i]).name;
  }
  return out;
}

}  // namespace

HiddenStructureReport validate_hidden_structure(const CausalModel& model) {
  HiddenStructureReport report;
  if (!model.has_hidden()) return report;
  if (!model.is_acyclic()) {
    report.messages.push_back("graph has a cycle");
    report.violations.push_back({});
    return report;
  }
  const auto desc = descendants(model);
  for (NodeId u = 0; u < model.num_nodes(); ++u) {
    const Node& un = model.node(u);
    if (!un.hidden || un.constant) continue;
    std::vector<NodeId> ends;
    walk_hidden_paths(model, u, 100'000, [&](const std::vector<NodeId>& p, double) {
      if (std::find(ends.begin(), ends.end(), p.back()) == ends.end()) ends.push_back(p.back());
    });
    std::sort(ends.begin(), ends.end());
    for (NodeId xi : ends) {
      for (NodeId xj : ends) {
        if (xi != xj && desc[xi][xj]) {
          report.violations.push_back({u, xi, xj});
          report.messages.push_back("hidden node " + un.name + " has hidden paths to " +
                                    model.node(xi).name + " and its descendant " +
                                    model.node(xj).name);
        }
      }
    }
  }
  return report;
}

std::vector<HiddenPath> enumerate_hidden_paths(const CausalModel& model, NodeId xi, NodeId xj,
                                               std::size_t cap) {
  if (model.node(xi).hidden || model.node(xj).hidden) {
    throw std::invalid_argument("enumerate_hidden_paths: endpoints must be observed");
  }
  std::vector<HiddenPath> out;
  walk_hidden_paths(model, xi, cap, [&](const std::vector<NodeId>& p, double w) {
    if (p.back() == xj) out.push_back({p, w});
  });
  return out;
}

TransformResult transform_to_markovian(const CausalModel& model, const TransformOptions& options) {
  if (!model.all_identity()) {
    throw std::invalid_argument("transform: every link must be the identity");
  }
  const auto structure = validate_hidden_structure(model);
  if (!structure.ok()) {
    std::string msg = "transform: illegal hidden structure";
    for (const auto& m : structure.messages) msg += "; " + m;
    throw std::invalid_argument(msg);
  }

  TransformResult result;
  const std::size_t n = model.num_nodes();

  // Transformed ids: 0 is the constant root, then observed non-constant nodes
  // in original id order.
  std::vector<std::optional<NodeId>> new_id(n);
  std::vector<NodeId> observed_constants;
  result.original_id.push_back(std::nullopt);
  bool name_taken = false;
  for (NodeId id = 0; id < n; ++id) {
    const Node& node = model.node(id);
    if (node.hidden) continue;
    if (node.constant) {
      observed_constants.push_back(id);
      continue;
    }
    if (node.name == "X1") name_taken = true;
    new_id[id] = static_cast<NodeId>(result.original_id.size());
    result.original_id.push_back(id);
  }
  const std::string root_name = name_taken ? "X1_root" : "X1";
  if (name_taken) {
    result.notes.push_back("an observed non-constant node is named X1; the constant root is named " +
                           root_name);
  }
  if (observed_constants.size() == 1) result.original_id[0] = observed_constants[0];
  for (NodeId c : observed_constants) {
    result.notes.push_back("observed constant node " + model.node(c).name +
                           " merged into the constant root " + root_name);
  }

  const std::size_t m = result.original_id.size();
  // paths[from][to], transformed ids; from = 0 collects all constant sources.
  std::vector<std::vector<std::vector<HiddenPath>>> paths(m, std::vector<std::vector<HiddenPath>>(m));
  std::size_t total_paths = 0;
  for (NodeId src = 0; src < n; ++src) {
    const Node& node = model.node(src);
    std::optional<NodeId> from;
    if (node.constant) {
      from = 0;
    } else if (!node.hidden) {
      from = new_id[src];
    }
    if (!from) continue;
    walk_hidden_paths(model, src, options.path_cap, [&](const std::vector<NodeId>& p, double w) {
      const auto to = new_id[p.back()];
      if (!to) return;  // ends at an observed constant, which has no parents
      if (++total_paths > options.path_cap) {
        throw std::length_error("transform: hidden path cap exceeded");
      }
      paths[*from][*to].push_back({p, w});
    });
  }

  std::vector<Node> nodes(m);
  nodes[0].name = root_name;
  nodes[0].constant = true;
  for (NodeId j = 1; j < m; ++j) {
    const Node& orig = model.node(*result.original_id[j]);
    Node& node = nodes[j];
    node.name = orig.name;
    node.link = orig.link;
    node.noise = orig.noise;
    for (NodeId i = 0; i < m; ++i) {
      if (i != 0 && paths[i][j].empty()) continue;
      double w = 0.0;
      for (const auto& p : paths[i][j]) w += p.weight;
      node.parents.push_back(i);
      node.theta.push_back(w);
      result.edges.push_back({i, j, w, paths[i][j]});
    }
  }
  const NodeId target = *new_id[model.target()];
  result.markovian = CausalModel(model.name() + "-markovian", std::move(nodes), target);

  // Cross-check each constant-root weight against the oracle under
  // do(all other observed = 0).
  std::vector<NodeId> others;
  for (NodeId j = 1; j < m; ++j) others.push_back(*result.original_id[j]);
  std::size_t hidden_free = 0;
  for (const Node& node : model.nodes()) hidden_free += node.hidden && !node.constant;
  for (NodeId j = 1; j < m; ++j) {
    const NodeId xj = *result.original_id[j];
    std::vector<NodeId> zeroed;
    for (NodeId o : others) {
      if (o != xj) zeroed.push_back(o);
    }
    const auto iv = Intervention::with_values(zeroed, std::vector<std::uint8_t>(zeroed.size(), 0));
    const double oracle = hidden_free + 1 <= ExactOptions{}.enumeration_cap
                              ? enumerate_expectation(model, iv, xj)
                              : exact_expectation(model, iv, xj);
    const double path_sum = result.markovian.node(j).theta.front();
    result.constant_weight_discrepancy =
        std::max(result.constant_weight_discrepancy, std::abs(oracle - path_sum));
  }
  if (result.constant_weight_discrepancy > options.cross_check_tolerance) {
    std::ostringstream os;
    os << "transform: constant-root weight disagrees with the oracle by "
       << result.constant_weight_discrepancy;
    throw std::logic_error(os.str());
  }
  return result;
}

nlohmann::json TransformResult::provenance_json(const CausalModel& original) const {
  nlohmann::json edges_json = nlohmann::json::array();
  for (const auto& e : edges) {
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : e.paths) {
      ps.push_back({{"path", path_text(original, p.nodes)}, {"weight", p.weight}});
    }
    edges_json.push_back({{"from", markovian.node(e.from).name},
                          {"to", markovian.node(e.to).name},
                          {"weight", e.weight},
                          {"paths", std::move(ps)}});
  }
  return {{"source_model", original.name()},
          {"constant_root", markovian.node(0).name},
          {"constant_weight_discrepancy", constant_weight_discrepancy},
          {"notes", notes},
          {"edges", std::move(edges_json)}};
}

// ---------------------------------------------------------------------------

EquivalenceReport verify_equivalence(const CausalModel& original,
                                     const TransformResult& transformed,
                                     const EquivalenceOptions& options) {
  EquivalenceReport report;
  const CausalModel& g2 = transformed.markovian;
  std::vector<NodeId> to_new(original.num_nodes(), 0);
  for (NodeId j = 1; j < g2.num_nodes(); ++j) {
    if (auto o = transformed.original_id[j]) to_new[*o] = j;
  }
  std::size_t free_count = 0;
  for (const Node& node : original.nodes()) free_count += !node.constant;
  const bool enumerable = free_count <= 16;

  const auto candidates = original.intervenable();
  auto for_each_assignment = [](std::size_t size, const std::function<void(std::vector<std::uint8_t>)>& f) {
    for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << size); ++bits) {
      std::vector<std::uint8_t> s(size);
      for (std::size_t i = 0; i < size; ++i) s[i] = (bits >> i) & 1U;
      f(std::move(s));
    }
  };

  for_each_subset(candidates, options.max_k, false, [&](std::span<const NodeId> subset) {
    std::vector<NodeId> s_orig(subset.begin(), subset.end());
    std::vector<NodeId> s_new;
    for (NodeId id : s_orig) s_new.push_back(to_new[id]);
    for_each_assignment(s_orig.size(), [&](std::vector<std::uint8_t> values) {
      const auto iv1 = Intervention::with_values(s_orig, values);
      const auto iv2 = Intervention::with_values(s_new, values);
      const double e1 = enumerable ? enumerate_expectation(original, iv1, original.target())
                                   : exact_expected_reward(original, iv1);
      const double e2 = exact_expected_reward(g2, iv2);
      const double gap = std::abs(e1 - e2);
      ++report.reward_checks;
      report.max_reward_gap = std::max(report.max_reward_gap, gap);
      if (gap > options.tolerance) {
        std::ostringstream os;
        os << "E[Y | do(" << format_node_set(original, iv1) << ")] differs by " << gap;
        report.failures.push_back(os.str());
      }
    });
  });

  if (!options.check_conditionals || !enumerable) return report;

  for_each_subset(candidates, options.conditional_max_k, false, [&](std::span<const NodeId> subset) {
    std::vector<NodeId> s_orig(subset.begin(), subset.end());
    for_each_assignment(s_orig.size(), [&](std::vector<std::uint8_t> values) {
      const auto iv1 = Intervention::with_values(s_orig, values);
      // Per transformed node: mass and activated mass keyed by parent bits.
      std::vector<std::map<std::uint64_t, std::pair<double, double>>> tallies(g2.num_nodes());
      enumerate_joint(original, iv1, [&](std::span<const std::uint8_t> x, double mass) {
        for (NodeId j = 1; j < g2.num_nodes(); ++j) {
          const NodeId xj = *transformed.original_id[j];
          if (iv1.contains(xj)) continue;
          std::uint64_t key = 0;
          const auto& ps = g2.node(j).parents;
          for (std::size_t k = 1; k < ps.size(); ++k) {
            if (x[*transformed.original_id[ps[k]]]) key |= std::uint64_t{1} << (k - 1);
          }
          auto& t = tallies[j][key];
          t.first += mass;
          if (x[xj]) t.second += mass;
        }
      });
      for (NodeId j = 1; j < g2.num_nodes(); ++j) {
        const Node& node = g2.node(j);
        for (const auto& [key, t] : tallies[j]) {
          if (t.first < 1e-12) continue;
          double p2 = node.theta[0];
          for (std::size_t k = 1; k < node.parents.size(); ++k) {
            if ((key >> (k - 1)) & 1U) p2 += node.theta[k];
          }
          const double gap = std::abs(t.second / t.first - p2);
          ++report.conditional_checks;
          report.max_conditional_gap = std::max(report.max_conditional_gap, gap);
          if (gap > options.tolerance) {
            std::ostringstream os;
            os << "Pr{" << node.name << "=1 | parents=" << key << ", do("
               << format_node_set(original, iv1) << ")} differs by " << gap;
            report.failures.push_back(os.str());
          }
        }
      }
    });
  });
  return report;
}

}  // namespace ccb
