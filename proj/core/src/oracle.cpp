#include "ccb/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ccb/propagate.hpp"

namespace ccb {

namespace {

constexpr double kTieTolerance = 1e-12;

void require_noiseless(const CausalModel& model) {
  if (!model.noiseless()) {
    throw std::invalid_argument("exact oracle: model '" + model.name() +
                                "' has noise; use mc_expected_reward instead");
  }
}

void require_acyclic(const CausalModel& model) {
  if (!model.is_acyclic()) throw std::invalid_argument("exact oracle: model has a cycle");
}

struct Enumerator {
  const CausalModel& model;
  const Intervention& iv;
  std::vector<NodeId> order;
  std::vector<std::uint8_t> values;

  Enumerator(const CausalModel& m, const Intervention& i, std::vector<NodeId> o)
      : model(m), iv(i), order(std::move(o)), values(m.num_nodes(), 0) {}

  template <typename Leaf>
  void run(std::size_t pos, double mass, Leaf& leaf) {
    if (pos == order.size()) {
      leaf(values, mass);
      return;
    }
    const NodeId id = order[pos];
    const Node& node = model.node(id);
    if (node.constant) {
      values[id] = 1;
      run(pos + 1, mass, leaf);
      return;
    }
    if (auto forced = iv.forced(id)) {
      values[id] = *forced;
      run(pos + 1, mass, leaf);
      return;
    }
    const double p = activation_probability(node, values);
    if (p > 0.0) {
      values[id] = 1;
      run(pos + 1, mass * p, leaf);
    }
    if (p < 1.0) {
      values[id] = 0;
      run(pos + 1, mass * (1.0 - p), leaf);
    }
  }
};

std::size_t free_nodes(const CausalModel& model, const Intervention& iv,
                       std::span<const NodeId> order) {
  std::size_t n = 0;
  for (NodeId id : order) {
    if (!model.node(id).constant && !iv.contains(id)) ++n;
  }
  return n;
}

void check_cap(std::size_t free, const ExactOptions& options) {
  if (free > options.enumeration_cap) {
    throw std::invalid_argument("exact oracle: " + std::to_string(free) +
                                " free nodes exceed the enumeration cap of " +
                                std::to_string(options.enumeration_cap) +
                                "; use mc_expected_reward instead");
  }
}

std::string set_name(const CausalModel& model, std::span<const NodeId> s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += model.node(s[i]).name;
  }
  return out + "}";
}

}  // namespace

bool forward_pass_exact(const CausalModel& model) {
  if (!model.all_identity() || !model.noiseless()) return false;
  for (const Node& n : model.nodes()) {
    if (n.constant) continue;
    double sum = 0.0;
    for (double w : n.theta) {
      if (w < 0.0) return false;
      sum += w;
    }
    if (sum > 1.0 + 1e-12) return false;
  }
  return true;
}

std::vector<double> forward_expectations(const CausalModel& model, const Intervention& iv) {
  if (!forward_pass_exact(model)) {
    throw std::invalid_argument("forward pass requires a noiseless linear model with valid weights");
  }
  std::vector<double> e(model.num_nodes(), 0.0);
  for (NodeId id : model.topological_order()) {
    const Node& node = model.node(id);
    if (node.constant) {
      e[id] = 1.0;
    } else if (auto forced = iv.forced(id)) {
      e[id] = *forced;
    } else {
      double z = 0.0;
      for (std::size_t k = 0; k < node.parents.size(); ++k) z += node.theta[k] * e[node.parents[k]];
      e[id] = z;
    }
  }
  return e;
}

double enumerate_expectation(const CausalModel& model, const Intervention& iv, NodeId node,
                             const ExactOptions& options) {
  require_noiseless(model);
  require_acyclic(model);
  const auto& topo = model.topological_order();
  const auto where = std::find(topo.begin(), topo.end(), node);
  std::vector<NodeId> prefix(topo.begin(), where);
  check_cap(free_nodes(model, iv, prefix), options);

  const Node& target = model.node(node);
  double total = 0.0;
  auto leaf = [&](std::span<const std::uint8_t> values, double mass) {
    if (target.constant) {
      total += mass;
    } else if (auto forced = iv.forced(node)) {
      total += mass * *forced;
    } else {
      total += mass * activation_probability(target, values);
    }
  };
  Enumerator en(model, iv, std::move(prefix));
  en.run(0, 1.0, leaf);
  return total;
}

void enumerate_joint(const CausalModel& model, const Intervention& iv,
                     const std::function<void(std::span<const std::uint8_t>, double)>& visit,
                     const ExactOptions& options) {
  require_noiseless(model);
  require_acyclic(model);
  const auto& topo = model.topological_order();
  check_cap(free_nodes(model, iv, topo), options);
  auto leaf = [&](std::span<const std::uint8_t> values, double mass) { visit(values, mass); };
  Enumerator en(model, iv, topo);
  en.run(0, 1.0, leaf);
}

double exact_expectation(const CausalModel& model, const Intervention& iv, NodeId node,
                         const ExactOptions& options) {
  require_noiseless(model);
  if (forward_pass_exact(model)) return forward_expectations(model, iv)[node];
  return enumerate_expectation(model, iv, node, options);
}

double exact_expected_reward(const CausalModel& model, const Intervention& iv,
                             const ExactOptions& options) {
  return exact_expectation(model, iv, model.target(), options);
}

McEstimate mc_expected_reward(const CausalModel& model, const Intervention& iv,
                              std::size_t n_samples, const RngStream& rng) {
  if (n_samples == 0) throw std::invalid_argument("mc_expected_reward: n_samples must be >= 1");
  Engine engine = rng.engine();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    hits += sample_round(model, iv, engine, i).values[model.target()];
  }
  const double n = static_cast<double>(n_samples);
  const double mean = static_cast<double>(hits) / n;
  // Sample standard deviation of a 0/1 sequence.
  const double var = n > 1 ? mean * (1.0 - mean) * n / (n - 1.0) : 0.0;
  return {mean, std::sqrt(var / n)};
}

// ---------------------------------------------------------------------------

std::uint64_t count_subsets(std::size_t n, std::size_t k, bool exact_size) {
  auto binom = [](std::size_t nn, std::size_t kk) -> double {
    if (kk > nn) return 0.0;
    double r = 1.0;
    for (std::size_t i = 1; i <= kk; ++i) r = r * static_cast<double>(nn - kk + i) / static_cast<double>(i);
    return std::round(r);
  };
  double total = 0.0;
  if (exact_size) {
    total = binom(n, k);
  } else {
    for (std::size_t j = 0; j <= std::min(n, k); ++j) total += binom(n, j);
  }
  if (total > 1.8e19) return UINT64_MAX;
  return static_cast<std::uint64_t>(total);
}

void for_each_subset(std::span<const NodeId> items, std::size_t k, bool exact_size,
                     const std::function<void(std::span<const NodeId>)>& visit) {
  std::vector<NodeId> current;
  current.reserve(k);
  // Depth-first pre-order yields lexicographic order of sorted sequences.
  std::function<void(std::size_t)> rec = [&](std::size_t start) {
    if (!exact_size || current.size() == k) visit(current);
    if (current.size() == k) return;
    for (std::size_t i = start; i < items.size(); ++i) {
      if (exact_size && items.size() - i < k - current.size()) break;
      current.push_back(items[i]);
      rec(i + 1);
      current.pop_back();
    }
  };
  rec(0);
}

BestIntervention best_intervention(const CausalModel& model, std::size_t budget,
                                   const SearchOptions& options) {
  const auto candidates = model.intervenable();
  const std::size_t k = std::min(budget, candidates.size());
  const auto count = count_subsets(candidates.size(), k, options.exact_size);
  if (count > options.subset_cap) {
    throw std::length_error("best_intervention: " + std::to_string(count) +
                                " subsets exceed the cap of " + std::to_string(options.subset_cap));
  }
  BestIntervention best;
  bool found = false;
  for_each_subset(candidates, k, options.exact_size, [&](std::span<const NodeId> s) {
    auto iv = Intervention::all_ones({s.begin(), s.end()});
    const double v = exact_expected_reward(model, iv, options.exact);
    if (!found || v > best.value + kTieTolerance) {
      best = {std::move(iv), v};
      found = true;
    }
  });
  return best;
}

// ---------------------------------------------------------------------------

PathSet enumerate_paths(const CausalModel& model, std::span<const NodeId> sources, NodeId target,
                        std::size_t cap) {
  PathSet out;
  std::vector<NodeId> path;
  std::function<void(NodeId)> rec = [&](NodeId at) {
    path.push_back(at);
    if (at == target) {
      if (out.paths.size() >= cap) throw std::length_error("enumerate_paths: path cap exceeded");
      out.paths.push_back(path);
    } else {
      for (NodeId c : model.children(at)) rec(c);
    }
    path.pop_back();
  };
  for (NodeId s : sources) rec(s);
  return out;
}

std::vector<NodeId> nodes_on_paths(const CausalModel& model, const Intervention& iv) {
  const std::size_t n = model.num_nodes();
  std::vector<char> source(n, 0), reach(n, 0), ancestor(n, 0);
  std::vector<NodeId> stack;
  for (NodeId id = 0; id < n; ++id) {
    if (model.node(id).constant || iv.contains(id)) {
      source[id] = 1;
      reach[id] = 1;
      stack.push_back(id);
    }
  }
  while (!stack.empty()) {
    const NodeId at = stack.back();
    stack.pop_back();
    for (NodeId c : model.children(at)) {
      // Intervened nodes do not listen to their parents.
      if (!reach[c] && !iv.contains(c)) {
        reach[c] = 1;
        stack.push_back(c);
      }
    }
  }
  ancestor[model.target()] = 1;
  stack.push_back(model.target());
  while (!stack.empty()) {
    const NodeId at = stack.back();
    stack.pop_back();
    for (NodeId p : model.node(at).parents) {
      if (!ancestor[p]) {
        ancestor[p] = 1;
        stack.push_back(p);
      }
    }
  }
  std::vector<NodeId> out;
  for (NodeId id = 0; id < n; ++id) {
    if (reach[id] && ancestor[id] && !source[id]) out.push_back(id);
  }
  return out;
}

GomResult gom_check(const CausalModel& skeleton, const Weights& theta1, const Weights& theta2,
                    const Intervention& iv, std::size_t n_samples, const RngStream& rng) {
  if (n_samples == 0) throw std::invalid_argument("gom_check: n_samples must be >= 1");
  const CausalModel m1 = skeleton.with_weights(theta1);
  const CausalModel m2 = skeleton.with_weights(theta2);

  GomResult result;
  result.lhs = std::abs(exact_expected_reward(m1, iv) - exact_expected_reward(m2, iv));

  const auto on_paths = nodes_on_paths(skeleton, iv);
  Engine engine = rng.engine();
  double mean = 0.0;
  double m2sum = 0.0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto obs = sample_round(m2, iv, engine, i);
    double term = 0.0;
    for (NodeId x : on_paths) {
      const Node& node = skeleton.node(x);
      double dot = 0.0;
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        if (obs.values[node.parents[k]]) dot += theta1[x][k] - theta2[x][k];
      }
      term += std::abs(dot) * node.link.l1();
    }
    const double delta = term - mean;
    mean += delta / static_cast<double>(i + 1);
    m2sum += delta * (term - mean);
  }
  const double n = static_cast<double>(n_samples);
  result.rhs = mean;
  result.rhs_std_error = n > 1 ? std::sqrt(m2sum / (n - 1.0) / n) : 0.0;
  return result;
}

MonotonicityReport monotonicity_check(const CausalModel& model, std::size_t budget,
                                      const ExactOptions& options) {
  MonotonicityReport report;
  const auto candidates = model.intervenable();
  std::map<std::vector<NodeId>, double> cache;
  auto value = [&](const std::vector<NodeId>& s) {
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    const double v = exact_expected_reward(model, Intervention::all_ones(s), options);
    cache.emplace(s, v);
    return v;
  };
  if (budget == 0) return report;
  for_each_subset(candidates, budget - 1, false, [&](std::span<const NodeId> s) {
    const std::vector<NodeId> base(s.begin(), s.end());
    const double v0 = value(base);
    for (NodeId x : candidates) {
      if (std::binary_search(base.begin(), base.end(), x)) continue;
      auto grown = base;
      grown.insert(std::upper_bound(grown.begin(), grown.end(), x), x);
      const double v1 = value(grown);
      ++report.checked;
      if (v1 < v0 - kTieTolerance) {
        std::ostringstream os;
        os << "sigma(" << set_name(model, grown) << ")=" << v1 << " < sigma("
           << set_name(model, base) << ")=" << v0;
        report.violations.push_back(os.str());
      }
    }
  });
  return report;
}

}  // namespace ccb
