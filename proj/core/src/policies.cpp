#include "ccb/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "ccb/oracle.hpp"
#include "ccb/transform.hpp"

namespace ccb {

namespace {

constexpr double kTie = 1e-12;

std::vector<std::vector<NodeId>> exact_subsets(const CausalModel& g, std::size_t budget) {
  const auto candidates = g.intervenable();
  const std::size_t k = std::min(budget, candidates.size());
  std::vector<std::vector<NodeId>> out;
  for_each_subset(candidates, k, true,
                  [&](std::span<const NodeId> s) { out.emplace_back(s.begin(), s.end()); });
  return out;
}

/// Optimistic topological pass with preallocated per-node buffers.
class OptimisticEvaluator {
 public:
  OptimisticEvaluator(const CausalModel& g, std::span<const NodeEstimate> est)
      : g_(g), est_(est), e_(g.num_nodes(), 0.0), forced_(g.num_nodes(), 0) {
    if (est.size() != g.num_nodes()) {
      throw std::invalid_argument("optimistic oracle: one estimate per node required");
    }
    u_.resize(g.num_nodes());
    work_.resize(g.num_nodes());
    for (NodeId id = 0; id < g.num_nodes(); ++id) {
      const auto d = static_cast<Eigen::Index>(g.node(id).parents.size());
      u_[id].resize(d);
      work_[id].resize(d);
      if (!g.node(id).constant && est[id].dim() != static_cast<std::size_t>(d)) {
        throw std::invalid_argument("optimistic oracle: estimate dimension mismatch at " +
                                    g.node(id).name);
      }
    }
  }

  void set_estimates(std::span<const NodeEstimate> est) { est_ = est; }

  /// E[Y | do(S)] under the optimistic parameters. `general` applies each
  /// node's link to the optimistic index.
  double evaluate(std::span<const NodeId> s, double rho, bool clamp, bool general) {
    for (NodeId id : s) forced_[id] = 1;
    for (NodeId id : g_.topological_order()) {
      const Node& node = g_.node(id);
      if (node.constant || forced_[id]) {
        e_[id] = 1.0;
        continue;
      }
      auto& u = u_[id];
      for (std::size_t k = 0; k < node.parents.size(); ++k) {
        u[static_cast<Eigen::Index>(k)] = e_[node.parents[k]];
      }
      const NodeEstimate& est = est_[id];
      double z = u.dot(est.theta_hat());
      if (rho != 0.0 && u.size() > 0) z += rho * est.inverse_norm(u, work_[id]);
      double v = general ? node.link.value(z) : z;
      if (clamp) v = std::clamp(v, 0.0, 1.0);
      e_[id] = v;
    }
    for (NodeId id : s) forced_[id] = 0;
    return e_[g_.target()];
  }

 private:
  const CausalModel& g_;
  std::span<const NodeEstimate> est_;
  std::vector<double> e_;
  std::vector<char> forced_;
  std::vector<Eigen::VectorXd> u_;
  std::vector<Eigen::VectorXd> work_;
};

OracleResult argmax_over(const std::vector<std::vector<NodeId>>& subsets,
                         OptimisticEvaluator& ev, double rho, bool clamp, bool general) {
  OracleResult best;
  std::size_t best_index = 0;
  bool found = false;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    const double v = ev.evaluate(subsets[i], rho, clamp, general);
    if (!found || v > best.value + kTie) {
      best.value = v;
      best_index = i;
      found = true;
    }
  }
  if (found) best.set = Intervention::all_ones(subsets[best_index]);
  return best;
}

void check_identity(const CausalModel& g, const char* what) {
  if (!g.all_identity()) {
    throw std::invalid_argument(std::string(what) + " requires identity links");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Names and configuration

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::bglm_ofu: return "bglm-ofu";
    case PolicyKind::blm_lr: return "blm-lr";
    case PolicyKind::ucb: return "ucb";
    case PolicyKind::eps_greedy: return "eps-greedy";
  }
  return "unknown";
}

T0Mode T0Mode::parse(const std::string& text) {
  if (text == "formula") return {Kind::formula, 0.0};
  if (text == "adaptive") return {Kind::adaptive, 0.0};
  const std::string prefix = "fraction:";
  if (text.rfind(prefix, 0) == 0) {
    const double f = std::stod(text.substr(prefix.size()));
    if (!(f >= 0.0 && f <= 1.0)) throw std::invalid_argument("t0 fraction must lie in [0, 1]");
    return {Kind::fraction, f};
  }
  throw std::invalid_argument("unknown t0 mode '" + text + "' (formula, adaptive, fraction:F)");
}

std::string T0Mode::to_string() const {
  switch (kind) {
    case Kind::formula: return "formula";
    case Kind::adaptive: return "adaptive";
    case Kind::fraction: {
      std::string s = std::to_string(fraction);
      s.erase(s.find_last_not_of('0') + 1);
      if (s.back() == '.') s.pop_back();
      return "fraction:" + s;
    }
  }
  return "fraction";
}

OracleSpec OracleSpec::parse(const std::string& text) {
  if (text == "pair") return {Kind::pair, 0.0};
  if (text == "optimistic") return {Kind::optimistic, 0.0};
  const std::string prefix = "eps-net:";
  if (text.rfind(prefix, 0) == 0) {
    const double e = std::stod(text.substr(prefix.size()));
    if (!(e > 0.0)) throw std::invalid_argument("eps-net spacing must be positive");
    return {Kind::eps_net, e};
  }
  throw std::invalid_argument("unknown oracle '" + text + "' (pair, optimistic, eps-net:E)");
}

std::string OracleSpec::to_string() const {
  switch (kind) {
    case Kind::pair: return "pair";
    case Kind::optimistic: return "optimistic";
    case Kind::eps_net: return "eps-net:" + std::to_string(epsilon);
  }
  return "pair";
}

PolicyConfig policy_from_json(const nlohmann::json& j) {
  PolicyConfig cfg;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "bglm-ofu" || kind == "blm-ofu") {
    cfg.kind = PolicyKind::bglm_ofu;
  } else if (kind == "blm-lr") {
    cfg.kind = PolicyKind::blm_lr;
  } else if (kind == "ucb") {
    cfg.kind = PolicyKind::ucb;
  } else if (kind == "ucb-scaled") {
    cfg.kind = PolicyKind::ucb;
    cfg.bonus_scale = 0.1;
  } else if (kind == "eps-greedy") {
    cfg.kind = PolicyKind::eps_greedy;
  } else {
    throw std::invalid_argument("unknown policy kind '" + kind + "'");
  }
  cfg.label = j.value("label", kind);
  cfg.rho_scale = j.value("rho_scale", cfg.rho_scale);
  if (j.contains("t0_mode")) cfg.t0 = T0Mode::parse(j.at("t0_mode").get<std::string>());
  if (j.contains("oracle")) cfg.oracle = OracleSpec::parse(j.at("oracle").get<std::string>());
  cfg.clamp_optimistic = j.value("clamp_optimistic", cfg.clamp_optimistic);
  cfg.delta = j.value("delta", cfg.delta);
  cfg.lm_constant = j.value("lm_constant", cfg.lm_constant);
  cfg.zeta = j.value("zeta", cfg.zeta);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.bonus_scale = j.value("bonus_scale", cfg.bonus_scale);
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) {
    throw std::invalid_argument("policy '" + cfg.label + "': epsilon must lie in [0, 1]");
  }
  return cfg;
}

nlohmann::json policy_to_json(const PolicyConfig& cfg) {
  nlohmann::json j{{"kind", to_string(cfg.kind)}, {"label", cfg.label},
                   {"budget", cfg.budget},         {"horizon", cfg.horizon}};
  switch (cfg.kind) {
    case PolicyKind::bglm_ofu:
      j["t0_mode"] = cfg.t0.to_string();
      j["lm_constant"] = cfg.lm_constant;
      j["zeta"] = cfg.zeta;
      j["charge_init_regret"] = cfg.charge_init_regret;
      [[fallthrough]];
    case PolicyKind::blm_lr:
      j["rho_scale"] = cfg.rho_scale;
      j["oracle"] = cfg.oracle.to_string();
      j["clamp_optimistic"] = cfg.clamp_optimistic;
      j["delta"] = cfg.delta;
      break;
    case PolicyKind::ucb:
      j["bonus_scale"] = cfg.bonus_scale;
      break;
    case PolicyKind::eps_greedy:
      j["epsilon"] = cfg.epsilon;
      break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Oracles

OracleResult pair_oracle_blm(const CausalModel& skeleton, std::span<const NodeEstimate> estimates,
                             std::size_t budget, double rho, bool clamp) {
  check_identity(skeleton, "pair_oracle_blm");
  OptimisticEvaluator ev(skeleton, estimates);
  return argmax_over(exact_subsets(skeleton, budget), ev, rho, clamp, false);
}

OracleResult optimistic_propagation_general(const CausalModel& skeleton,
                                            std::span<const NodeEstimate> estimates,
                                            std::size_t budget, double rho) {
  OptimisticEvaluator ev(skeleton, estimates);
  return argmax_over(exact_subsets(skeleton, budget), ev, rho, false, !skeleton.all_identity());
}

OracleResult eps_net_oracle(const CausalModel& skeleton, std::span<const NodeEstimate> estimates,
                            std::size_t budget, double rho, double epsilon, std::uint64_t cap) {
  check_identity(skeleton, "eps_net_oracle");
  if (!(epsilon > 0.0)) throw std::invalid_argument("eps_net_oracle: epsilon must be positive");
  const std::size_t n = skeleton.num_nodes();

  // Lattice points theta_hat + epsilon * k inside each node's ellipsoid.
  std::vector<std::vector<Eigen::VectorXd>> grid(n);
  for (NodeId id = 0; id < n; ++id) {
    const Node& node = skeleton.node(id);
    if (node.constant) continue;
    const NodeEstimate& est = estimates[id];
    const std::size_t d = est.dim();
    std::vector<long> half(d);
    for (std::size_t i = 0; i < d; ++i) {
      const double h = rho * std::sqrt(est.inverse_diagonal(i));
      half[i] = static_cast<long>(std::floor(h / epsilon + 1e-9));
    }
    std::vector<long> k(d);
    for (std::size_t i = 0; i < d; ++i) k[i] = -half[i];
    Eigen::VectorXd delta(static_cast<Eigen::Index>(d));
    while (true) {
      for (std::size_t i = 0; i < d; ++i) delta[static_cast<Eigen::Index>(i)] = epsilon * k[i];
      if (d == 0 || est.gram_norm(delta) <= rho * (1.0 + 1e-12) + 1e-15) {
        grid[id].push_back(est.theta_hat() + delta);
      }
      std::size_t i = 0;
      while (i < d && k[i] == half[i]) {
        k[i] = -half[i];
        ++i;
      }
      if (i >= d) break;
      ++k[i];
    }
  }

  std::vector<char> ancestor(n, 0);
  {
    std::vector<NodeId> stack{skeleton.target()};
    ancestor[skeleton.target()] = 1;
    while (!stack.empty()) {
      const NodeId at = stack.back();
      stack.pop_back();
      for (NodeId p : skeleton.node(at).parents) {
        if (!ancestor[p]) {
          ancestor[p] = 1;
          stack.push_back(p);
        }
      }
    }
  }

  const auto subsets = exact_subsets(skeleton, budget);
  const auto& topo = skeleton.topological_order();
  std::vector<double> e(n, 0.0);
  std::vector<char> forced(n, 0);
  std::vector<NodeId> free_nodes;
  std::vector<std::size_t> choice(n, 0);
  std::uint64_t evaluations = 0;

  OracleResult best;
  bool found = false;
  for (const auto& s : subsets) {
    for (NodeId id : s) forced[id] = 1;
    free_nodes.clear();
    double combos = 1.0;
    for (NodeId id : topo) {
      if (skeleton.node(id).constant || forced[id] || !ancestor[id]) continue;
      free_nodes.push_back(id);
      combos *= static_cast<double>(grid[id].size());
    }
    evaluations += static_cast<std::uint64_t>(combos);
    if (combos > static_cast<double>(cap) || evaluations > cap) {
      throw std::length_error("eps_net_oracle: grid too large");
    }
    for (NodeId id : free_nodes) choice[id] = 0;
    double best_in_s = -std::numeric_limits<double>::infinity();
    while (true) {
      for (NodeId id : topo) {
        const Node& node = skeleton.node(id);
        if (node.constant || forced[id]) {
          e[id] = 1.0;
        } else if (!ancestor[id]) {
          e[id] = 0.0;  // never read on the way to the target
        } else {
          const Eigen::VectorXd& th = grid[id][choice[id]];
          double z = 0.0;
          for (std::size_t k = 0; k < node.parents.size(); ++k) {
            z += th[static_cast<Eigen::Index>(k)] * e[node.parents[k]];
          }
          e[id] = z;
        }
      }
      best_in_s = std::max(best_in_s, e[skeleton.target()]);
      std::size_t i = 0;
      while (i < free_nodes.size() && choice[free_nodes[i]] + 1 == grid[free_nodes[i]].size()) {
        choice[free_nodes[i]] = 0;
        ++i;
      }
      if (i >= free_nodes.size()) break;
      ++choice[free_nodes[i]];
    }
    for (NodeId id : s) forced[id] = 0;
    if (!found || best_in_s > best.value + kTie) {
      best = {Intervention::all_ones(s), best_in_s};
      found = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Policies

namespace {

std::vector<NodeEstimate> fresh_estimates(const CausalModel& g, bool ridge) {
  std::vector<NodeEstimate> est(g.num_nodes());
  for (NodeId id = 0; id < g.num_nodes(); ++id) {
    if (!g.node(id).constant) est[id] = NodeEstimate(g.node(id).parents.size(), ridge);
  }
  return est;
}

/// Shared state of the two ellipsoid learners.
class EllipsoidLearner : public Policy {
 protected:
  EllipsoidLearner(const CausalModel& g, const PolicyConfig& cfg, bool ridge)
      : g_(g),
        cfg_(cfg),
        est_(fresh_estimates(g, ridge)),
        subsets_(exact_subsets(g, cfg.budget)),
        eval_(g, est_),
        v_(g.num_nodes()) {
    for (NodeId id = 0; id < g.num_nodes(); ++id) {
      v_[id].resize(static_cast<Eigen::Index>(g.node(id).parents.size()));
    }
    if (cfg.oracle.kind == OracleSpec::Kind::pair || cfg.oracle.kind == OracleSpec::Kind::eps_net) {
      check_identity(g, "the pair and eps-net oracles");
    }
  }

  Intervention optimistic_choice(double rho) {
    switch (cfg_.oracle.kind) {
      case OracleSpec::Kind::pair:
        return argmax_over(subsets_, eval_, rho, cfg_.clamp_optimistic, false).set;
      case OracleSpec::Kind::optimistic:
        return argmax_over(subsets_, eval_, rho, false, !g_.all_identity()).set;
      case OracleSpec::Kind::eps_net:
        return eps_net_oracle(g_, est_, cfg_.budget, rho, cfg_.oracle.epsilon).set;
    }
    return {};
  }

  /// Fills v_[id] with the node's realized parent values.
  const Eigen::VectorXd& parents_of(NodeId id, std::span<const std::uint8_t> values) {
    const Node& node = g_.node(id);
    auto& v = v_[id];
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      v[static_cast<Eigen::Index>(k)] = values[node.parents[k]] ? 1.0 : 0.0;
    }
    return v;
  }

 public:
  [[nodiscard]] bool heuristic() const override {
    return cfg_.oracle.kind == OracleSpec::Kind::optimistic && !g_.all_identity();
  }

 protected:
  const CausalModel& g_;
  PolicyConfig cfg_;
  std::vector<NodeEstimate> est_;
  std::vector<std::vector<NodeId>> subsets_;
  OptimisticEvaluator eval_;
  std::vector<Eigen::VectorXd> v_;
};

class OfuPolicy final : public EllipsoidLearner {
 public:
  OfuPolicy(const CausalModel& g, const PolicyConfig& cfg, const CausalModel* truth)
      : EllipsoidLearner(g, cfg, false), data_(g.num_nodes()) {
    const std::size_t n = g.num_nodes();
    delta_ = cfg.delta > 0.0 ? cfg.delta : default_delta_ofu(n, cfg.horizon);
    double kappa = std::numeric_limits<double>::infinity();
    for (const Node& node : g.nodes()) {
      if (!node.constant) kappa = std::min(kappa, node.link.kappa());
    }
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
      throw std::invalid_argument("bglm-ofu: every link needs kappa > 0");
    }
    rho_ = rho_ofu(kappa, delta_, cfg.rho_scale);
    for (auto& e : est_) e.rho = rho_;

    switch (cfg.t0.kind) {
      case T0Mode::Kind::fraction:
        t0_ = static_cast<std::uint64_t>(std::floor(cfg.t0.fraction * static_cast<double>(cfg.horizon) + 1e-9));
        break;
      case T0Mode::Kind::formula: {
        double zeta = cfg.zeta;
        if (zeta <= 0.0) {
          const CausalModel& m = truth != nullptr ? *truth : g;
          const double margin = activation_margin(m);
          if (!(margin > 0.0)) {
            throw std::invalid_argument(
                "bglm-ofu: formula warm-up needs zeta > 0, but some activation probability is 0 or 1; "
                "set zeta explicitly");
          }
          zeta = compute_zeta(margin, m.max_out_degree());
        }
        const auto th = init_thresholds(g, delta_, cfg.lm_constant, zeta);
        t0_ = static_cast<std::uint64_t>(std::min(std::ceil(th.t0), static_cast<double>(cfg.horizon)));
        break;
      }
      case T0Mode::Kind::adaptive:
        t0_ = cfg.horizon;  // upper bound; the eigenvalue test ends the phase
        for (NodeId id = 0; id < n; ++id) {
          const Node& node = g.node(id);
          threshold_.push_back(node.constant ? 0.0
                                             : eigen_condition_threshold(node.parents.size(),
                                                                         node.link.l2(),
                                                                         node.link.kappa(), delta_));
        }
        break;
    }
  }

  Intervention select(std::uint64_t round) override {
    if (init_) {
      const bool fixed_done = cfg_.t0.kind != T0Mode::Kind::adaptive && round > t0_;
      const bool adaptive_done = cfg_.t0.kind == T0Mode::Kind::adaptive && eigen_condition_holds();
      if ((fixed_done || adaptive_done) && all_factored()) {
        init_ = false;
        fit_all();
      }
    }
    last_init_ = init_;
    if (init_) return {};
    return optimistic_choice(rho_);
  }

  void observe(const Observation& obs) override {
    for (NodeId id = 0; id < g_.num_nodes(); ++id) {
      if (g_.node(id).constant || obs.intervention.contains(id)) continue;
      const auto& v = parents_of(id, obs.values);
      const double x = obs.values[id] ? 1.0 : 0.0;
      est_[id].accumulate(v, x);
      if (!g_.node(id).link.is_identity()) data_[id].pairs.push_back({v, x});
      if (!init_) refit(id);
    }
  }

  [[nodiscard]] bool last_was_init() const override { return last_init_; }

 private:
  bool all_factored() {
    bool ok = true;
    for (NodeId id = 0; id < g_.num_nodes(); ++id) {
      if (g_.node(id).constant) continue;
      if (est_[id].dim() > 0 && !est_[id].refactor()) ok = false;
    }
    return ok;
  }

  bool eigen_condition_holds() const {
    for (NodeId id = 0; id < g_.num_nodes(); ++id) {
      const Node& node = g_.node(id);
      if (node.constant || est_[id].dim() == 0) continue;
      const double lm = lambda_min(est_[id].gram());
      if (!(lm > 0.0) || lm < threshold_[id]) return false;
    }
    return true;
  }

  void refit(NodeId id) {
    NodeEstimate& e = est_[id];
    if (e.dim() == 0) return;
    if (!e.refactor()) throw std::domain_error("bglm-ofu: Gram matrix became singular");
    const Node& node = g_.node(id);
    if (node.link.is_identity()) {
      e.solve_least_squares();
    } else {
      const Eigen::VectorXd start = e.theta_hat();
      e.set_theta(mle_fit(data_[id], node.link, cfg_.solver, &start));
    }
  }

  void fit_all() {
    for (NodeId id = 0; id < g_.num_nodes(); ++id) {
      if (g_.node(id).constant) continue;
      NodeEstimate& e = est_[id];
      if (e.dim() == 0) continue;
      const Node& node = g_.node(id);
      if (node.link.is_identity()) {
        e.solve_least_squares();
      } else {
        e.set_theta(mle_fit(data_[id], node.link, cfg_.solver));
      }
    }
  }

  std::vector<NodeDataset> data_;
  std::vector<double> threshold_;
  double delta_ = 0.0;
  double rho_ = 0.0;
  std::uint64_t t0_ = 0;
  bool init_ = true;
  bool last_init_ = true;
};

class LrPolicy final : public EllipsoidLearner {
 public:
  LrPolicy(const CausalModel& g, const PolicyConfig& cfg) : EllipsoidLearner(g, cfg, true) {
    check_identity(g, "blm-lr");
    delta_ = cfg.delta > 0.0 ? cfg.delta : default_delta_lr(g.num_nodes(), cfg.horizon);
  }

  Intervention select(std::uint64_t round) override {
    const double rho = rho_lr(g_.num_nodes(), round - 1, delta_, cfg_.rho_scale);
    for (auto& e : est_) e.rho = rho;
    return optimistic_choice(rho);
  }

  void observe(const Observation& obs) override {
    for (NodeId id = 0; id < g_.num_nodes(); ++id) {
      if (g_.node(id).constant || est_[id].dim() == 0 || obs.intervention.contains(id)) continue;
      est_[id].ridge_update(parents_of(id, obs.values), obs.values[id] ? 1.0 : 0.0);
    }
  }

 private:
  double delta_ = 0.0;
};

/// Arm statistics shared by the two subset baselines.
class ArmPolicy : public Policy {
 protected:
  ArmPolicy(const CausalModel& g, const PolicyConfig& cfg)
      : g_(g), cfg_(cfg), subsets_(exact_subsets(g, cfg.budget)) {
    if (subsets_.empty()) throw std::invalid_argument("baseline policy: no arms");
    for (const auto& s : subsets_) arms_.push_back(Intervention::all_ones(s));
    count_.assign(arms_.size(), 0);
    sum_.assign(arms_.size(), 0.0);
  }

 public:
  void observe(const Observation& obs) override {
    ++count_[last_];
    sum_[last_] += obs.values[g_.target()] ? 1.0 : 0.0;
  }

 protected:
  [[nodiscard]] double mean(std::size_t i) const { return sum_[i] / static_cast<double>(count_[i]); }

  const CausalModel& g_;
  PolicyConfig cfg_;
  std::vector<std::vector<NodeId>> subsets_;
  std::vector<Intervention> arms_;
  std::vector<std::uint64_t> count_;
  std::vector<double> sum_;
  std::size_t last_ = 0;
};

class UcbPolicy final : public ArmPolicy {
 public:
  UcbPolicy(const CausalModel& g, const PolicyConfig& cfg) : ArmPolicy(g, cfg) {}

  Intervention select(std::uint64_t round) override {
    if (round <= arms_.size()) {
      last_ = static_cast<std::size_t>(round - 1);
      if (count_[last_] == 0) return arms_[last_];
    }
    // Unvisited arms carry an infinite bonus; the lowest index wins ties.
    const double log_t = std::log(static_cast<double>(round));
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      const double score = count_[i] == 0
                               ? std::numeric_limits<double>::infinity()
                               : mean(i) + cfg_.bonus_scale *
                                               std::sqrt(log_t / static_cast<double>(count_[i]));
      if (score > best) {
        best = score;
        last_ = i;
      }
    }
    return arms_[last_];
  }
};

class EpsGreedyPolicy final : public ArmPolicy {
 public:
  EpsGreedyPolicy(const CausalModel& g, const PolicyConfig& cfg, const RngStream& rng)
      : ArmPolicy(g, cfg), engine_(rng.engine()) {}

  Intervention select(std::uint64_t) override {
    const double u = uniform01(engine_);
    if (u < cfg_.epsilon) {
      last_ = static_cast<std::size_t>(uniform_index(engine_, arms_.size()));
      return arms_[last_];
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < arms_.size(); ++i) {
      const double score = count_[i] == 0 ? std::numeric_limits<double>::infinity() : mean(i);
      if (score > best) {
        best = score;
        last_ = i;
      }
    }
    return arms_[last_];
  }

 private:
  Engine engine_;
};

std::uint64_t mask_of(const Intervention& iv) {
  std::uint64_t m = 0;
  for (NodeId id : iv.nodes) m |= std::uint64_t{1} << id;
  return m;
}

}  // namespace

std::unique_ptr<Policy> make_policy(const CausalModel& skeleton, const PolicyConfig& cfg,
                                    const RngStream& rng, const CausalModel* truth_for_zeta) {
  if (cfg.budget < 1) throw std::invalid_argument("policy: budget must be >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("policy: horizon must be >= 1");
  if (skeleton.has_hidden()) throw std::invalid_argument("policy: skeleton must be Markovian");
  switch (cfg.kind) {
    case PolicyKind::bglm_ofu: return std::make_unique<OfuPolicy>(skeleton, cfg, truth_for_zeta);
    case PolicyKind::blm_lr: return std::make_unique<LrPolicy>(skeleton, cfg);
    case PolicyKind::ucb: return std::make_unique<UcbPolicy>(skeleton, cfg);
    case PolicyKind::eps_greedy: return std::make_unique<EpsGreedyPolicy>(skeleton, cfg, rng);
  }
  throw std::invalid_argument("policy: unknown kind");
}

RegretTrace run_policy(const CausalModel& truth, const PolicyConfig& cfg, std::uint64_t run_seed,
                       const RunOptions& options) {
  if (truth.num_nodes() > 64) throw std::invalid_argument("run_policy: at most 64 nodes supported");

  // Learner view: the truth itself, or its Markovian transform.
  CausalModel transformed;
  std::vector<NodeId> to_truth;
  const CausalModel* skeleton = &truth;
  if (truth.has_hidden()) {
    auto tr = transform_to_markovian(truth);
    transformed = std::move(tr.markovian);
    skeleton = &transformed;
    for (const auto& o : tr.original_id) to_truth.push_back(o ? *o : 0);
  }
  const bool mapped = skeleton != &truth;

  PolicyConfig run_cfg = cfg;
  auto policy = make_policy(*skeleton, run_cfg, RngStream{run_seed, 1}, &truth);
  const auto best = best_intervention(truth, cfg.budget);

  RegretTrace trace;
  trace.optimum = best.value;
  trace.best_set = best.set;
  trace.heuristic_oracle = policy->heuristic();
  trace.value.reserve(cfg.horizon);
  trace.regret.reserve(cfg.horizon);
  trace.cumulative.reserve(cfg.horizon);

  Engine env = RngStream{run_seed, 0}.engine();
  std::unordered_map<std::uint64_t, double> cache;
  std::vector<std::uint8_t> truth_values;
  Observation obs;
  obs.values.assign(skeleton->num_nodes(), 0);
  Intervention truth_iv;
  double cumulative = 0.0;

  for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
    obs.intervention = policy->select(t);
    const bool init = policy->last_was_init();
    if (mapped) {
      std::vector<NodeId> ids;
      for (NodeId id : obs.intervention.nodes) ids.push_back(to_truth[id]);
      truth_iv = Intervention::with_values(std::move(ids), obs.intervention.values);
    }
    const Intervention& iv = mapped ? truth_iv : obs.intervention;
    const std::uint64_t key = mask_of(iv);
    auto it = cache.find(key);
    if (it == cache.end()) it = cache.emplace(key, exact_expected_reward(truth, iv)).first;
    const double value = it->second;

    if (mapped) {
      sample_values(truth, iv, env, truth_values);
      for (NodeId j = 0; j < skeleton->num_nodes(); ++j) {
        obs.values[j] = skeleton->node(j).constant ? 1 : truth_values[to_truth[j]];
      }
    } else {
      sample_values(truth, iv, env, obs.values);
    }
    obs.round_index = t;
    policy->observe(obs);

    const double r = init && !cfg.charge_init_regret ? 0.0 : std::max(0.0, best.value - value);
    cumulative += r;
    if (init) ++trace.init_rounds;
    trace.value.push_back(value);
    trace.regret.push_back(r);
    trace.cumulative.push_back(cumulative);
    if (options.record_choices) trace.chosen.push_back(iv);
  }
  return trace;
}

namespace {

RegretTrace run_kind(const CausalModel& truth, PolicyConfig cfg, std::uint64_t seed, PolicyKind kind) {
  cfg.kind = kind;
  return run_policy(truth, cfg, seed);
}

}  // namespace

RegretTrace run_bglm_ofu(const CausalModel& truth, PolicyConfig cfg, std::uint64_t run_seed) {
  return run_kind(truth, std::move(cfg), run_seed, PolicyKind::bglm_ofu);
}
RegretTrace run_blm_lr(const CausalModel& truth, PolicyConfig cfg, std::uint64_t run_seed) {
  return run_kind(truth, std::move(cfg), run_seed, PolicyKind::blm_lr);
}
RegretTrace run_ucb(const CausalModel& truth, PolicyConfig cfg, std::uint64_t run_seed) {
  return run_kind(truth, std::move(cfg), run_seed, PolicyKind::ucb);
}
RegretTrace run_eps_greedy(const CausalModel& truth, PolicyConfig cfg, std::uint64_t run_seed) {
  return run_kind(truth, std::move(cfg), run_seed, PolicyKind::eps_greedy);
}

}  // namespace ccb
