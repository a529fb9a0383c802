#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include <Eigen/Eigenvalues>

#include "ccb/estimate.hpp"
#include "ccb/generators.hpp"
#include "ccb/oracle.hpp"
#include "ccb/policies.hpp"
#include "ccb/propagate.hpp"
#include "ccb/transform.hpp"
#include "fixtures.hpp"

namespace ccb {
namespace {

/// Ridge-prior estimates whose centres are set to `theta`.
std::vector<NodeEstimate> estimates_at(const CausalModel& m, const Weights& theta, Engine& engine,
                                       int observations = 30) {
  std::vector<NodeEstimate> est(m.num_nodes());
  for (NodeId id = 0; id < m.num_nodes(); ++id) {
    const Node& n = m.node(id);
    if (n.constant) continue;
    est[id] = NodeEstimate(n.parents.size(), true);
    for (int i = 0; i < observations; ++i) {
      Eigen::VectorXd v(static_cast<Eigen::Index>(n.parents.size()));
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = uniform01(engine) < 0.5 ? 1.0 : 0.0;
      est[id].ridge_update(v, 0.0);
    }
    Eigen::VectorXd t(static_cast<Eigen::Index>(theta[id].size()));
    for (std::size_t k = 0; k < theta[id].size(); ++k) t[static_cast<Eigen::Index>(k)] = theta[id][k];
    est[id].set_theta(t);
  }
  return est;
}

// Test-side optimistic pass: E[X] = f(u . theta_hat + rho ||u||_{M^-1}), M^-1 by direct inversion.
double optimistic_value(const CausalModel& m, const std::vector<NodeEstimate>& est,
                        const std::vector<NodeId>& s, double rho, bool apply_link) {
  std::vector<double> e(m.num_nodes(), 0.0);
  for (NodeId id : m.topological_order()) {
    const Node& n = m.node(id);
    if (n.constant || std::find(s.begin(), s.end(), id) != s.end()) {
      e[id] = 1.0;
      continue;
    }
    Eigen::VectorXd u(static_cast<Eigen::Index>(n.parents.size()));
    for (std::size_t k = 0; k < n.parents.size(); ++k) u[static_cast<Eigen::Index>(k)] = e[n.parents[k]];
    double z = u.dot(est[id].theta_hat());
    if (u.size() > 0) z += rho * std::sqrt(u.dot(est[id].gram().inverse() * u));
    e[id] = apply_link ? n.link.value(z) : z;
  }
  return e[m.target()];
}

TEST(PairOracle, SingleEdgeHandValue) {
  const auto m = test::build_model("e", {"X1", "Y"}, {{"X1", "Y", 0.5}});
  std::vector<NodeEstimate> est(2);
  est[1] = NodeEstimate(1, false);
  Eigen::VectorXd v(1);
  v[0] = 1.0;
  for (int i = 0; i < 4; ++i) est[1].accumulate(v, i < 2 ? 1.0 : 0.0);
  ASSERT_TRUE(est[1].refactor());
  est[1].solve_least_squares();
  const auto r = pair_oracle_blm(m, est, 1, 1.0);
  EXPECT_TRUE(r.set.empty());
  EXPECT_DOUBLE_EQ(r.value, 1.0 * std::sqrt(1.0 / 4.0) + 0.5);
}

TEST(PairOracle, ZeroRadiusIsPlugInExhaustiveSearch) {
  Engine engine(3);
  for (int trial = 0; trial < 25; ++trial) {
    const auto m = random_blm({7, 0.5, 0.3, 1.0}, engine);
    const auto est = estimates_at(m, m.weights(), engine);
    SearchOptions exact;
    exact.exact_size = true;
    const std::size_t k = 1 + trial % 3;
    const auto plug_in = best_intervention(m, k, exact);
    const auto r = pair_oracle_blm(m, est, k, 0.0);
    EXPECT_EQ(r.set, plug_in.set);
    EXPECT_NEAR(r.value, plug_in.value, 1e-12);
  }
}

TEST(PairOracle, AgreesWithTestSidePass) {
  Engine engine(8);
  const auto m = random_blm({6, 0.6, 0.3, 1.0}, engine);
  const auto est = estimates_at(m, m.weights(), engine);
  const auto r = pair_oracle_blm(m, est, 2, 0.3);
  EXPECT_NEAR(r.value, optimistic_value(m, est, r.set.nodes, 0.3, false), 1e-12);
  for_each_subset(m.intervenable(), 2, true, [&](std::span<const NodeId> s) {
    EXPECT_LE(optimistic_value(m, est, {s.begin(), s.end()}, 0.3, false), r.value + 1e-12);
  });
}

TEST(PairOracle, ClampKeepsValuesInUnitInterval) {
  Engine engine(9);
  const auto m = builtin_graph("G4");
  const auto est = estimates_at(m, m.weights(), engine, 3);
  EXPECT_GT(pair_oracle_blm(m, est, 2, 5.0).value, 1.0);
  EXPECT_LE(pair_oracle_blm(m, est, 2, 5.0, true).value, 1.0);
}

CausalModel four_node() {
  return test::build_model("four", {"X1", "X2", "X3", "Y"},
                           {{"X1", "X2", 0.4}, {"X1", "X3", 0.3}, {"X2", "Y", 0.3}, {"X3", "Y", 0.5}});
}

TEST(EpsNetOracle, ZeroRadiusMatchesPair) {
  Engine engine(4);
  const auto m = four_node();
  const auto est = estimates_at(m, m.weights(), engine);
  const auto a = eps_net_oracle(m, est, 1, 0.0, 0.01);
  const auto b = pair_oracle_blm(m, est, 1, 0.0);
  EXPECT_EQ(a.set, b.set);
  EXPECT_NEAR(a.value, b.value, 1e-12);
}

TEST(EpsNetOracle, TwoParameterAgreementWithPair) {
  const auto m = test::build_model("two", {"X1", "X2", "Y"}, {{"X1", "X2", 0.5}, {"X2", "Y", 0.6}});
  Engine engine(6);
  const auto est = estimates_at(m, m.weights(), engine, 20);
  const double rho = 0.5;
  const auto a = eps_net_oracle(m, est, 1, rho, 0.01);
  const auto b = pair_oracle_blm(m, est, 1, rho);
  EXPECT_NEAR(a.value, b.value, 0.05);
}

TEST(EpsNetOracle, RefinementIsMonotone) {
  const auto m = four_node();
  Engine engine(12);
  const auto est = estimates_at(m, m.weights(), engine, 40);
  const double rho = 0.4;
  const auto coarse = eps_net_oracle(m, est, 1, rho, 0.04);
  const auto fine = eps_net_oracle(m, est, 1, rho, 0.02);
  EXPECT_GE(fine.value, coarse.value - 1e-12);
  EXPECT_LE(fine.value - coarse.value, 0.04 * static_cast<double>(m.num_nodes()) * 1.0);
}

TEST(EpsNetOracle, CapIsEnforced) {
  const auto m = four_node();
  Engine engine(2);
  const auto est = estimates_at(m, m.weights(), engine, 1);
  EXPECT_THROW((void)eps_net_oracle(m, est, 1, 1.0, 0.001, 1000), std::length_error);
}

TEST(OptimisticGeneral, IdentityEqualsPair) {
  Engine engine(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto m = random_blm({7, 0.5, 0.3, 1.0}, engine);
    const auto est = estimates_at(m, m.weights(), engine);
    const auto a = optimistic_propagation_general(m, est, 2, 0.2);
    const auto b = pair_oracle_blm(m, est, 2, 0.2);
    EXPECT_EQ(a.set, b.set);
    EXPECT_EQ(a.value, b.value);
  }
}

CausalModel logistic_version(const CausalModel& base) {
  auto nodes = base.nodes();
  for (auto& n : nodes) {
    if (!n.constant) n.link = LinkFunction::logistic(4.0, -2.0);
  }
  return CausalModel(base.name() + "-logistic", nodes, base.target());
}

TEST(OptimisticGeneral, ZeroRadiusLogisticIsPlugInSearch) {
  Engine engine(14);
  const auto m = logistic_version(random_blm({6, 0.6, 0.3, 1.0}, engine));
  const auto est = estimates_at(m, m.weights(), engine);
  const auto r = optimistic_propagation_general(m, est, 2, 0.0);
  double best = -1.0;
  Intervention best_set;
  for_each_subset(m.intervenable(), 2, true, [&](std::span<const NodeId> s) {
    const double v = optimistic_value(m, est, {s.begin(), s.end()}, 0.0, true);
    if (v > best + 1e-12) {
      best = v;
      best_set = Intervention::all_ones({s.begin(), s.end()});
    }
  });
  EXPECT_EQ(r.set, best_set);
  EXPECT_NEAR(r.value, best, 1e-12);
}

TEST(OptimisticGeneral, LargerRadiusNeverLowersValue) {
  Engine engine(15);
  for (int trial = 0; trial < 20; ++trial) {
    const auto base = random_blm({7, 0.5, 0.3, 1.0}, engine);
    const auto m = trial % 2 == 0 ? base : logistic_version(base);
    const auto est = estimates_at(m, m.weights(), engine);
    double prev = -1e300;
    for (double rho : {0.0, 0.05, 0.1, 0.3, 1.0}) {
      const double v = optimistic_propagation_general(m, est, 2, rho).value;
      EXPECT_GE(v, prev - 1e-12) << "trial " << trial << " rho " << rho;
      prev = v;
    }
  }
}

PolicyConfig config(PolicyKind kind, std::size_t k, std::uint64_t horizon) {
  PolicyConfig cfg;
  cfg.kind = kind;
  cfg.budget = k;
  cfg.horizon = horizon;
  cfg.rho_scale = 0.1;
  return cfg;
}

TEST(RunBglmOfu, AllObservationalWhenWarmupCoversHorizon) {
  const auto g = builtin_graph("G1");
  auto cfg = config(PolicyKind::bglm_ofu, 3, 200);
  cfg.t0 = T0Mode::parse("fraction:1");
  const auto trace = run_bglm_ofu(g, cfg, 77);
  const double gap = best_intervention(g, 3).value - exact_expected_reward(g, {});
  EXPECT_EQ(trace.init_rounds, 200U);
  EXPECT_NEAR(trace.final_regret(), 200.0 * gap, 1e-9);
}

TEST(RunBglmOfu, UnchargedWarmupCostsNothing) {
  const auto g = builtin_graph("G4");
  auto cfg = config(PolicyKind::bglm_ofu, 2, 300);
  cfg.t0 = T0Mode::parse("fraction:0.1");
  cfg.charge_init_regret = false;
  const auto trace = run_bglm_ofu(g, cfg, 5);
  ASSERT_GE(trace.init_rounds, 30U);
  for (std::uint64_t t = 0; t < trace.init_rounds; ++t) EXPECT_EQ(trace.regret[t], 0.0);
}

TEST(RunBglmOfu, AdaptiveWarmupEndsWhenEveryGramIsDefinite) {
  const auto g = builtin_graph("G4");
  auto cfg = config(PolicyKind::bglm_ofu, 2, 400);
  cfg.t0 = T0Mode::parse("adaptive");
  const std::uint64_t seed = 1234;
  const auto trace = run_policy(g, cfg, seed, {true});

  // Replay the environment stream: warm-up rounds are observational.
  // With identity links (l2 = 0) the eigenvalue threshold is 0, so the phase
  // ends at the first round whose Gram matrices are all positive definite.
  Engine env = RngStream{seed, 0}.engine();
  std::vector<Eigen::MatrixXd> gram(g.num_nodes());
  for (NodeId id = 0; id < g.num_nodes(); ++id) {
    const auto d = static_cast<Eigen::Index>(g.node(id).parents.size());
    gram[id] = Eigen::MatrixXd::Zero(d, d);
  }
  std::vector<std::uint8_t> values;
  std::uint64_t expected = 0;
  for (std::uint64_t t = 1; t <= cfg.horizon; ++t) {
    bool ready = true;
    for (NodeId id = 1; id < g.num_nodes(); ++id) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram[id]);
      if (!(es.eigenvalues()[0] > 1e-9)) ready = false;
    }
    if (ready) break;
    ++expected;
    sample_values(g, {}, env, values);
    for (NodeId id = 1; id < g.num_nodes(); ++id) {
      const Node& n = g.node(id);
      Eigen::VectorXd v(static_cast<Eigen::Index>(n.parents.size()));
      for (std::size_t k = 0; k < n.parents.size(); ++k) v[static_cast<Eigen::Index>(k)] = values[n.parents[k]];
      gram[id] += v * v.transpose();
    }
  }
  EXPECT_EQ(trace.init_rounds, expected);
  EXPECT_GT(expected, 1U);
  for (std::uint64_t t = 0; t < trace.init_rounds; ++t) EXPECT_TRUE(trace.chosen[t].empty());
  EXPECT_FALSE(trace.chosen[trace.init_rounds].empty());
}

TEST(RunBglmOfu, FormulaWarmupNeedsPositiveMargin) {
  auto cfg = config(PolicyKind::bglm_ofu, 3, 100);
  cfg.t0 = T0Mode::parse("formula");
  EXPECT_THROW((void)run_bglm_ofu(builtin_graph("G1"), cfg, 1), std::invalid_argument);
  cfg.zeta = 0.5;
  const auto g = builtin_graph("G1");
  const auto trace = run_bglm_ofu(g, cfg, 1);
  // c / zeta^2 * log(1/delta) with R = 0 for identity links.
  const double delta = 1.0 / (3.0 * static_cast<double>(g.num_nodes()) * 10.0);
  const double expected = std::ceil(4.0 * std::log(1.0 / delta));
  EXPECT_DOUBLE_EQ(init_thresholds(g, delta, 1.0, 0.5).t0, 4.0 * std::log(1.0 / delta));
  EXPECT_EQ(trace.init_rounds, static_cast<std::uint64_t>(expected));
}

TEST(RunBlmLr, FirstRoundUsesPriorAndInitialRadius) {
  const auto g = builtin_graph("G1");
  auto cfg = config(PolicyKind::blm_lr, 3, 1);
  const auto trace = run_policy(g, cfg, 3, {true});
  ASSERT_EQ(trace.chosen.size(), 1U);
  std::vector<NodeEstimate> prior(g.num_nodes());
  for (NodeId id = 1; id < g.num_nodes(); ++id) prior[id] = NodeEstimate(g.node(id).parents.size(), true);
  const double rho0 = rho_lr(g.num_nodes(), 0, default_delta_lr(g.num_nodes(), 1), 0.1);
  EXPECT_EQ(trace.chosen[0], pair_oracle_blm(g, prior, 3, rho0).set);
}

TEST(RunBlmLr, LearnsG1) {
  const auto g = builtin_graph("G1");
  const auto trace = run_blm_lr(g, config(PolicyKind::blm_lr, 3, 3000), 11);
  // After learning, the last thousand rounds should be nearly regret-free.
  EXPECT_LT(trace.cumulative[2999] - trace.cumulative[1999], 10.0);
}

TEST(RunPolicy, SameSeedSameTrace) {
  const auto g = builtin_graph("G5");
  for (auto kind : {PolicyKind::bglm_ofu, PolicyKind::blm_lr, PolicyKind::ucb, PolicyKind::eps_greedy}) {
    const auto cfg = config(kind, 2, 300);
    EXPECT_EQ(run_policy(g, cfg, 9).cumulative, run_policy(g, cfg, 9).cumulative);
  }
}

TEST(RunPolicy, HiddenTruthIsLearnedThroughTransform) {
  const auto m = test::build_model("hid", {"U0", "X2", "U1", "X3", "Y"},
                                   {{"U0", "X2", 0.3}, {"U0", "U1", 0.5}, {"U1", "X2", 0.4},
                                    {"U1", "X3", 0.6}, {"X2", "Y", 0.3}, {"X3", "Y", 0.4}},
                                   {"U0", "U1"});
  const auto trace = run_blm_lr(m, config(PolicyKind::blm_lr, 1, 500), 2);
  EXPECT_EQ(trace.value.size(), 500U);
  EXPECT_NEAR(trace.optimum, best_intervention(m, 1).value, 1e-12);
  EXPECT_LT(trace.final_regret(), 500.0 * trace.optimum);
}

TEST(Baselines, SingleArmRegretIsConstant) {
  const auto m = test::build_model("one", {"X1", "X2", "X3", "Y"},
                                   {{"X1", "X2", 0.2}, {"X1", "X3", 0.3}, {"X2", "Y", 0.4}, {"X3", "Y", 0.1}});
  // Exactly-two subsets of {X2, X3}: one arm.
  const double gap = best_intervention(m, 2).value - exact_expected_reward(m, Intervention::all_ones({1, 2}));
  for (auto kind : {PolicyKind::ucb, PolicyKind::eps_greedy}) {
    const auto trace = run_policy(m, config(kind, 2, 50), 4, {true});
    for (std::size_t t = 0; t < 50; ++t) {
      EXPECT_EQ(trace.chosen[t], Intervention::all_ones({1, 2}));
      EXPECT_DOUBLE_EQ(trace.regret[t], gap);
    }
  }
}

TEST(Baselines, UcbInitialRoundsInArmOrder) {
  const auto g = builtin_graph("G4");
  const auto trace = run_policy(g, config(PolicyKind::ucb, 2, 20), 6, {true});
  std::vector<std::vector<NodeId>> arms;
  for_each_subset(g.intervenable(), 2, true, [&](std::span<const NodeId> s) { arms.emplace_back(s.begin(), s.end()); });
  ASSERT_EQ(arms.size(), 6U);
  for (std::size_t t = 0; t < arms.size(); ++t) EXPECT_EQ(trace.chosen[t], Intervention::all_ones(arms[t]));
}

TEST(Baselines, GreedyWithZeroEpsilonTriesEveryArmThenExploits) {
  const auto g = builtin_graph("G4");
  auto cfg = config(PolicyKind::eps_greedy, 2, 100);
  cfg.epsilon = 0.0;
  const auto trace = run_policy(g, cfg, 6, {true});
  std::set<Intervention> first(trace.chosen.begin(), trace.chosen.begin() + 6);
  EXPECT_EQ(first.size(), 6U);
}

TEST(PolicyConfig, JsonKinds) {
  const auto ucb = policy_from_json(nlohmann::json::parse(R"({"kind": "ucb-scaled"})"));
  EXPECT_EQ(ucb.kind, PolicyKind::ucb);
  EXPECT_DOUBLE_EQ(ucb.bonus_scale, 0.1);
  EXPECT_EQ(ucb.label, "ucb-scaled");
  const auto ofu = policy_from_json(nlohmann::json::parse(
      R"({"kind": "blm-ofu", "label": "OFU", "rho_scale": 0.1, "t0_mode": "fraction:0.01", "oracle": "eps-net:0.05"})"));
  EXPECT_EQ(ofu.kind, PolicyKind::bglm_ofu);
  EXPECT_EQ(ofu.t0.kind, T0Mode::Kind::fraction);
  EXPECT_DOUBLE_EQ(ofu.t0.fraction, 0.01);
  EXPECT_EQ(ofu.oracle.kind, OracleSpec::Kind::eps_net);
  EXPECT_DOUBLE_EQ(ofu.oracle.epsilon, 0.05);
  EXPECT_EQ(T0Mode::parse("fraction:0.25").to_string(), "fraction:0.25");
  EXPECT_THROW((void)policy_from_json(nlohmann::json::parse(R"({"kind": "thompson"})")), std::invalid_argument);
  EXPECT_THROW((void)T0Mode::parse("sometimes"), std::invalid_argument);
  EXPECT_THROW((void)OracleSpec::parse("eps-net:0"), std::invalid_argument);
}

TEST(PolicyConfig, PairOracleRejectsNonlinearLinks) {
  Engine engine(1);
  const auto m = logistic_version(random_blm({5, 0.6, 0.3, 1.0}, engine));
  auto cfg = config(PolicyKind::bglm_ofu, 1, 10);
  EXPECT_THROW((void)run_policy(m, cfg, 1), std::invalid_argument);
  cfg.oracle = OracleSpec::parse("optimistic");
  cfg.t0 = T0Mode::parse("fraction:0.5");
  const auto trace = run_policy(m, cfg, 1);
  EXPECT_TRUE(trace.heuristic_oracle);
}

}  // namespace
}  // namespace ccb
