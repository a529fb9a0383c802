#pragma once

// Online policies for the combinatorial causal bandit and the optimistic
// oracles they call.
//
// Each round a policy picks an intervention on the learner's view of the
// graph, the environment samples one round of the true model, and the policy
// sees every observed node value. Regret is charged with the exact
// sigma(S_t, theta*) of the true model.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ccb/estimate.hpp"
#include "ccb/model.hpp"
#include "ccb/propagate.hpp"
#include "ccb/rng.hpp"

namespace ccb {

enum class PolicyKind { bglm_ofu, blm_lr, ucb, eps_greedy };

[[nodiscard]] std::string to_string(PolicyKind kind);

/// How the GLM learner sizes its observational warm-up.
struct T0Mode {
  enum class Kind { formula, fraction, adaptive };
  Kind kind = Kind::fraction;
  double fraction = 0.01;  ///< T0 = floor(fraction * T) for Kind::fraction

  /// "formula", "adaptive" or "fraction:F".
  [[nodiscard]] static T0Mode parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
};

struct OracleSpec {
  enum class Kind { pair, eps_net, optimistic };
  Kind kind = Kind::pair;
  double epsilon = 0.01;  ///< grid spacing for Kind::eps_net

  /// "pair", "optimistic" or "eps-net:E".
  [[nodiscard]] static OracleSpec parse(const std::string& text);
  [[nodiscard]] std::string to_string() const;
};

struct PolicyConfig {
  PolicyKind kind = PolicyKind::blm_lr;
  std::string label;
  std::size_t budget = 1;
  std::uint64_t horizon = 1;

  double rho_scale = 1.0;
  T0Mode t0;
  OracleSpec oracle;
  /// Optimistic node expectations are left unclamped unless set.
  bool clamp_optimistic = false;
  /// 0 selects the default delta of each learner.
  double delta = 0.0;
  /// Constant of the concentration inequality in the formula warm-up length.
  double lm_constant = 1.0;
  /// Parent-balance constant for the formula warm-up length; 0 derives it
  /// from the true model's activation margin and out-degree.
  double zeta = 0.0;
  SolverConfig solver;

  double epsilon = 0.1;      ///< exploration rate of eps-greedy
  double bonus_scale = 1.0;  ///< multiplies the UCB exploration bonus

  /// Charge regret for the GLM learner's observational rounds.
  bool charge_init_regret = true;
};

/// Accepts kind names bglm-ofu (alias blm-ofu), blm-lr, ucb, ucb-scaled
/// (ucb with bonus_scale 0.1) and eps-greedy.
[[nodiscard]] PolicyConfig policy_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json policy_to_json(const PolicyConfig& cfg);

struct RegretTrace {
  double optimum = 0.0;
  Intervention best_set;
  std::vector<double> value;       ///< sigma(S_t, theta*), rounds 1..T
  std::vector<double> regret;      ///< instantaneous
  std::vector<double> cumulative;  ///< running sum of regret
  std::vector<Intervention> chosen;  ///< only with RunOptions::record_choices
  std::uint64_t init_rounds = 0;
  bool heuristic_oracle = false;

  [[nodiscard]] double final_regret() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

struct RunOptions {
  bool record_choices = false;
};

struct OracleResult {
  Intervention set;
  double value = 0.0;
};

/// Per subset of size exactly K: topological pass with
/// E[X] = E[Pa]^T theta_hat + rho ||E[Pa]||_{M^{-1}} (1 on intervened and
/// constant nodes). Argmax with ties to the first subset in lexicographic
/// order. `estimates` is indexed by node id; constant nodes are skipped.
[[nodiscard]] OracleResult pair_oracle_blm(const CausalModel& skeleton,
                                           std::span<const NodeEstimate> estimates,
                                           std::size_t budget, double rho, bool clamp = false);

/// Brute-force joint argmax over subsets of size K and over a lattice of
/// spacing epsilon inside every relevant node's ellipsoid. Throws
/// std::length_error when the number of evaluations exceeds `cap`.
[[nodiscard]] OracleResult eps_net_oracle(const CausalModel& skeleton,
                                          std::span<const NodeEstimate> estimates,
                                          std::size_t budget, double rho, double epsilon,
                                          std::uint64_t cap = 50'000'000);

/// E[X] = f_X(E[Pa]^T theta_hat + rho ||E[Pa]||_{M^{-1}}). Identical to
/// pair_oracle_blm for identity links; a heuristic otherwise.
[[nodiscard]] OracleResult optimistic_propagation_general(const CausalModel& skeleton,
                                                          std::span<const NodeEstimate> estimates,
                                                          std::size_t budget, double rho);

class Policy {
 public:
  virtual ~Policy() = default;
  /// Intervention for round t (1-based), over the learner's skeleton.
  [[nodiscard]] virtual Intervention select(std::uint64_t round) = 0;
  virtual void observe(const Observation& obs) = 0;
  /// Whether the last selection was an observational warm-up round.
  [[nodiscard]] virtual bool last_was_init() const { return false; }
  [[nodiscard]] virtual bool heuristic() const { return false; }
};

/// `skeleton` is the learner's Markovian view; its weights are never read.
[[nodiscard]] std::unique_ptr<Policy> make_policy(const CausalModel& skeleton,
                                                  const PolicyConfig& cfg, const RngStream& rng,
                                                  const CausalModel* truth_for_zeta = nullptr);

/// One run of T rounds. The environment uses stream 0 of `run_seed`, the
/// policy stream 1. Models with hidden nodes are learned through their
/// Markovian transform.
[[nodiscard]] RegretTrace run_policy(const CausalModel& truth, const PolicyConfig& cfg,
                                     std::uint64_t run_seed, const RunOptions& options = {});

[[nodiscard]] RegretTrace run_bglm_ofu(const CausalModel& truth, PolicyConfig cfg,
                                       std::uint64_t run_seed);
[[nodiscard]] RegretTrace run_blm_lr(const CausalModel& truth, PolicyConfig cfg,
                                     std::uint64_t run_seed);
[[nodiscard]] RegretTrace run_ucb(const CausalModel& truth, PolicyConfig cfg,
                                  std::uint64_t run_seed);
[[nodiscard]] RegretTrace run_eps_greedy(const CausalModel& truth, PolicyConfig cfg,
                                         std::uint64_t run_seed);

}  // namespace ccb
