#pragma once

// Learner-side statistics: per-node data pairs, Gram matrices, the
// maximum-likelihood fit of a node's weights, ridge updates and the
// confidence radii that size each node's ellipsoid.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ccb/model.hpp"
#include "ccb/propagate.hpp"

namespace ccb {

struct DataPair {
  Eigen::VectorXd v;  ///< realized parent values, aligned with the node's parents
  double x = 0.0;     ///< realized value of the node
};

struct NodeDataset {
  NodeId node = 0;
  std::vector<DataPair> pairs;
};

/// Parent-value vector of `node` in a realized assignment.
[[nodiscard]] Eigen::VectorXd parent_vector(const Node& node, std::span<const std::uint8_t> values);

/// One pair per round in order, skipping rounds in which `node` was intervened.
[[nodiscard]] NodeDataset build_dataset(const CausalModel& model,
                                        std::span<const Observation> history, NodeId node);

struct GramMatrix {
  Eigen::MatrixXd m;
  bool with_ridge = false;
};

/// prior + sum V V^T, where prior is the identity when with_ridge is set.
[[nodiscard]] GramMatrix gram_matrix(const NodeDataset& data, std::size_t dim, bool with_ridge);

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] double lambda_min(const Eigen::MatrixXd& m);
[[nodiscard]] inline double lambda_min(const GramMatrix& g) { return lambda_min(g.m); }

struct SolverConfig {
  double tolerance = 1e-9;  ///< on the Euclidean norm of the score
  int max_iterations = 100;
  /// Run Newton iterations even for the identity link (tests the general path).
  bool force_newton = false;
};

/// Score sum_i (x_i - f(V_i . theta)) V_i.
[[nodiscard]] Eigen::VectorXd score(const NodeDataset& data, const LinkFunction& link,
                                    const Eigen::VectorXd& theta);

/// Root of the score equation. Identity links use the normal equations
/// directly; others run damped Newton starting from the least-squares
/// solution (or `start` when given). Unconstrained: the result may leave
/// [0,1]^d. Throws std::domain_error on a singular Gram matrix and
/// std::runtime_error when Newton does not converge.
[[nodiscard]] Eigen::VectorXd mle_fit(const NodeDataset& data, const LinkFunction& link,
                                      const SolverConfig& cfg = {},
                                      const Eigen::VectorXd* start = nullptr);

/// Per-node belief: Gram matrix M, response sum b, estimate theta_hat and the
/// ellipsoid radius rho. Keeps a Cholesky factor of M current.
class NodeEstimate {
 public:
  NodeEstimate() = default;
  /// M = I (ridge prior) or M = 0, b = 0, theta_hat = 0.
  NodeEstimate(std::size_t dim, bool ridge_prior);

  [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(b_.size()); }
  [[nodiscard]] const Eigen::MatrixXd& gram() const noexcept { return m_; }
  [[nodiscard]] const Eigen::VectorXd& b() const noexcept { return b_; }
  [[nodiscard]] const Eigen::VectorXd& theta_hat() const noexcept { return theta_; }
  [[nodiscard]] bool ridge_prior() const noexcept { return ridge_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }

  double rho = 0.0;

  /// M += V V^T, b += x V, theta_hat = M^{-1} b.
  void ridge_update(const Eigen::VectorXd& v, double x);

  /// M += V V^T and b += x V without refitting (observational accumulation).
  void accumulate(const Eigen::VectorXd& v, double x);

  /// Refactors M. Returns false when M is not positive definite.
  bool refactor();
  [[nodiscard]] bool positive_definite() const noexcept { return factor_ok_; }

  /// theta_hat = M^{-1} b via the current factor. Requires positive_definite().
  void solve_least_squares();
  void set_theta(const Eigen::VectorXd& theta) { theta_ = theta; }

  /// sqrt(u^T M^{-1} u), the dual norm used by the optimistic oracles.
  [[nodiscard]] double inverse_norm(const Eigen::VectorXd& u) const;
  /// Same, writing the intermediate L^{-1} u into `work` (sized dim()).
  [[nodiscard]] double inverse_norm(const Eigen::VectorXd& u, Eigen::VectorXd& work) const;
  /// ||d||_M = sqrt(d^T M d).
  [[nodiscard]] double gram_norm(const Eigen::VectorXd& d) const;
  /// ||theta - theta_hat||_M <= rho.
  [[nodiscard]] bool contains(const Eigen::VectorXd& theta) const;
  /// (M^{-1})_{ii}.
  [[nodiscard]] double inverse_diagonal(std::size_t i) const;

 private:
  Eigen::MatrixXd m_;
  Eigen::VectorXd b_;
  Eigen::VectorXd theta_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  bool ridge_ = false;
  bool factor_ok_ = false;
  std::size_t count_ = 0;
};

/// Value-semantics wrapper around NodeEstimate::ridge_update.
[[nodiscard]] NodeEstimate ridge_update(NodeEstimate estimate, const Eigen::VectorXd& v, double x);

/// rho = scale * (3 / kappa) sqrt(ln(1/delta)).
[[nodiscard]] double rho_ofu(double kappa, double delta, double scale = 1.0);
/// rho_t = scale * (sqrt(n ln(1 + t n) + 2 ln(1/delta)) + sqrt(n)).
[[nodiscard]] double rho_lr(std::size_t n, std::uint64_t t, double delta, double scale = 1.0);

/// delta = 1 / (3 n sqrt(T)) for the GLM learner and 1 / (n sqrt(T)) for the
/// linear-regression learner.
[[nodiscard]] double default_delta_ofu(std::size_t n, std::uint64_t horizon);
[[nodiscard]] double default_delta_lr(std::size_t n, std::uint64_t horizon);

/// Lower bound on lambda_min(M_{t,X}) under which the MLE confidence bound
/// holds: 512 |Pa| l2^2 / kappa^4 (|Pa|^2 + ln(1/delta)).
[[nodiscard]] double eigen_condition_threshold(std::size_t parents, double l2, double kappa,
                                               double delta);

struct InitThresholds {
  std::uint64_t r = 0;
  double t0 = 0.0;
};

/// R = ceil(512 D l2^2 / kappa^4 (D^2 + ln(1/delta))) and
/// T0 = max{c / zeta^2 ln(1/delta), (8 n^2 - 16 n + 2) R / zeta}, with l2 the
/// largest and kappa the smallest link constant over the model's nodes.
[[nodiscard]] InitThresholds init_thresholds(const CausalModel& model, double delta, double c,
                                             double zeta);

}  // namespace ccb
