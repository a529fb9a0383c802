#include "ccb/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace ccb {

Eigen::VectorXd parent_vector(const Node& node, std::span<const std::uint8_t> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(node.parents.size()));
  for (std::size_t k = 0; k < node.parents.size(); ++k) {
    v[static_cast<Eigen::Index>(k)] = values[node.parents[k]] ? 1.0 : 0.0;
  }
  return v;
}

NodeDataset build_dataset(const CausalModel& model, std::span<const Observation> history,
                          NodeId node) {
  NodeDataset data;
  data.node = node;
  const Node& n = model.node(node);
  for (const Observation& obs : history) {
    if (obs.intervention.contains(node)) continue;
    data.pairs.push_back({parent_vector(n, obs.values), obs.values[node] ? 1.0 : 0.0});
  }
  return data;
}

GramMatrix gram_matrix(const NodeDataset& data, std::size_t dim, bool with_ridge) {
  const auto d = static_cast<Eigen::Index>(dim);
  GramMatrix g{Eigen::MatrixXd::Zero(d, d), with_ridge};
  if (with_ridge) g.m.setIdentity();
  for (const auto& p : data.pairs) g.m.selfadjointView<Eigen::Lower>().rankUpdate(p.v);
  g.m = g.m.selfadjointView<Eigen::Lower>();
  return g;
}

double lambda_min(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

Eigen::VectorXd score(const NodeDataset& data, const LinkFunction& link,
                      const Eigen::VectorXd& theta) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(theta.size());
  for (const auto& p : data.pairs) g += (p.x - link.value(p.v.dot(theta))) * p.v;
  return g;
}

namespace {

Eigen::LLT<Eigen::MatrixXd> checked_factor(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  if (llt.info() != Eigen::Success || lambda_min(m) <= 1e-12 * scale) {
    throw std::domain_error(std::string(what) + ": Gram matrix is singular");
  }
  return llt;
}

}  // namespace

Eigen::VectorXd mle_fit(const NodeDataset& data, const LinkFunction& link, const SolverConfig& cfg,
                        const Eigen::VectorXd* start) {
  if (data.pairs.empty()) throw std::invalid_argument("mle_fit: empty dataset");
  const auto dim = static_cast<std::size_t>(data.pairs.front().v.size());
  const GramMatrix g = gram_matrix(data, dim, false);
  const auto llt = checked_factor(g.m, "mle_fit");

  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  for (const auto& p : data.pairs) b += p.x * p.v;
  Eigen::VectorXd theta = llt.solve(b);
  if (link.is_identity() && !cfg.force_newton) return theta;
  if (start != nullptr) theta = *start;

  Eigen::VectorXd grad = score(data, link, theta);
  double norm = grad.norm();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (norm <= cfg.tolerance) return theta;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(g.m.rows(), g.m.cols());
    for (const auto& p : data.pairs) {
      h.selfadjointView<Eigen::Lower>().rankUpdate(p.v, link.derivative(p.v.dot(theta)));
    }
    h = h.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      // Flat link segments leave h singular; fall back to the Gram matrix.
      step = llt.solve(grad);
    }
    double t = 1.0;
    bool improved = false;
    for (int halvings = 0; halvings < 40; ++halvings, t *= 0.5) {
      Eigen::VectorXd candidate = theta + t * step;
      Eigen::VectorXd cand_grad = score(data, link, candidate);
      const double cand_norm = cand_grad.norm();
      if (cand_norm < norm) {
        theta = std::move(candidate);
        grad = std::move(cand_grad);
        norm = cand_norm;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  if (norm <= cfg.tolerance) return theta;
  throw std::runtime_error("mle_fit: score norm " + std::to_string(norm) + " above tolerance after " +
                           std::to_string(cfg.max_iterations) + " iterations");
}

// ---------------------------------------------------------------------------

NodeEstimate::NodeEstimate(std::size_t dim, bool ridge_prior) : ridge_(ridge_prior) {
  const auto d = static_cast<Eigen::Index>(dim);
  m_ = Eigen::MatrixXd::Zero(d, d);
  if (ridge_prior) m_.setIdentity();
  b_ = Eigen::VectorXd::Zero(d);
  theta_ = Eigen::VectorXd::Zero(d);
  llt_ = Eigen::LLT<Eigen::MatrixXd>(d);
  if (ridge_prior) refactor();
}

void NodeEstimate::accumulate(const Eigen::VectorXd& v, double x) {
  m_.selfadjointView<Eigen::Lower>().rankUpdate(v);
  m_.triangularView<Eigen::StrictlyUpper>() = m_.transpose();
  b_ += x * v;
  ++count_;
  factor_ok_ = false;
}

void NodeEstimate::ridge_update(const Eigen::VectorXd& v, double x) {
  const bool had_factor = factor_ok_;
  accumulate(v, x);
  if (had_factor) {
    llt_.rankUpdate(v, 1.0);
    factor_ok_ = llt_.info() == Eigen::Success;
  }
  if (!factor_ok_ && !refactor()) {
    throw std::domain_error("ridge_update: Gram matrix is not positive definite");
  }
  theta_ = llt_.solve(b_);
}

bool NodeEstimate::refactor() {
  llt_.compute(m_);
  factor_ok_ = llt_.info() == Eigen::Success && m_.rows() > 0;
  if (factor_ok_) {
    // LLT succeeds on some numerically semidefinite matrices; reject those.
    const double scale = std::max(1.0, m_.diagonal().maxCoeff());
    factor_ok_ = llt_.matrixLLT().diagonal().minCoeff() > 1e-7 * std::sqrt(scale);
  }
  return factor_ok_;
}

void NodeEstimate::solve_least_squares() {
  if (!factor_ok_) throw std::domain_error("NodeEstimate: Gram matrix is singular");
  theta_ = llt_.solve(b_);
}

double NodeEstimate::inverse_norm(const Eigen::VectorXd& u) const {
  Eigen::VectorXd work(u.size());
  return inverse_norm(u, work);
}

double NodeEstimate::inverse_norm(const Eigen::VectorXd& u, Eigen::VectorXd& work) const {
  if (!factor_ok_) throw std::domain_error("NodeEstimate: Gram matrix is singular");
  work = u;
  llt_.matrixL().solveInPlace(work);
  return work.norm();
}

double NodeEstimate::gram_norm(const Eigen::VectorXd& d) const {
  return std::sqrt(std::max(0.0, d.dot(m_ * d)));
}

bool NodeEstimate::contains(const Eigen::VectorXd& theta) const {
  return gram_norm(theta - theta_) <= rho;
}

double NodeEstimate::inverse_diagonal(std::size_t i) const {
  Eigen::VectorXd e = Eigen::VectorXd::Unit(static_cast<Eigen::Index>(dim()),
                                            static_cast<Eigen::Index>(i));
  const double r = inverse_norm(e);
  return r * r;
}

NodeEstimate ridge_update(NodeEstimate estimate, const Eigen::VectorXd& v, double x) {
  estimate.ridge_update(v, x);
  return estimate;
}

// ---------------------------------------------------------------------------

namespace {

void check_delta(double delta, const char* what) {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument(std::string(what) + ": delta must lie in (0, 1)");
  }
}

}  // namespace

double rho_ofu(double kappa, double delta, double scale) {
  check_delta(delta, "rho_ofu");
  if (!(kappa > 0.0)) throw std::invalid_argument("rho_ofu: kappa must be positive");
  return scale * 3.0 / kappa * std::sqrt(std::log(1.0 / delta));
}

double rho_lr(std::size_t n, std::uint64_t t, double delta, double scale) {
  check_delta(delta, "rho_lr");
  if (n == 0) throw std::invalid_argument("rho_lr: n must be >= 1");
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(t);
  return scale * (std::sqrt(nd * std::log(1.0 + td * nd) + 2.0 * std::log(1.0 / delta)) +
                  std::sqrt(nd));
}

double default_delta_ofu(std::size_t n, std::uint64_t horizon) {
  return 1.0 / (3.0 * static_cast<double>(n) * std::sqrt(static_cast<double>(horizon)));
}

double default_delta_lr(std::size_t n, std::uint64_t horizon) {
  return 1.0 / (static_cast<double>(n) * std::sqrt(static_cast<double>(horizon)));
}

double eigen_condition_threshold(std::size_t parents, double l2, double kappa, double delta) {
  check_delta(delta, "eigen_condition_threshold");
  if (!(kappa > 0.0)) throw std::invalid_argument("eigen_condition_threshold: kappa must be positive");
  const double p = static_cast<double>(parents);
  return 512.0 * p * l2 * l2 / std::pow(kappa, 4) * (p * p + std::log(1.0 / delta));
}

InitThresholds init_thresholds(const CausalModel& model, double delta, double c, double zeta) {
  check_delta(delta, "init_thresholds");
  if (!(c > 0.0)) throw std::invalid_argument("init_thresholds: c must be positive");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("init_thresholds: zeta must lie in (0, 1]");
  double l2 = 0.0;
  double kappa = 1.0;
  bool any = false;
  for (const Node& node : model.nodes()) {
    if (node.constant || node.hidden) continue;
    l2 = std::max(l2, node.link.l2());
    kappa = any ? std::min(kappa, node.link.kappa()) : node.link.kappa();
    any = true;
  }
  if (!(kappa > 0.0)) throw std::invalid_argument("init_thresholds: some link has kappa = 0");
  const double d = static_cast<double>(model.max_in_degree());
  const double log_inv = std::log(1.0 / delta);
  const double r_real = 512.0 * d * l2 * l2 / std::pow(kappa, 4) * (d * d + log_inv);
  // Guard the ceiling against representation error (0.512 must not become 1.0000000001).
  const auto r = static_cast<std::uint64_t>(std::ceil(r_real - 1e-12 * std::max(1.0, r_real)));
  const double n = static_cast<double>(model.num_nodes());
  const double t0 = std::max(c / (zeta * zeta) * log_inv,
                             (8.0 * n * n - 16.0 * n + 2.0) * static_cast<double>(r) / zeta);
  return {r, t0};
}

}  // namespace ccb
