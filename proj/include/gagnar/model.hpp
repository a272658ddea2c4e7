// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <span>
#include <vector>

#include "gagnar/errors.hpp"
#include "gagnar/numeric.hpp"

namespace gagnar {

inline constexpr double kLog2Pi = 1.8378770664093454836;

/// N x T responses plus N x p static covariates (p may be zero).
struct PanelData {
  Eigen::MatrixXd Y;
  Eigen::MatrixXd V;

  int n() const { return static_cast<int>(Y.rows()); }
  int t_len() const { return static_cast<int>(Y.cols()); }
  int p() const { return static_cast<int>(V.cols()); }

  void validate() const {
    if (Y.cols() < 2) throw ValidationError("panel needs T >= 2");
    if (V.rows() != 0 && V.rows() != Y.rows())
      throw ValidationError("covariate row count must match response row count");
    if (!Y.allFinite() || !V.allFinite())
      throw ValidationError("panel contains non-finite entries");
  }
};

/// Node-level regression: response over t = 2..T and the design whose row
/// for time t is (1, neighbour average at t-1, own lag at t-1, V_i).
/// Gram blocks are cached once and reused by every conjugate update.
struct NodeDesign {
  Eigen::VectorXd y;    // length T-1
  Eigen::MatrixXd X;    // (T-1) x (p+3)
  Eigen::MatrixXd xtx;  // X'X
  Eigen::VectorXd xty;  // X'y
  double yty = 0.0;

  int obs() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }

  static NodeDesign from_rows(Eigen::MatrixXd x, Eigen::VectorXd y_in) {
    NodeDesign d;
    d.X = std::move(x);
    d.y = std::move(y_in);
    d.xtx = d.X.transpose() * d.X;
    d.xty = d.X.transpose() * d.y;
    d.yty = d.y.squaredNorm();
    return d;
  }
};

inline NodeDesign build_node_design(const PanelData& panel,
                                    const Eigen::MatrixXd& row_norm_adj, int i) {
  panel.validate();
  const int n = panel.n();
  const int t_len = panel.t_len();
  const int p = panel.p();
  if (i < 0 || i >= n) throw ValidationError("node index out of range");
  if (row_norm_adj.rows() != n || row_norm_adj.cols() != n)
    throw ValidationError("row-normalized adjacency dimension mismatch");

  Eigen::MatrixXd x(t_len - 1, p + 3);
  Eigen::VectorXd y(t_len - 1);
  const Eigen::RowVectorXd net_lags = row_norm_adj.row(i) * panel.Y;  // per time column
  for (int r = 0; r < t_len - 1; ++r) {
    x(r, 0) = 1.0;
    x(r, 1) = net_lags(r);
    x(r, 2) = panel.Y(i, r);
    for (int c = 0; c < p; ++c) x(r, 3 + c) = panel.V(i, c);
    y(r) = panel.Y(i, r + 1);
  }
  return NodeDesign::from_rows(std::move(x), std::move(y));
}

inline std::vector<NodeDesign> build_node_designs(const PanelData& panel,
                                                  const Eigen::MatrixXd& row_norm_adj) {
  std::vector<NodeDesign> designs;
  designs.reserve(static_cast<std::size_t>(panel.n()));
  for (int i = 0; i < panel.n(); ++i)
    designs.push_back(build_node_design(panel, row_norm_adj, i));
  return designs;
}

/// One group's regression coefficients and noise variance.
struct GroupParams {
  Eigen::VectorXd theta;
  double sigma2 = 1.0;
};

/// Normal-inverse-gamma base measure plus the new-group concentration.
struct NIGHyper {
  Eigen::VectorXd tau0;
  Eigen::MatrixXd Sigma0;
  double a0 = 0.01;
  double b0 = 0.01;
  double alpha = 1.0;

  static NIGHyper noninformative(int dim, double alpha = 1.0) {
    NIGHyper h;
    h.tau0 = Eigen::VectorXd::Zero(dim);
    h.Sigma0 = 100.0 * Eigen::MatrixXd::Identity(dim, dim);
    h.a0 = 0.01;
    h.b0 = 0.01;
    h.alpha = alpha;
    return h;
  }

  int dim() const { return static_cast<int>(tau0.size()); }

  void validate() const {
    if (tau0.size() == 0) throw ValidationError("tau0 is empty");
    if (Sigma0.rows() != tau0.size() || Sigma0.cols() != tau0.size())
      throw ValidationError("Sigma0 dimension mismatch");
    if (!Sigma0.isApprox(Sigma0.transpose(), 1e-10))
      throw ValidationError("Sigma0 must be symmetric");
    if (!(a0 > 0.0) || !(b0 > 0.0)) throw ValidationError("a0 and b0 must be positive");
    if (!(alpha > 0.0)) throw ValidationError("alpha must be positive");
    cholesky_spd(Sigma0, "Sigma0");  // SPD check
  }
};

struct NIGPosterior {
  Eigen::VectorXd tau_star;
  Eigen::MatrixXd Sigma_star;
  double a_star = 0.0;
  double b_star = 0.0;
};

inline double log_likelihood(const NodeDesign& design, const GroupParams& params) {
  if (params.theta.size() != design.dim())
    throw ValidationError("theta length does not match design columns");
  if (!(params.sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  const double rss = (design.y - design.X * params.theta).squaredNorm();
  const double n_obs = static_cast<double>(design.obs());
  return -0.5 * n_obs * (kLog2Pi + std::log(params.sigma2)) - rss / (2.0 * params.sigma2);
}

namespace detail {

/// Accumulated sufficient statistics for a set of nodes.
struct GroupStats {
  Eigen::MatrixXd precision;  // Sigma0^{-1} + sum X'X
  Eigen::VectorXd moment;     // Sigma0^{-1} tau0 + sum X'y
  double yty = 0.0;           // sum y'y
  double n_obs = 0.0;
  double tau0_quad = 0.0;     // tau0' Sigma0^{-1} tau0
  double logdet_sigma0 = 0.0;
};

inline GroupStats accumulate_group(std::span<const NodeDesign> designs,
                                   std::span<const int> members, const NIGHyper& hyper) {
  const int d = hyper.dim();
  const auto s0 = cholesky_spd(hyper.Sigma0, "Sigma0");
  GroupStats g;
  g.precision = s0.solve(Eigen::MatrixXd::Identity(d, d));
  g.moment = s0.solve(hyper.tau0);
  g.tau0_quad = hyper.tau0.dot(g.moment);
  g.logdet_sigma0 = log_det_from_llt(s0);
  for (int i : members) {
    const NodeDesign& nd = designs[static_cast<std::size_t>(i)];
    if (nd.dim() != d) throw ValidationError("design/hyper dimension mismatch");
    g.precision += nd.xtx;
    g.moment += nd.xty;
    g.yty += nd.yty;
    g.n_obs += static_cast<double>(nd.obs());
  }
  return g;
}

}  // namespace detail

/// Conjugate update for one group; an empty member set returns the prior.
inline NIGPosterior nig_posterior(std::span<const NodeDesign> designs,
                                  std::span<const int> members, const NIGHyper& hyper) {
  const auto g = detail::accumulate_group(designs, members, hyper);
  const auto llt = cholesky_spd(g.precision, "posterior precision");
  NIGPosterior post;
  post.tau_star = llt.solve(g.moment);
  post.Sigma_star = llt.solve(Eigen::MatrixXd::Identity(hyper.dim(), hyper.dim()));
  // Symmetrize away the solve's rounding skew.
  post.Sigma_star = 0.5 * (post.Sigma_star + post.Sigma_star.transpose()).eval();
  post.a_star = hyper.a0 + 0.5 * g.n_obs;
  post.b_star = hyper.b0 + 0.5 * (g.tau0_quad + g.yty - g.moment.dot(post.tau_star));
  if (!(post.b_star > 0.0))
    throw NumericalError("posterior scale b* is not positive");
  return post;
}

inline NIGPosterior nig_posterior(const NodeDesign& design, const NIGHyper& hyper) {
  const int idx[1] = {0};
  return nig_posterior(std::span<const NodeDesign>(&design, 1), idx, hyper);
}

/// Log marginal likelihood of a set of nodes under a shared NIG draw,
/// everything in log space (log-Gamma, Cholesky log-determinants).
inline double log_marginal_likelihood(std::span<const NodeDesign> designs,
                                      std::span<const int> members,
                                      const NIGHyper& hyper) {
  const auto g = detail::accumulate_group(designs, members, hyper);
  const auto llt = cholesky_spd(g.precision, "posterior precision");
  const double quad = g.moment.dot(llt.solve(g.moment));
  const double a_n = hyper.a0 + 0.5 * g.n_obs;
  const double b_n = hyper.b0 + 0.5 * (g.tau0_quad + g.yty - quad);
  if (!(b_n > 0.0)) throw NumericalError("marginal scale is not positive");
  return hyper.a0 * std::log(hyper.b0) - a_n * std::log(b_n) + std::lgamma(a_n) -
         std::lgamma(hyper.a0) - 0.5 * g.logdet_sigma0 - 0.5 * log_det_from_llt(llt) -
         0.5 * g.n_obs * kLog2Pi;
}

inline double log_marginal_likelihood(const NodeDesign& design, const NIGHyper& hyper) {
  const int idx[1] = {0};
  return log_marginal_likelihood(std::span<const NodeDesign>(&design, 1), idx, hyper);
}

/// Joint NIG log density of (theta, sigma2) under (tau0, Sigma0, a0, b0).
inline double nig_log_density(const GroupParams& params, const NIGHyper& hyper) {
  if (!(params.sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  const int d = hyper.dim();
  const auto s0 = cholesky_spd(hyper.Sigma0, "Sigma0");
  const Eigen::VectorXd centred = params.theta - hyper.tau0;
  const double quad = centred.dot(s0.solve(centred));
  const double log_s2 = std::log(params.sigma2);
  const double normal_part = -0.5 * d * (kLog2Pi + log_s2) - 0.5 * log_det_from_llt(s0) -
                             quad / (2.0 * params.sigma2);
  const double ig_part = hyper.a0 * std::log(hyper.b0) - std::lgamma(hyper.a0) -
                         (hyper.a0 + 1.0) * log_s2 - hyper.b0 / params.sigma2;
  return normal_part + ig_part;
}

}  // namespace gagnar
