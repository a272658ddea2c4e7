// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gagnar/graph.hpp"
#include "gagnar/model.hpp"
#include "gagnar/numeric.hpp"
#include "gagnar/rng.hpp"

namespace gagnar {

/// Current partition and per-group parameters. Labels are 0-based,
/// contiguous, and every group is nonempty.
struct ChainState {
  std::vector<int> z;
  int K = 0;
  std::vector<GroupParams> params;
  std::vector<int> group_sizes;

  int n() const { return static_cast<int>(z.size()); }

  void check_consistent() const {
    if (static_cast<int>(params.size()) != K ||
        static_cast<int>(group_sizes.size()) != K)
      throw NumericalError("chain state arrays out of sync");
    std::vector<int> counts(static_cast<std::size_t>(K), 0);
    for (int zi : z) {
      if (zi < 0 || zi >= K) throw NumericalError("label out of range");
      ++counts[static_cast<std::size_t>(zi)];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[static_cast<std::size_t>(k)] == 0)
        throw NumericalError("empty group in chain state");
      if (counts[static_cast<std::size_t>(k)] != group_sizes[static_cast<std::size_t>(k)])
        throw NumericalError("group size bookkeeping mismatch");
    }
  }
};

/// One recorded post-burn-in iteration.
struct Draw {
  int iter = 0;  // absolute 1-based iteration index
  int K = 0;
  std::vector<int> z;
  std::vector<GroupParams> params;
  Eigen::VectorXd node_loglik;  // full training likelihood per node
};

struct ChainDraws {
  int n = 0;
  int t_len = 0;
  int p = 0;
  int total_iters = 0;
  int burn_in = 0;
  double h = 0.0;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_stream = 0;
  std::vector<Draw> draws;

  int recorded() const { return static_cast<int>(draws.size()); }
};

struct SamplerConfig {
  int total_iters = 1500;
  int burn_in = 500;
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_stream = 0;
  NIGHyper hyper;
  double h = 0.0;
  bool shuffle_order = false;

  void validate() const {
    if (total_iters <= 0) throw ValidationError("total_iters must be positive");
    if (burn_in < 0 || burn_in >= total_iters)
      throw ValidationError("burn_in must lie in [0, total_iters)");
    if (!(h >= 0.0)) throw ValidationError("h must be nonnegative");
    hyper.validate();
  }
};

/// kappa_k = sum over j != i of w_ij * I(z_j = k). Nodes with z_j < 0
/// (removed) are skipped.
inline Eigen::VectorXd group_stickiness(int i, const std::vector<int>& z, int n_groups,
                                        const WeightMatrix& weights) {
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(n_groups);
  weights.for_each_offdiag(i, [&](int j, double w) {
    const int zj = z[static_cast<std::size_t>(j)];
    if (zj >= 0) kappa[zj] += w;
  });
  return kappa;
}

/// Allocation probabilities for node i (already removed from its group):
/// entries 0..K-1 are proportional to kappa_k * f(Y_i | theta_k, sigma2_k),
/// the final entry to alpha * g(Y_i). Groups with kappa_k = 0 get exactly
/// zero mass. The result is normalized.
inline Eigen::VectorXd membership_conditional(int i, const ChainState& state,
                                              const WeightMatrix& weights,
                                              std::span<const NodeDesign> designs,
                                              const NIGHyper& hyper,
                                              double log_g_i = std::numeric_limits<double>::quiet_NaN()) {
  if (state.z[static_cast<std::size_t>(i)] >= 0)
    throw ValidationError("membership_conditional expects node i to be removed");
  const NodeDesign& design = designs[static_cast<std::size_t>(i)];
  const Eigen::VectorXd kappa = group_stickiness(i, state.z, state.K, weights);
  Eigen::VectorXd logw(state.K + 1);
  for (int k = 0; k < state.K; ++k) {
    logw[k] = kappa[k] > 0.0
                  ? std::log(kappa[k]) +
                        log_likelihood(design, state.params[static_cast<std::size_t>(k)])
                  : kNegInf;
  }
  if (std::isnan(log_g_i)) log_g_i = log_marginal_likelihood(design, hyper);
  logw[state.K] = std::log(hyper.alpha) + log_g_i;
  if (!std::isfinite(log_sum_exp(logw)))
    throw NumericalError("membership conditional has no positive mass");
  return softmax_log(logw);
}

/// sigma2 ~ InverseGamma(a*, b*), theta | sigma2 ~ N(tau*, sigma2 Sigma*).
inline GroupParams sample_nig(const NIGPosterior& post, Rng& rng) {
  GroupParams params;
  params.sigma2 = rng.inverse_gamma(post.a_star, post.b_star);
  const auto llt = cholesky_spd(post.Sigma_star, "Sigma*");
  Eigen::VectorXd zvec(post.tau_star.size());
  for (Eigen::Index k = 0; k < zvec.size(); ++k) zvec[k] = rng.normal();
  const Eigen::VectorXd correlated = llt.matrixL() * zvec;
  params.theta = post.tau_star + std::sqrt(params.sigma2) * correlated;
  return params;
}

namespace detail {

/// Relabel groups by first appearance over nodes 0..N-1 (skipping any
/// removed node), permuting params and sizes to match.
inline void relabel_first_appearance(ChainState& state) {
  std::vector<int> old_to_new(static_cast<std::size_t>(state.K), -1);
  int next = 0;
  for (int zi : state.z) {
    if (zi < 0) continue;
    if (old_to_new[static_cast<std::size_t>(zi)] == -1)
      old_to_new[static_cast<std::size_t>(zi)] = next++;
  }
  if (next != state.K) throw NumericalError("relabel found an empty group");
  std::vector<GroupParams> params(static_cast<std::size_t>(state.K));
  std::vector<int> sizes(static_cast<std::size_t>(state.K));
  for (int k = 0; k < state.K; ++k) {
    const int nk = old_to_new[static_cast<std::size_t>(k)];
    params[static_cast<std::size_t>(nk)] = std::move(state.params[static_cast<std::size_t>(k)]);
    sizes[static_cast<std::size_t>(nk)] = state.group_sizes[static_cast<std::size_t>(k)];
  }
  state.params = std::move(params);
  state.group_sizes = std::move(sizes);
  for (int& zi : state.z)
    if (zi >= 0) zi = old_to_new[static_cast<std::size_t>(zi)];
}

inline void remove_node(ChainState& state, int i) {
  const int g = state.z[static_cast<std::size_t>(i)];
  if (g < 0) throw NumericalError("node removed twice");
  state.z[static_cast<std::size_t>(i)] = -1;
  if (--state.group_sizes[static_cast<std::size_t>(g)] == 0) {
    state.params.erase(state.params.begin() + g);
    state.group_sizes.erase(state.group_sizes.begin() + g);
    --state.K;
    for (int& zi : state.z)
      if (zi > g) --zi;
    relabel_first_appearance(state);
  }
}

inline std::vector<std::vector<int>> members_by_group(const ChainState& state) {
  std::vector<std::vector<int>> members(static_cast<std::size_t>(state.K));
  for (int i = 0; i < state.n(); ++i)
    members[static_cast<std::size_t>(state.z[static_cast<std::size_t>(i)])].push_back(i);
  return members;
}

}  // namespace detail

/// Everything a sweep needs besides the mutable state.
struct SweepContext {
  const WeightMatrix& weights;
  std::span<const NodeDesign> designs;
  const NIGHyper& hyper;
  std::span<const double> log_g;  // per-node marginal likelihoods, precomputed
  bool shuffle_order = false;
};

/// One full Gibbs iteration: resample every membership in visit order,
/// then refresh every group's parameters from its conjugate posterior.
inline void gibbs_sweep(ChainState& state, const SweepContext& ctx, Rng& rng) {
  const int n = state.n();
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  if (ctx.shuffle_order) {
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.uniform() * (i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(std::min(j, i))]);
    }
  }
  for (int i : order) {
    try {
      detail::remove_node(state, i);
      const Eigen::VectorXd probs = membership_conditional(
          i, state, ctx.weights, ctx.designs, ctx.hyper,
          ctx.log_g[static_cast<std::size_t>(i)]);
      const int k = sample_categorical(probs, rng);
      if (k == state.K) {
        const int self[1] = {i};
        state.params.push_back(sample_nig(nig_posterior(ctx.designs, self, ctx.hyper), rng));
        state.group_sizes.push_back(0);
        ++state.K;
      }
      state.z[static_cast<std::size_t>(i)] = k;
      ++state.group_sizes[static_cast<std::size_t>(k)];
    } catch (const NumericalError& e) {
      throw NumericalError("node " + std::to_string(i) + ": " + e.what());
    }
  }
  const auto members = detail::members_by_group(state);
  for (int k = 0; k < state.K; ++k) {
    try {
      state.params[static_cast<std::size_t>(k)] =
          sample_nig(nig_posterior(ctx.designs, members[static_cast<std::size_t>(k)], ctx.hyper), rng);
    } catch (const NumericalError& e) {
      throw NumericalError("group " + std::to_string(k) + ": " + e.what());
    }
  }
}

/// Convenience overload that derives the designs and marginals itself.
inline ChainState gibbs_sweep(ChainState state, const PanelData& panel,
                              const WeightMatrix& weights,
                              std::span<const NodeDesign> designs, const NIGHyper& hyper,
                              Rng& rng) {
  (void)panel;
  std::vector<double> log_g(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i)
    log_g[i] = log_marginal_likelihood(designs[i], hyper);
  SweepContext ctx{weights, designs, hyper, log_g, false};
  gibbs_sweep(state, ctx, rng);
  return state;
}

/// Unnormalized joint log posterior density at a state: sequential
/// allocation mass of the partition (node order 0..N-1) plus NIG prior
/// densities plus per-node likelihoods.
inline double joint_log_density(const ChainState& state, const WeightMatrix& weights,
                                std::span<const NodeDesign> designs,
                                const NIGHyper& hyper) {
  const int n = state.n();
  double lp = 0.0;
  // gaCRP sequential mass
  for (int i = 0; i < n; ++i) {
    const int zi = state.z[static_cast<std::size_t>(i)];
    double same = 0.0, total = 0.0;
    bool seen = false;
    for (int j = 0; j < i; ++j) {
      const double w = weights(i, j);
      total += w;
      if (state.z[static_cast<std::size_t>(j)] == zi) {
        same += w;
        seen = true;
      }
    }
    const double num = seen ? same : hyper.alpha;
    if (!(num > 0.0)) return kNegInf;
    lp += std::log(num) - std::log(total + hyper.alpha);
  }
  for (int k = 0; k < state.K; ++k)
    lp += nig_log_density(state.params[static_cast<std::size_t>(k)], hyper);
  for (int i = 0; i < n; ++i)
    lp += log_likelihood(designs[static_cast<std::size_t>(i)],
                         state.params[static_cast<std::size_t>(state.z[static_cast<std::size_t>(i)])]);
  return lp;
}

/// Run one chain: single-group initialization with parameters drawn from
/// the full-data posterior, `total_iters` sweeps, draws recorded after
/// `burn_in` together with each node's training log likelihood.
inline ChainDraws run_chain(const SamplerConfig& config, const PanelData& panel,
                            const AdjacencyMatrix& adj) {
  config.validate();
  panel.validate();
  if (panel.n() != adj.size())
    throw ValidationError("panel row count does not match adjacency size");
  if (config.hyper.dim() != panel.p() + 3)
    throw ValidationError("hyperparameter dimension must be p + 3");

  const DistanceMatrix dist = shortest_path_distances(adj);
  const WeightMatrix weights = build_weights(dist, config.h);
  const Eigen::MatrixXd row_norm = row_normalized_adjacency(adj);
  const std::vector<NodeDesign> designs = build_node_designs(panel, row_norm);

  std::vector<double> log_g(designs.size());
  for (std::size_t i = 0; i < designs.size(); ++i)
    log_g[i] = log_marginal_likelihood(designs[i], config.hyper);

  Rng rng(config.rng_seed, config.rng_stream);
  const int n = panel.n();

  ChainState state;
  state.z.assign(static_cast<std::size_t>(n), 0);
  state.K = 1;
  state.group_sizes = {n};
  std::vector<int> everyone(static_cast<std::size_t>(n));
  std::iota(everyone.begin(), everyone.end(), 0);
  state.params = {sample_nig(nig_posterior(designs, everyone, config.hyper), rng)};

  ChainDraws out;
  out.n = n;
  out.t_len = panel.t_len();
  out.p = panel.p();
  out.total_iters = config.total_iters;
  out.burn_in = config.burn_in;
  out.h = config.h;
  out.rng_seed = config.rng_seed;
  out.rng_stream = config.rng_stream;
  out.draws.reserve(static_cast<std::size_t>(config.total_iters - config.burn_in));

  SweepContext ctx{weights, designs, config.hyper, log_g, config.shuffle_order};
  for (int iter = 1; iter <= config.total_iters; ++iter) {
    try {
      gibbs_sweep(state, ctx, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(iter) + ", " + e.what());
    }
    if (iter <= config.burn_in) continue;
    Draw draw;
    draw.iter = iter;
    draw.K = state.K;
    draw.z = state.z;
    draw.params = state.params;
    draw.node_loglik.resize(n);
    for (int i = 0; i < n; ++i)
      draw.node_loglik[i] =
          log_likelihood(designs[static_cast<std::size_t>(i)],
                         state.params[static_cast<std::size_t>(state.z[static_cast<std::size_t>(i)])]);
    out.draws.push_back(std::move(draw));
  }
  return out;
}

}  // namespace gagnar
