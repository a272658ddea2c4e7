// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "gagnar/model.hpp"
#include "gagnar/numeric.hpp"
#include "gagnar/parallel.hpp"
#include "gagnar/sampler.hpp"

namespace gagnar {

/// b_ij = I(z_i = z_j), as a dense 0/1 matrix.
inline Eigen::MatrixXd comembership(const std::vector<int>& z) {
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      b(i, j) = z[static_cast<std::size_t>(i)] == z[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  return b;
}

inline Eigen::MatrixXd mean_comembership(const ChainDraws& draws) {
  if (draws.draws.empty()) throw ValidationError("no recorded draws");
  const int n = draws.n;
  Eigen::MatrixXd bbar = Eigen::MatrixXd::Zero(n, n);
  for (const Draw& d : draws.draws) bbar += comembership(d.z);
  bbar /= static_cast<double>(draws.draws.size());
  return bbar;
}

/// Sum over nodes of the log Monte Carlo CPO estimate (harmonic mean of
/// per-node likelihoods across draws), computed with log-sum-exp.
inline double lpml(const ChainDraws& draws) {
  if (draws.draws.empty()) throw ValidationError("no recorded draws");
  const int n = draws.n;
  const int m = draws.recorded();
  const double log_m = std::log(static_cast<double>(m));
  double total = 0.0;
  Eigen::VectorXd neg(m);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < m; ++r) {
      const double ll = draws.draws[static_cast<std::size_t>(r)].node_loglik[i];
      if (!std::isfinite(ll)) throw NumericalError("non-finite log likelihood in draws");
      neg[r] = -ll;
    }
    total += -(log_sum_exp(neg) - log_m);
  }
  return total;
}

/// Point estimate selected by Dahl's least-squares criterion over the
/// recorded draws, plus chain-level summaries.
struct FitResult {
  std::vector<int> z_hat;
  int K_hat = 0;
  std::vector<GroupParams> params_hat;
  int m_b = 0;  // 1-based index into the recorded draws
  double lpml = 0.0;
  Eigen::MatrixXd mean_comembership;
  double h = 0.0;
};

inline FitResult dahl_select(const ChainDraws& draws) {
  if (draws.draws.empty()) throw ValidationError("no recorded draws");
  const int n = draws.n;
  const Eigen::MatrixXd bbar = mean_comembership(draws);
  int best = -1;
  double best_dist = 0.0;
  for (int m = 0; m < draws.recorded(); ++m) {
    const std::vector<int>& z = draws.draws[static_cast<std::size_t>(m)].z;
    double dist = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double b = z[static_cast<std::size_t>(i)] == z[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
        const double d = b - bbar(i, j);
        dist += d * d;
      }
    }
    if (best < 0 || dist < best_dist) {
      best = m;
      best_dist = dist;
    }
  }
  const Draw& chosen = draws.draws[static_cast<std::size_t>(best)];
  FitResult fit;
  fit.z_hat = chosen.z;
  fit.K_hat = chosen.K;
  fit.params_hat = chosen.params;
  fit.m_b = best + 1;
  fit.lpml = lpml(draws);
  fit.mean_comembership = bbar;
  fit.h = draws.h;
  return fit;
}

struct HTableRow {
  double h = 0.0;
  double lpml = 0.0;
};

struct HSelection {
  double h_best = 0.0;
  std::vector<HTableRow> table;
  ChainDraws best_draws;
  FitResult best_fit;
};

/// One chain per grid value (fanned out across workers, stream = grid
/// index), scored by LPML; ties resolve to the smallest h.
inline HSelection select_h(const PanelData& panel, const AdjacencyMatrix& adj,
                           std::span<const double> h_grid, const SamplerConfig& base) {
  if (h_grid.empty()) throw ValidationError("h grid is empty");
  std::vector<ChainDraws> all(h_grid.size());
  std::vector<double> scores(h_grid.size());
  parallel_for(static_cast<int>(h_grid.size()), [&](int idx) {
    SamplerConfig config = base;
    config.h = h_grid[static_cast<std::size_t>(idx)];
    config.rng_stream = base.rng_stream + static_cast<std::uint64_t>(idx);
    try {
      all[static_cast<std::size_t>(idx)] = run_chain(config, panel, adj);
      scores[static_cast<std::size_t>(idx)] = lpml(all[static_cast<std::size_t>(idx)]);
    } catch (const Error& e) {
      throw NumericalError("h = " + std::to_string(config.h) + ": " + e.what());
    }
  });
  HSelection sel;
  sel.table.reserve(h_grid.size());
  std::size_t best = 0;
  for (std::size_t idx = 0; idx < h_grid.size(); ++idx) {
    sel.table.push_back({h_grid[idx], scores[idx]});
    const bool better = scores[idx] > scores[best] ||
                        (scores[idx] == scores[best] && h_grid[idx] < h_grid[best]);
    if (idx > 0 && better) best = idx;
  }
  sel.h_best = h_grid[best];
  sel.best_draws = std::move(all[best]);
  sel.best_fit = dahl_select(sel.best_draws);
  return sel;
}

/// Shortest contiguous interval over the sorted samples containing
/// ceil(mass * n) points.
inline std::pair<double, double> hpd_interval(std::vector<double> samples, double mass) {
  if (samples.empty()) throw ValidationError("hpd_interval: empty input");
  if (samples.size() < 2) throw ValidationError("hpd_interval needs at least 2 samples");
  if (!(mass > 0.0 && mass < 1.0)) throw ValidationError("mass must lie in (0, 1)");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  std::size_t window = static_cast<std::size_t>(
      std::ceil(mass * static_cast<double>(n) - 1e-9));
  window = std::min(std::max<std::size_t>(window, 1), n);
  std::size_t best = 0;
  double best_width = samples[window - 1] - samples[0];
  for (std::size_t lo = 1; lo + window <= n; ++lo) {
    const double width = samples[lo + window - 1] - samples[lo];
    if (width < best_width) {
      best_width = width;
      best = lo;
    }
  }
  return {samples[best], samples[best + window - 1]};
}

/// Posterior draws of node i's parameters: row m = (theta of z_i^(m), sigma2).
inline Eigen::MatrixXd node_param_draws(const ChainDraws& draws, int node) {
  if (draws.draws.empty()) throw ValidationError("no recorded draws");
  if (node < 0 || node >= draws.n) throw ValidationError("node index out of range");
  const int dim =
      static_cast<int>(draws.draws.front().params.front().theta.size());
  Eigen::MatrixXd out(draws.recorded(), dim + 1);
  for (int m = 0; m < draws.recorded(); ++m) {
    const Draw& d = draws.draws[static_cast<std::size_t>(m)];
    const GroupParams& gp =
        d.params[static_cast<std::size_t>(d.z[static_cast<std::size_t>(node)])];
    out.row(m).head(dim) = gp.theta.transpose();
    out(m, dim) = gp.sigma2;
  }
  return out;
}

/// One-step-ahead plug-in predictions over times train_end+1 .. T using
/// observed lags; column c holds time train_end+1+c.
inline Eigen::MatrixXd predict(const FitResult& fit, const PanelData& panel,
                               const Eigen::MatrixXd& row_norm_adj, int train_end) {
  panel.validate();
  const int n = panel.n();
  const int t_len = panel.t_len();
  if (static_cast<int>(fit.z_hat.size()) != n)
    throw ValidationError("fit/panel node count mismatch");
  if (train_end < 2 || train_end > t_len - 1)
    throw ValidationError("train_end must lie in [2, T-1]");
  const int t_test = t_len - train_end;
  Eigen::MatrixXd y_hat(n, t_test);
  for (int c = 0; c < t_test; ++c) {
    const int lag_col = train_end + c - 1;  // 0-based column of time train_end+c
    const Eigen::VectorXd net = row_norm_adj * panel.Y.col(lag_col);
    for (int i = 0; i < n; ++i) {
      const GroupParams& gp =
          fit.params_hat[static_cast<std::size_t>(fit.z_hat[static_cast<std::size_t>(i)])];
      double mu = gp.theta[0] + gp.theta[1] * net[i] + gp.theta[2] * panel.Y(i, lag_col);
      for (int c2 = 0; c2 + 3 < gp.theta.size(); ++c2) mu += gp.theta[c2 + 3] * panel.V(i, c2);
      y_hat(i, c) = mu;
    }
  }
  return y_hat;
}

/// MSPE over the test window relative to the training-mean baseline.
inline double remspe(const Eigen::MatrixXd& y_test, const Eigen::MatrixXd& y_hat,
                     const Eigen::MatrixXd& y_train) {
  if (y_test.rows() != y_hat.rows() || y_test.cols() != y_hat.cols())
    throw ValidationError("prediction/test dimension mismatch");
  if (y_train.rows() != y_test.rows())
    throw ValidationError("train/test row mismatch");
  if (y_test.size() == 0 || y_train.cols() == 0)
    throw ValidationError("empty test or training window");
  const double mspe = (y_hat - y_test).squaredNorm() / static_cast<double>(y_test.size());
  const Eigen::VectorXd mu = y_train.rowwise().mean();
  double mspe0 = 0.0;
  for (Eigen::Index i = 0; i < y_test.rows(); ++i)
    for (Eigen::Index t = 0; t < y_test.cols(); ++t) {
      const double d = y_test(i, t) - mu[i];
      mspe0 += d * d;
    }
  mspe0 /= static_cast<double>(y_test.size());
  if (mspe0 == 0.0) throw NumericalError("baseline MSPE is zero (constant training responses)");
  return mspe / mspe0;
}

/// Hubert-Arabie adjusted Rand index via pair counting.
inline double adjusted_rand_index(std::span<const int> za, std::span<const int> zb) {
  if (za.size() != zb.size()) throw ValidationError("partition length mismatch");
  if (za.empty()) throw ValidationError("empty partitions");
  const auto relabel = [](std::span<const int> z) {
    std::vector<int> out(z.size());
    std::vector<int> seen;
    for (std::size_t i = 0; i < z.size(); ++i) {
      auto it = std::find(seen.begin(), seen.end(), z[i]);
      if (it == seen.end()) {
        seen.push_back(z[i]);
        out[i] = static_cast<int>(seen.size()) - 1;
      } else {
        out[i] = static_cast<int>(it - seen.begin());
      }
    }
    return out;
  };
  const std::vector<int> a = relabel(za);
  const std::vector<int> b = relabel(zb);
  const int ka = 1 + *std::max_element(a.begin(), a.end());
  const int kb = 1 + *std::max_element(b.begin(), b.end());
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(ka, kb);
  for (std::size_t i = 0; i < a.size(); ++i)
    table(a[i], b[i]) += 1.0;
  const auto choose2 = [](double x) { return 0.5 * x * (x - 1.0); };
  double sum_cells = 0.0;
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) sum_cells += choose2(table(i, j));
  double sum_a = 0.0, sum_b = 0.0;
  for (int i = 0; i < ka; ++i) sum_a += choose2(table.row(i).sum());
  for (int j = 0; j < kb; ++j) sum_b += choose2(table.col(j).sum());
  const double pairs = choose2(static_cast<double>(a.size()));
  const double expected = sum_a * sum_b / pairs;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  if (denom == 0.0) return a == b ? 1.0 : 0.0;  // both trivial partitions
  return (sum_cells - expected) / denom;
}

/// True node-level assignment and group parameters for one replicate.
struct NodeParamTruth {
  std::vector<int> z;
  std::vector<GroupParams> params;
};

struct ParamRmse {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  double gamma = 0.0;
  double sigma2 = 0.0;
};

/// Node-aligned root mean square errors pooled over replicates; the gamma
/// entry pools the squared Euclidean distance of the whole vector.
inline ParamRmse rmse_params(std::span<const FitResult> fits,
                             std::span<const NodeParamTruth> truths) {
  if (fits.size() != truths.size() || fits.empty())
    throw ValidationError("rmse_params needs matching nonempty fit/truth lists");
  double sq[5] = {0.0, 0.0, 0.0, 0.0, 0.0};
  double count = 0.0;
  for (std::size_t r = 0; r < fits.size(); ++r) {
    const FitResult& fit = fits[r];
    const NodeParamTruth& truth = truths[r];
    if (fit.z_hat.size() != truth.z.size())
      throw ValidationError("fit/truth node count mismatch");
    for (std::size_t i = 0; i < fit.z_hat.size(); ++i) {
      const GroupParams& est = fit.params_hat[static_cast<std::size_t>(fit.z_hat[i])];
      const GroupParams& tru = truth.params[static_cast<std::size_t>(truth.z[i])];
      if (est.theta.size() != tru.theta.size())
        throw ValidationError("fit/truth parameter dimension mismatch");
      for (int s = 0; s < 3; ++s) {
        const double d = est.theta[s] - tru.theta[s];
        sq[s] += d * d;
      }
      sq[3] += (est.theta.tail(est.theta.size() - 3) - tru.theta.tail(tru.theta.size() - 3))
                   .squaredNorm();
      const double ds = est.sigma2 - tru.sigma2;
      sq[4] += ds * ds;
      count += 1.0;
    }
  }
  ParamRmse out;
  out.beta0 = std::sqrt(sq[0] / count);
  out.beta1 = std::sqrt(sq[1] / count);
  out.beta2 = std::sqrt(sq[2] / count);
  out.gamma = std::sqrt(sq[3] / count);
  out.sigma2 = std::sqrt(sq[4] / count);
  return out;
}

}  // namespace gagnar
