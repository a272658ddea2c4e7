// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "gagnar/csv.hpp"
#include "gagnar/errors.hpp"
#include "gagnar/graph.hpp"
#include "gagnar/model.hpp"
#include "gagnar/rng.hpp"

namespace gagnar {

/// Symmetric Bernoulli block graph: labels uniform over 0..k-1, edge
/// probability p_in within a block and p_out across blocks.
inline std::pair<AdjacencyMatrix, std::vector<int>> generate_sbm(int n, int k, double p_in,
                                                                 double p_out, Rng& rng) {
  if (n <= 0 || k <= 0) throw ValidationError("sbm needs positive n and k");
  if (!(p_in >= 0.0 && p_in <= 1.0) || !(p_out >= 0.0 && p_out <= 1.0))
    throw ValidationError("sbm edge probabilities must lie in [0, 1]");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    labels[static_cast<std::size_t>(i)] =
        std::min(k - 1, static_cast<int>(rng.uniform() * k));
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double p = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]
                           ? p_in
                           : p_out;
      if (rng.uniform() < p) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }
  return {AdjacencyMatrix(n, edges), std::move(labels)};
}

/// Default edge rates 20/N within and 2/N across blocks.
inline std::pair<AdjacencyMatrix, std::vector<int>> generate_sbm(int n, int k, Rng& rng) {
  return generate_sbm(n, k, 20.0 / n, 2.0 / n, rng);
}

/// Rectangular grid with 4-neighbour undirected edges; a synthetic stand-in
/// for a bordering-regions graph.
inline AdjacencyMatrix generate_lattice(int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw ValidationError("lattice needs positive dimensions");
  const int n = rows * cols;
  std::vector<std::pair<int, int>> edges;
  const auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) {
        edges.emplace_back(id(r, c), id(r, c + 1));
        edges.emplace_back(id(r, c + 1), id(r, c));
      }
      if (r + 1 < rows) {
        edges.emplace_back(id(r, c), id(r + 1, c));
        edges.emplace_back(id(r + 1, c), id(r, c));
      }
    }
  }
  return AdjacencyMatrix(n, edges);
}

/// Synthetic common-ownership graph: every node draws two distinct holders
/// from a pool; nodes sharing a holder are connected.
inline AdjacencyMatrix generate_shareholder_graph(int n, int n_holders, Rng& rng) {
  if (n <= 0 || n_holders < 2)
    throw ValidationError("shareholder graph needs n > 0 and at least 2 holders");
  std::vector<std::pair<int, int>> owner(static_cast<std::size_t>(n));
  for (auto& [a, b] : owner) {
    a = std::min(n_holders - 1, static_cast<int>(rng.uniform() * n_holders));
    do {
      b = std::min(n_holders - 1, static_cast<int>(rng.uniform() * n_holders));
    } while (b == a);
  }
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& [a1, b1] = owner[static_cast<std::size_t>(i)];
      const auto& [a2, b2] = owner[static_cast<std::size_t>(j)];
      if (a1 == a2 || a1 == b2 || b1 == a2 || b1 == b2) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
    }
  }
  return AdjacencyMatrix(n, edges);
}

/// Lloyd's k-means on the adjacency rows (k-means++ seeding), used to
/// assign block labels on fixed graphs. Labels come back in
/// first-appearance order.
inline std::vector<int> kmeans_row_labels(const AdjacencyMatrix& adj, int k, Rng& rng,
                                          int max_iters = 100) {
  const int n = adj.size();
  if (k <= 0 || k > n) throw ValidationError("kmeans needs 0 < k <= n");
  const Eigen::MatrixXd rows = adj.dense().cast<double>();
  Eigen::MatrixXd centroids(k, n);

  // k-means++ seeding
  std::vector<double> d2(static_cast<std::size_t>(n),
                         std::numeric_limits<double>::infinity());
  int first = std::min(n - 1, static_cast<int>(rng.uniform() * n));
  centroids.row(0) = rows.row(first);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double d = (rows.row(i) - centroids.row(c - 1)).squaredNorm();
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], d);
      total += d2[static_cast<std::size_t>(i)];
    }
    int pick = n - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double cum = 0.0;
      for (int i = 0; i < n; ++i) {
        cum += d2[static_cast<std::size_t>(i)];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::min(n - 1, static_cast<int>(rng.uniform() * n));
    }
    centroids.row(c) = rows.row(pick);
  }

  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (rows.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (rows.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // recompute centroids; an empty cluster steals the point farthest
    // from its current centroid
    for (int c = 0; c < k; ++c) {
      Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(n);
      int count = 0;
      for (int i = 0; i < n; ++i) {
        if (labels[static_cast<std::size_t>(i)] == c) {
          mean += rows.row(i);
          ++count;
        }
      }
      if (count > 0) {
        centroids.row(c) = mean / count;
      } else {
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d =
              (rows.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        labels[static_cast<std::size_t>(far)] = c;
        centroids.row(c) = rows.row(far);
        changed = true;
      }
    }
    if (!changed) break;
  }

  // canonical first-appearance labels
  std::vector<int> remap(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int& zi : labels) {
    if (remap[static_cast<std::size_t>(zi)] == -1) remap[static_cast<std::size_t>(zi)] = next++;
    zi = remap[static_cast<std::size_t>(zi)];
  }
  return labels;
}

struct GroupTruth {
  double sigma2 = 1.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  Eigen::VectorXd gamma;

  GroupParams as_params() const {
    GroupParams gp;
    gp.theta.resize(3 + gamma.size());
    gp.theta[0] = beta0;
    gp.theta[1] = beta1;
    gp.theta[2] = beta2;
    gp.theta.tail(gamma.size()) = gamma;
    gp.sigma2 = sigma2;
    return gp;
  }
};

struct NetworkSpec {
  enum class Type { Sbm, Lattice, Shareholder, EdgeList };
  Type type = Type::Sbm;
  int k = 1;
  double p_in = -1.0;   // negative means 20/N
  double p_out = -1.0;  // negative means 2/N
  int rows = 0;
  int cols = 0;
  int holders = 0;
  std::string path;
  std::string labels_path;
  int id_base = 0;
};

struct ScenarioSpec {
  std::string name;
  int n = 0;
  int t_len = 0;
  int replicates = 1;
  std::uint64_t seed = 0;
  NetworkSpec network;
  std::vector<GroupTruth> groups;

  int k() const { return static_cast<int>(groups.size()); }
  int p() const { return groups.empty() ? 0 : static_cast<int>(groups.front().gamma.size()); }

  void validate() const {
    if (n <= 0) throw ValidationError("scenario: n must be positive");
    if (t_len < 2) throw ValidationError("scenario: t must be at least 2");
    if (replicates <= 0) throw ValidationError("scenario: replicates must be positive");
    if (groups.empty()) throw ValidationError("scenario: needs at least one group");
    for (const auto& g : groups) {
      if (!(g.sigma2 >= 0.0)) throw ValidationError("scenario: sigma2 must be nonnegative");
      if (g.gamma.size() != groups.front().gamma.size())
        throw ValidationError("scenario: gamma lengths differ across groups");
    }
    if (network.k != k())
      throw ValidationError("scenario: network k must match the group count");
  }

  std::vector<GroupParams> truth_params() const {
    std::vector<GroupParams> out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(g.as_params());
    return out;
  }
};

/// Grouped NAR recursion seeded at Y_0 = 0; covariates drawn once per node.
inline PanelData simulate_panel(const ScenarioSpec& spec, const AdjacencyMatrix& adj,
                                const std::vector<int>& labels, Rng& rng) {
  spec.validate();
  if (adj.size() != spec.n) throw ValidationError("adjacency size mismatch");
  if (static_cast<int>(labels.size()) != spec.n)
    throw ValidationError("label count mismatch");
  for (int zi : labels)
    if (zi < 0 || zi >= spec.k()) throw ValidationError("label out of range");

  const int n = spec.n;
  const int p = spec.p();
  PanelData panel;
  panel.V.resize(n, p);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < p; ++c) panel.V(i, c) = rng.normal();

  const Eigen::MatrixXd row_norm = row_normalized_adjacency(adj);
  panel.Y.resize(n, spec.t_len);
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < spec.t_len; ++t) {
    const Eigen::VectorXd net = row_norm * prev;
    for (int i = 0; i < n; ++i) {
      const GroupTruth& g = spec.groups[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
      double mu = g.beta0 + g.beta1 * net[i] + g.beta2 * prev[i];
      for (int c = 0; c < p; ++c) mu += g.gamma[c] * panel.V(i, c);
      panel.Y(i, t) = mu + std::sqrt(g.sigma2) * rng.normal();
    }
    prev = panel.Y.col(t);
  }
  return panel;
}

struct SimulatedDataset {
  AdjacencyMatrix adj;
  std::vector<int> labels;
  PanelData panel;
};

namespace detail {
// Fixed-graph scenarios draw the graph and labels from a dedicated stream
// so every replicate sees the same network.
inline constexpr std::uint64_t kGraphStream = 0x6772617068ull;
}  // namespace detail

/// Build replicate `r` (0-based) of a scenario. SBM networks are redrawn
/// per replicate; lattice/shareholder/external networks are fixed.
inline SimulatedDataset simulate_replicate(const ScenarioSpec& spec, int r,
                                           const std::filesystem::path& base_dir = {}) {
  spec.validate();
  if (r < 0 || r >= spec.replicates) throw ValidationError("replicate index out of range");
  Rng rng(spec.seed, static_cast<std::uint64_t>(r));

  auto fixed_network = [&]() -> std::pair<AdjacencyMatrix, std::vector<int>> {
    Rng graph_rng(spec.seed, detail::kGraphStream);
    switch (spec.network.type) {
      case NetworkSpec::Type::Lattice: {
        auto adj = generate_lattice(spec.network.rows, spec.network.cols);
        auto labels = kmeans_row_labels(adj, spec.network.k, graph_rng);
        return {std::move(adj), std::move(labels)};
      }
      case NetworkSpec::Type::Shareholder: {
        auto adj = generate_shareholder_graph(spec.n, spec.network.holders, graph_rng);
        auto labels = kmeans_row_labels(adj, spec.network.k, graph_rng);
        return {std::move(adj), std::move(labels)};
      }
      case NetworkSpec::Type::EdgeList: {
        auto path = std::filesystem::path(spec.network.path);
        if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
        auto adj = AdjacencyMatrix::from_edge_csv(path, spec.n, spec.network.id_base);
        std::vector<int> labels;
        if (!spec.network.labels_path.empty()) {
          auto lpath = std::filesystem::path(spec.network.labels_path);
          if (lpath.is_relative() && !base_dir.empty()) lpath = base_dir / lpath;
          labels = read_labels_csv(lpath);
        } else {
          labels = kmeans_row_labels(adj, spec.network.k, graph_rng);
        }
        return {std::move(adj), std::move(labels)};
      }
      default:
        throw ValidationError("unexpected network type");
    }
  };

  if (spec.network.type == NetworkSpec::Type::Sbm) {
    const double p_in = spec.network.p_in >= 0.0 ? spec.network.p_in : 20.0 / spec.n;
    const double p_out = spec.network.p_out >= 0.0 ? spec.network.p_out : 2.0 / spec.n;
    auto [adj, labels] = generate_sbm(spec.n, spec.network.k, p_in, p_out, rng);
    auto panel = simulate_panel(spec, adj, labels, rng);
    return {std::move(adj), std::move(labels), std::move(panel)};
  }
  auto [adj, labels] = fixed_network();
  auto panel = simulate_panel(spec, adj, labels, rng);
  return {std::move(adj), std::move(labels), std::move(panel)};
}

inline ScenarioSpec scenario_from_json(const nlohmann::json& j) {
  ScenarioSpec spec;
  try {
    spec.name = j.value("name", std::string("scenario"));
    spec.n = j.at("n").get<int>();
    spec.t_len = j.at("t").get<int>();
    spec.replicates = j.value("replicates", 1);
    if (!j.contains("seed")) throw ValidationError("scenario: seed is required");
    spec.seed = j.at("seed").get<std::uint64_t>();

    const auto& net = j.at("network");
    const std::string type = net.at("type").get<std::string>();
    if (type == "sbm") {
      spec.network.type = NetworkSpec::Type::Sbm;
      spec.network.p_in = net.value("p_in", -1.0);
      spec.network.p_out = net.value("p_out", -1.0);
    } else if (type == "lattice") {
      spec.network.type = NetworkSpec::Type::Lattice;
      spec.network.rows = net.at("rows").get<int>();
      spec.network.cols = net.at("cols").get<int>();
      if (spec.network.rows * spec.network.cols != spec.n)
        throw ValidationError("scenario: lattice rows*cols must equal n");
    } else if (type == "shareholder") {
      spec.network.type = NetworkSpec::Type::Shareholder;
      spec.network.holders = net.at("holders").get<int>();
    } else if (type == "edge_list") {
      spec.network.type = NetworkSpec::Type::EdgeList;
      spec.network.path = net.at("path").get<std::string>();
      spec.network.labels_path = net.value("labels_path", std::string());
      spec.network.id_base = net.value("id_base", 0);
    } else {
      throw ValidationError("scenario: unknown network type '" + type + "'");
    }
    spec.network.k = net.value("k", 0);

    for (const auto& gj : j.at("groups")) {
      GroupTruth g;
      g.sigma2 = gj.at("sigma2").get<double>();
      g.beta0 = gj.at("beta0").get<double>();
      g.beta1 = gj.at("beta1").get<double>();
      g.beta2 = gj.at("beta2").get<double>();
      const auto& gamma = gj.at("gamma");
      g.gamma.resize(static_cast<Eigen::Index>(gamma.size()));
      for (std::size_t c = 0; c < gamma.size(); ++c)
        g.gamma[static_cast<Eigen::Index>(c)] = gamma[c].get<double>();
      spec.groups.push_back(std::move(g));
    }
    if (spec.network.k == 0) spec.network.k = spec.k();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline ScenarioSpec load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("scenario '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace gagnar
