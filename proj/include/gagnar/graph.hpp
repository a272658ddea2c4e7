// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <utility>
#include <vector>

#include "gagnar/csv.hpp"
#include "gagnar/errors.hpp"

namespace gagnar {

/// Directed 0/1 adjacency with zero diagonal. The directed neighbour lists
/// feed the regression design; the symmetrized lists feed path distances.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix(int n_nodes, const std::vector<std::pair<int, int>>& edges)
      : n_(n_nodes), out_(static_cast<std::size_t>(n_nodes)),
        sym_(static_cast<std::size_t>(n_nodes)) {
    if (n_nodes <= 0) throw ValidationError("adjacency needs at least one node");
    for (const auto& [src, dst] : edges) {
      if (src < 0 || src >= n_ || dst < 0 || dst >= n_)
        throw ValidationError("edge endpoint out of range");
      if (src == dst) throw ValidationError("self-loop rejected");
      out_[static_cast<std::size_t>(src)].push_back(dst);
      sym_[static_cast<std::size_t>(src)].push_back(dst);
      sym_[static_cast<std::size_t>(dst)].push_back(src);
    }
    for (auto& v : out_) dedup(v);
    for (auto& v : sym_) dedup(v);
  }

  static AdjacencyMatrix from_dense(const Eigen::MatrixXi& a) {
    if (a.rows() != a.cols()) throw ValidationError("adjacency must be square");
    std::vector<std::pair<int, int>> edges;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        if (a(i, j) == 0) continue;
        if (a(i, j) != 1) throw ValidationError("adjacency entries must be 0 or 1");
        if (i == j) throw ValidationError("adjacency diagonal must be zero");
        edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
    return AdjacencyMatrix(static_cast<int>(a.rows()), edges);
  }

  static AdjacencyMatrix from_edge_csv(const std::filesystem::path& path, int n_nodes,
                                       int id_base = 0) {
    return AdjacencyMatrix(n_nodes, read_edge_csv(path, id_base));
  }

  int size() const { return n_; }
  int out_degree(int i) const { return static_cast<int>(out_[check(i)].size()); }
  const std::vector<int>& out_neighbors(int i) const { return out_[check(i)]; }
  /// Neighbours of the symmetrized graph (a_ij = 1 or a_ji = 1).
  const std::vector<int>& neighbors(int i) const { return sym_[check(i)]; }

  bool has_edge(int i, int j) const {
    const auto& row = out_[check(i)];
    return std::binary_search(row.begin(), row.end(), j);
  }

  Eigen::MatrixXi dense() const {
    Eigen::MatrixXi a = Eigen::MatrixXi::Zero(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j : out_[static_cast<std::size_t>(i)]) a(i, j) = 1;
    return a;
  }

  std::vector<std::pair<int, int>> edge_list() const {
    std::vector<std::pair<int, int>> edges;
    for (int i = 0; i < n_; ++i)
      for (int j : out_[static_cast<std::size_t>(i)]) edges.emplace_back(i, j);
    return edges;
  }

 private:
  static void dedup(std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  std::size_t check(int i) const {
    if (i < 0 || i >= n_) throw ValidationError("node index out of range");
    return static_cast<std::size_t>(i);
  }

  int n_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> sym_;
};

/// All-pairs shortest path lengths; kUnreachable marks disconnected pairs.
class DistanceMatrix {
 public:
  static constexpr int kUnreachable = -1;

  explicit DistanceMatrix(Eigen::MatrixXi d) : d_(std::move(d)) {}

  int size() const { return static_cast<int>(d_.rows()); }
  int operator()(int i, int j) const { return d_(i, j); }
  bool reachable(int i, int j) const { return d_(i, j) != kUnreachable; }
  const Eigen::MatrixXi& entries() const { return d_; }

 private:
  Eigen::MatrixXi d_;
};

/// Per-source BFS on the symmetrized graph.
inline DistanceMatrix shortest_path_distances(const AdjacencyMatrix& adj) {
  const int n = adj.size();
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, DistanceMatrix::kUnreachable);
  std::vector<int> queue;
  queue.reserve(static_cast<std::size_t>(n));
  for (int src = 0; src < n; ++src) {
    queue.clear();
    queue.push_back(src);
    d(src, src) = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int u = queue[head];
      const int du = d(src, u);
      for (int v : adj.neighbors(u)) {
        if (d(src, v) != DistanceMatrix::kUnreachable) continue;
        d(src, v) = du + 1;
        queue.push_back(v);
      }
    }
  }
  return DistanceMatrix(std::move(d));
}

/// Closeness weights: 1 for distance <= 1, exp(-d*h) for finite d > 1,
/// 0 for unreachable pairs (for every h, including h = 0). Stored dense up
/// to `dense_threshold` nodes, as compressed nonzero rows above it; the
/// diagonal is never part of any sum.
class WeightMatrix {
 public:
  struct Entry {
    int j;
    double w;
  };

  WeightMatrix(const DistanceMatrix& dist, double h, int dense_threshold = 4096)
      : h_(h), n_(dist.size()) {
    if (!(h >= 0.0)) throw ValidationError("smoothing parameter h must be nonnegative");
    dense_storage_ = n_ <= dense_threshold;
    if (dense_storage_) dense_ = Eigen::MatrixXd::Zero(n_, n_);
    rows_.resize(static_cast<std::size_t>(n_));
    row_sums_.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double w = weight_of(dist(i, j), h);
        if (dense_storage_) dense_(i, j) = w;
        if (i == j) continue;
        if (w > 0.0) {
          if (!dense_storage_) rows_[static_cast<std::size_t>(i)].push_back({j, w});
          row_sums_[static_cast<std::size_t>(i)] += w;
        }
      }
    }
  }

  int size() const { return n_; }
  double smoothing() const { return h_; }
  bool dense_storage() const { return dense_storage_; }

  double operator()(int i, int j) const {
    if (dense_storage_) return dense_(i, j);
    if (i == j) return 1.0;  // d_ii = 0
    const auto& row = rows_[static_cast<std::size_t>(i)];
    auto it = std::lower_bound(row.begin(), row.end(), j,
                               [](const Entry& e, int jj) { return e.j < jj; });
    return (it != row.end() && it->j == j) ? it->w : 0.0;
  }

  /// Sum of w_ij over j != i.
  double row_sum(int i) const { return row_sums_[static_cast<std::size_t>(i)]; }

  /// Visit (j, w_ij) for j != i with w_ij > 0, in ascending j.
  template <typename F>
  void for_each_offdiag(int i, F&& f) const {
    if (dense_storage_) {
      for (int j = 0; j < n_; ++j) {
        if (j == i) continue;
        const double w = dense_(i, j);
        if (w > 0.0) f(j, w);
      }
    } else {
      for (const Entry& e : rows_[static_cast<std::size_t>(i)]) f(e.j, e.w);
    }
  }

 private:
  static double weight_of(int d, double h) {
    if (d == DistanceMatrix::kUnreachable) return 0.0;
    if (d <= 1) return 1.0;
    return std::exp(-static_cast<double>(d) * h);
  }

  double h_;
  int n_;
  bool dense_storage_;
  Eigen::MatrixXd dense_;
  std::vector<std::vector<Entry>> rows_;
  std::vector<double> row_sums_;
};

inline WeightMatrix build_weights(const DistanceMatrix& dist, double h,
                                  int dense_threshold = 4096) {
  return WeightMatrix(dist, h, dense_threshold);
}

/// Entry (i, j) = a_ij / n_i; rows of isolated nodes stay zero.
inline Eigen::MatrixXd row_normalized_adjacency(const AdjacencyMatrix& adj) {
  const int n = adj.size();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const int deg = adj.out_degree(i);
    if (deg == 0) continue;
    const double inv = 1.0 / static_cast<double>(deg);
    for (int j : adj.out_neighbors(i)) w(i, j) = inv;
  }
  return w;
}

}  // namespace gagnar
