// Apache License, Version 2.0, refer to LICENSE.txt

#include <catch2/catch.hpp>
#include <cmath>
#include <filesystem>
#include <set>
#include <vector>

#include "gagnar/simgen.hpp"

using namespace gagnar;

TEST_CASE("sbm edge probabilities", "[simgen]") {
  SECTION("zero probabilities give an empty graph") {
    Rng rng(71);
    const auto [adj, labels] = generate_sbm(20, 3, 0.0, 0.0, rng);
    for (int i = 0; i < 20; ++i) REQUIRE(adj.out_degree(i) == 0);
  }
  SECTION("unit probabilities give the complete graph") {
    Rng rng(72);
    const auto [adj, labels] = generate_sbm(10, 2, 1.0, 1.0, rng);
    for (int i = 0; i < 10; ++i) REQUIRE(adj.out_degree(i) == 9);
  }
  SECTION("default rates hit the binomial moments") {
    Rng rng(73);
    const auto [adj, labels] = generate_sbm(100, 3, rng);  // p_in = .2, p_out = .02
    const Eigen::MatrixXi a = adj.dense();
    REQUIRE(a == a.transpose().eval());
    double within_edges = 0.0, within_pairs = 0.0;
    double between_edges = 0.0, between_pairs = 0.0;
    for (int i = 0; i < 100; ++i)
      for (int j = i + 1; j < 100; ++j) {
        if (labels[i] == labels[j]) {
          within_pairs += 1.0;
          within_edges += a(i, j);
        } else {
          between_pairs += 1.0;
          between_edges += a(i, j);
        }
      }
    const double se_in = std::sqrt(0.2 * 0.8 / within_pairs);
    const double se_out = std::sqrt(0.02 * 0.98 / between_pairs);
    REQUIRE(within_edges / within_pairs == Approx(0.2).margin(3.0 * se_in));
    REQUIRE(between_edges / between_pairs == Approx(0.02).margin(3.0 * se_out));
    const std::set<int> distinct(labels.begin(), labels.end());
    REQUIRE(distinct.size() == 3);
  }
  SECTION("invalid probabilities rejected") {
    Rng rng(74);
    REQUIRE_THROWS_AS(generate_sbm(10, 2, 1.2, 0.1, rng), ValidationError);
    REQUIRE_THROWS_AS(generate_sbm(10, 2, 0.1, -0.2, rng), ValidationError);
  }
}

TEST_CASE("lattice and shareholder surrogates", "[simgen]") {
  SECTION("lattice degrees") {
    const AdjacencyMatrix adj = generate_lattice(3, 4);
    REQUIRE(adj.size() == 12);
    REQUIRE(adj.out_degree(0) == 2);   // corner
    REQUIRE(adj.out_degree(1) == 3);   // edge
    REQUIRE(adj.out_degree(5) == 4);   // interior
    const Eigen::MatrixXi a = adj.dense();
    REQUIRE(a == a.transpose().eval());
  }
  SECTION("shareholder graph connects co-owned nodes symmetrically") {
    Rng rng(75);
    const AdjacencyMatrix adj = generate_shareholder_graph(40, 12, rng);
    const Eigen::MatrixXi a = adj.dense();
    REQUIRE(a == a.transpose().eval());
    REQUIRE(a.diagonal().sum() == 0);
    int edges = 0;
    for (int i = 0; i < 40; ++i) edges += adj.out_degree(i);
    REQUIRE(edges > 0);
  }
}

TEST_CASE("kmeans on adjacency rows recovers planted cliques", "[simgen]") {
  // two disjoint cliques of 6
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      edges.emplace_back(i, j);
      edges.emplace_back(j, i);
      edges.emplace_back(6 + i, 6 + j);
      edges.emplace_back(6 + j, 6 + i);
    }
  const AdjacencyMatrix adj(12, edges);
  Rng rng(76);
  const std::vector<int> labels = kmeans_row_labels(adj, 2, rng);
  REQUIRE(labels[0] == 0);  // first-appearance canonical form
  for (int i = 1; i < 6; ++i) REQUIRE(labels[i] == labels[0]);
  for (int i = 7; i < 12; ++i) REQUIRE(labels[i] == labels[6]);
  REQUIRE(labels[6] != labels[0]);
}

TEST_CASE("panel simulation", "[simgen]") {
  ScenarioSpec spec;
  spec.name = "unit";
  spec.n = 4;
  spec.t_len = 6;
  spec.replicates = 1;
  spec.seed = 123;
  spec.network.type = NetworkSpec::Type::Sbm;
  spec.network.k = 1;

  AdjacencyMatrix adj(4, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {2, 3}, {3, 2}});
  const std::vector<int> labels = {0, 0, 0, 0};

  SECTION("zero coefficients and zero noise give a zero panel") {
    GroupTruth g;
    g.sigma2 = 0.0;
    g.gamma = Eigen::VectorXd::Zero(2);
    spec.groups = {g};
    Rng rng(1);
    const PanelData panel = simulate_panel(spec, adj, labels, rng);
    REQUIRE(panel.Y.isZero(0.0));
  }
  SECTION("static regression without dynamics is constant over time") {
    GroupTruth g;
    g.sigma2 = 0.0;
    g.beta0 = 2.0;
    g.beta1 = 0.0;
    g.beta2 = 0.0;
    g.gamma = Eigen::VectorXd::Constant(2, 0.5);
    spec.groups = {g};
    Rng rng(2);
    const PanelData panel = simulate_panel(spec, adj, labels, rng);
    for (int i = 0; i < 4; ++i) {
      const double expected = 2.0 + 0.5 * (panel.V(i, 0) + panel.V(i, 1));
      for (int t = 0; t < 6; ++t) REQUIRE(panel.Y(i, t) == Approx(expected).epsilon(1e-14));
    }
  }
  SECTION("pure AR(1) matches the stationary variance") {
    ScenarioSpec ar;
    ar.name = "ar1";
    ar.n = 400;
    ar.t_len = 60;
    ar.replicates = 1;
    ar.seed = 3;
    ar.network.type = NetworkSpec::Type::Sbm;
    ar.network.k = 1;
    GroupTruth g;
    g.sigma2 = 1.0;
    g.beta2 = 0.5;
    g.gamma = Eigen::VectorXd::Zero(0);
    ar.groups = {g};
    const AdjacencyMatrix isolated(400, {});
    const std::vector<int> all_zero(400, 0);
    Rng rng(4);
    const PanelData panel = simulate_panel(ar, isolated, all_zero, rng);
    // Var(Y_T) -> 1 / (1 - 0.25)
    const double var = panel.Y.col(59).squaredNorm() / 400.0 -
                       std::pow(panel.Y.col(59).mean(), 2);
    REQUIRE(var == Approx(1.0 / 0.75).epsilon(0.10));
  }
  SECTION("deterministic given the seed") {
    GroupTruth g;
    g.sigma2 = 1.5;
    g.beta0 = 1.0;
    g.beta1 = 0.2;
    g.beta2 = 0.3;
    g.gamma = Eigen::VectorXd::Zero(1);
    spec.groups = {g};
    Rng rng_a(9), rng_b(9);
    const PanelData pa = simulate_panel(spec, adj, labels, rng_a);
    const PanelData pb = simulate_panel(spec, adj, labels, rng_b);
    REQUIRE(pa.Y == pb.Y);
    REQUIRE(pa.V == pb.V);
  }
  SECTION("stable coefficients keep trajectories bounded over long horizons") {
    ScenarioSpec longrun = spec;
    longrun.t_len = 200;
    GroupTruth g;
    g.sigma2 = 1.0;
    g.beta0 = 0.5;
    g.beta1 = 0.4;
    g.beta2 = 0.4;  // |b1| + |b2| < 1
    g.gamma = Eigen::VectorXd::Zero(0);
    longrun.groups = {g};
    Rng rng(5);
    const PanelData panel = simulate_panel(longrun, adj, labels, rng);
    REQUIRE(panel.Y.cwiseAbs().maxCoeff() < 50.0);
    REQUIRE(panel.Y.rightCols(50).squaredNorm() / (4 * 50) < 100.0);
  }
  SECTION("label range validated") {
    GroupTruth g;
    g.sigma2 = 1.0;
    g.gamma = Eigen::VectorXd::Zero(0);
    spec.groups = {g};
    Rng rng(6);
    REQUIRE_THROWS_AS(simulate_panel(spec, adj, {0, 0, 1, 0}, rng), ValidationError);
  }
}

TEST_CASE("replicate generation", "[simgen]") {
  ScenarioSpec spec;
  spec.name = "rep";
  spec.n = 12;
  spec.t_len = 5;
  spec.replicates = 3;
  spec.seed = 31;
  spec.network.type = NetworkSpec::Type::Lattice;
  spec.network.rows = 3;
  spec.network.cols = 4;
  spec.network.k = 2;
  GroupTruth a, b;
  a.sigma2 = 1.0;
  a.beta0 = 1.0;
  a.gamma = Eigen::VectorXd::Zero(0);
  b = a;
  b.beta0 = -1.0;
  spec.groups = {a, b};

  const auto r0 = simulate_replicate(spec, 0);
  const auto r0_again = simulate_replicate(spec, 0);
  const auto r1 = simulate_replicate(spec, 1);
  REQUIRE(r0.panel.Y == r0_again.panel.Y);
  REQUIRE(r0.labels == r0_again.labels);
  REQUIRE(r0.panel.Y != r1.panel.Y);
  // fixed graph and labels across replicates for lattice scenarios
  REQUIRE(r0.adj.dense() == r1.adj.dense());
  REQUIRE(r0.labels == r1.labels);
  REQUIRE_THROWS_AS(simulate_replicate(spec, 3), ValidationError);
}

TEST_CASE("scenario fixtures mirror the study design", "[simgen]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(GAGNAR_SOURCE_DIR) / "scenarios";

  const ScenarioSpec ex1 = load_scenario(dir / "example1_scenario1.json");
  REQUIRE(ex1.n == 100);
  REQUIRE(ex1.t_len == 20);
  REQUIRE(ex1.k() == 3);
  REQUIRE(ex1.p() == 3);
  REQUIRE(ex1.network.type == NetworkSpec::Type::Sbm);
  REQUIRE(ex1.groups[0].sigma2 == 2.0);
  REQUIRE(ex1.groups[0].beta0 == 5.0);
  REQUIRE(ex1.groups[0].beta1 == 0.2);
  REQUIRE(ex1.groups[0].beta2 == 0.1);
  REQUIRE(ex1.groups[0].gamma == Eigen::Vector3d(0.5, 0.7, 1.0));
  REQUIRE(ex1.groups[1].beta0 == -5.0);
  REQUIRE(ex1.groups[2].sigma2 == 3.0);

  const ScenarioSpec ex2 = load_scenario(dir / "example2_scenario1.json");
  REQUIRE(ex2.k() == 5);
  REQUIRE(ex2.network.type == NetworkSpec::Type::Lattice);
  REQUIRE(ex2.groups[4].gamma == Eigen::Vector3d(0.8, 0.5, -2.0));

  const ScenarioSpec ex3 = load_scenario(dir / "example3_scenario2.json");
  REQUIRE(ex3.k() == 6);
  REQUIRE(ex3.groups[3].sigma2 == 1.5);
  REQUIRE(ex3.groups[3].beta0 == 4.5);

  // all six fixtures parse
  for (const char* name :
       {"example1_scenario1.json", "example1_scenario2.json", "example2_scenario1.json",
        "example2_scenario2.json", "example3_scenario1.json", "example3_scenario2.json"})
    REQUIRE_NOTHROW(load_scenario(dir / name));
}

TEST_CASE("external edge-list scenarios", "[simgen]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "gagnar_simgen_ext";
  fs::create_directories(dir);
  write_edge_csv(dir / "net.csv", {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {3, 4}, {4, 3},
                                   {2, 3}, {3, 2}, {4, 5}, {5, 4}});
  write_labels_csv(dir / "z.csv", {0, 0, 0, 1, 1, 1});
  std::ofstream(dir / "scenario.json") << R"({
    "name": "ext", "n": 6, "t": 5, "replicates": 2, "seed": 10,
    "network": {"type": "edge_list", "path": "net.csv", "labels_path": "z.csv", "k": 2},
    "groups": [
      {"sigma2": 1.0, "beta0": 1.0, "beta1": 0.1, "beta2": 0.1, "gamma": []},
      {"sigma2": 1.0, "beta0": -1.0, "beta1": 0.1, "beta2": 0.1, "gamma": []}
    ]})";
  const ScenarioSpec spec = load_scenario(dir / "scenario.json");
  REQUIRE(spec.network.type == NetworkSpec::Type::EdgeList);
  const auto r0 = simulate_replicate(spec, 0, dir);
  REQUIRE(r0.adj.size() == 6);
  REQUIRE(r0.adj.has_edge(0, 1));
  REQUIRE(r0.labels == std::vector<int>{0, 0, 0, 1, 1, 1});
  const auto r1 = simulate_replicate(spec, 1, dir);
  REQUIRE(r0.adj.dense() == r1.adj.dense());  // fixed graph across replicates

  SECTION("labels fall back to k-means when no label file is given") {
    std::ofstream(dir / "scenario2.json") << R"({
      "name": "ext2", "n": 6, "t": 5, "replicates": 1, "seed": 11,
      "network": {"type": "edge_list", "path": "net.csv", "k": 2},
      "groups": [
        {"sigma2": 1.0, "beta0": 1.0, "beta1": 0.1, "beta2": 0.1, "gamma": []},
        {"sigma2": 1.0, "beta0": -1.0, "beta1": 0.1, "beta2": 0.1, "gamma": []}
      ]})";
    const ScenarioSpec spec2 = load_scenario(dir / "scenario2.json");
    const auto data = simulate_replicate(spec2, 0, dir);
    const std::set<int> distinct(data.labels.begin(), data.labels.end());
    REQUIRE(distinct.size() == 2);
  }
}
