// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gagnar/errors.hpp"
#include "gagnar/model.hpp"
#include "gagnar/sampler.hpp"

namespace gagnar {

/// Fit-oriented run configuration. A run is a pure function of
/// (input files, config, seed); every field has an explicit default that
/// `--print-config` dumps, and CLI flags override file values.
struct RunConfig {
  // paths
  std::string edges;
  std::string responses;
  std::string covariates;  // optional; empty means p = 0
  std::string out_dir = ".";
  // data layout
  int id_base = 0;
  bool csv_header = false;
  // hyperparameters
  std::vector<double> tau0 = {0.0};  // scalar fill unless p+3 values given
  double sigma0_scale = 100.0;
  double a0 = 0.01;
  double b0 = 0.01;
  double alpha = 1.0;
  // sampler
  int total_iters = 1500;
  int burn_in = 500;
  bool has_seed = false;
  std::uint64_t seed = 0;
  bool shuffle_order = false;
  // smoothing
  double h = 0.0;
  std::vector<double> h_grid;  // empty means default grid 0, 0.2, ..., 5.0
  // prediction / reporting
  int train_end = 0;     // 0 means no split
  double hpd_mass = 0.0;  // 0 means no HPD output

  static std::vector<double> default_h_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 25; ++i) grid.push_back(0.2 * i);
    return grid;
  }

  NIGHyper hyper(int p) const {
    const int dim = p + 3;
    NIGHyper hy;
    if (static_cast<int>(tau0.size()) == dim) {
      hy.tau0 = Eigen::Map<const Eigen::VectorXd>(tau0.data(), dim);
    } else if (tau0.size() == 1) {
      hy.tau0 = Eigen::VectorXd::Constant(dim, tau0.front());
    } else {
      throw ValidationError("tau0 must be a scalar fill or have exactly p+3 entries");
    }
    hy.Sigma0 = sigma0_scale * Eigen::MatrixXd::Identity(dim, dim);
    hy.a0 = a0;
    hy.b0 = b0;
    hy.alpha = alpha;
    hy.validate();
    return hy;
  }

  SamplerConfig sampler_config(int p) const {
    if (!has_seed) throw ValidationError("a seed is required (set sampler.seed or --seed)");
    SamplerConfig sc;
    sc.total_iters = total_iters;
    sc.burn_in = burn_in;
    sc.rng_seed = seed;
    sc.hyper = hyper(p);
    sc.h = h;
    sc.shuffle_order = shuffle_order;
    sc.validate();
    return sc;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["paths"] = {{"edges", edges},
                  {"responses", responses},
                  {"covariates", covariates},
                  {"out_dir", out_dir}};
    j["data"] = {{"id_base", id_base}, {"csv_header", csv_header}};
    j["hyper"] = {{"tau0", tau0.size() == 1 ? nlohmann::json(tau0.front()) : nlohmann::json(tau0)},
                  {"sigma0_scale", sigma0_scale},
                  {"a0", a0},
                  {"b0", b0},
                  {"alpha", alpha}};
    j["sampler"] = {{"total_iters", total_iters},
                    {"burn_in", burn_in},
                    {"seed", has_seed ? nlohmann::json(seed) : nlohmann::json()},
                    {"shuffle_order", shuffle_order}};
    j["h"] = h;
    j["h_grid"] = h_grid.empty() ? default_h_grid() : h_grid;
    j["train_end"] = train_end;
    j["hpd_mass"] = hpd_mass;
    return j;
  }

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
      if (j.contains("paths")) {
        const auto& p = j.at("paths");
        c.edges = p.value("edges", c.edges);
        c.responses = p.value("responses", c.responses);
        c.covariates = p.value("covariates", c.covariates);
        c.out_dir = p.value("out_dir", c.out_dir);
      }
      if (j.contains("data")) {
        const auto& d = j.at("data");
        c.id_base = d.value("id_base", c.id_base);
        c.csv_header = d.value("csv_header", c.csv_header);
      }
      if (j.contains("hyper")) {
        const auto& hy = j.at("hyper");
        if (hy.contains("tau0")) {
          if (hy.at("tau0").is_array())
            c.tau0 = hy.at("tau0").get<std::vector<double>>();
          else
            c.tau0 = {hy.at("tau0").get<double>()};
        }
        c.sigma0_scale = hy.value("sigma0_scale", c.sigma0_scale);
        c.a0 = hy.value("a0", c.a0);
        c.b0 = hy.value("b0", c.b0);
        c.alpha = hy.value("alpha", c.alpha);
      }
      if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        c.total_iters = s.value("total_iters", c.total_iters);
        c.burn_in = s.value("burn_in", c.burn_in);
        if (s.contains("seed") && !s.at("seed").is_null()) {
          c.seed = s.at("seed").get<std::uint64_t>();
          c.has_seed = true;
        }
        c.shuffle_order = s.value("shuffle_order", c.shuffle_order);
      }
      c.h = j.value("h", c.h);
      if (j.contains("h_grid")) c.h_grid = j.at("h_grid").get<std::vector<double>>();
      c.train_end = j.value("train_end", c.train_end);
      c.hpd_mass = j.value("hpd_mass", c.hpd_mass);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed config: ") + e.what());
    }
    return c;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path.string() + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw IoError("config '" + path.string() + "': " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace gagnar
