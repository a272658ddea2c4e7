// Apache License, Version 2.0, refer to LICENSE.txt

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gagnar/csv.hpp"
#include "gagnar/draws_io.hpp"
#include "gagnar/errors.hpp"
#include "gagnar/graph.hpp"
#include "gagnar/model.hpp"
#include "gagnar/parallel.hpp"
#include "gagnar/posthoc.hpp"
#include "gagnar/run_config.hpp"
#include "gagnar/sampler.hpp"
#include "gagnar/simgen.hpp"

namespace fs = std::filesystem;
using gagnar::RunConfig;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitIo = 3;

struct LoadedData {
  gagnar::PanelData panel;
  gagnar::AdjacencyMatrix adj;
};

LoadedData load_data(const RunConfig& config) {
  if (config.responses.empty()) throw gagnar::ValidationError("responses path is required");
  if (config.edges.empty()) throw gagnar::ValidationError("edges path is required");
  gagnar::PanelData panel;
  panel.Y = gagnar::read_matrix_csv(config.responses, config.csv_header);
  if (!config.covariates.empty()) {
    panel.V = gagnar::read_matrix_csv(config.covariates, config.csv_header);
    if (panel.V.rows() != panel.Y.rows())
      throw gagnar::ValidationError("covariate rows do not match response rows");
  } else {
    panel.V.resize(panel.Y.rows(), 0);
  }
  panel.validate();
  auto adj = gagnar::AdjacencyMatrix::from_edge_csv(config.edges,
                                                    static_cast<int>(panel.Y.rows()),
                                                    config.id_base);
  return {std::move(panel), std::move(adj)};
}

std::string param_name(int idx, int dim) {
  if (idx == 0) return "beta0";
  if (idx == 1) return "beta1";
  if (idx == 2) return "beta2";
  if (idx < dim) return "gamma" + std::to_string(idx - 2);
  return "sigma2";
}

void write_summary(const fs::path& path, const gagnar::FitResult& fit) {
  std::ofstream out(path);
  if (!out) throw gagnar::IoError("cannot write '" + path.string() + "'");
  std::vector<int> sizes(static_cast<std::size_t>(fit.K_hat), 0);
  for (int zi : fit.z_hat) ++sizes[static_cast<std::size_t>(zi)];
  out << "K_hat: " << fit.K_hat << '\n';
  out << "m_b: " << fit.m_b << '\n';
  out << "lpml: " << gagnar::detail::format_sig(fit.lpml) << '\n';
  out << "h: " << gagnar::detail::format_sig(fit.h) << '\n';
  const int dim = fit.params_hat.empty()
                      ? 0
                      : static_cast<int>(fit.params_hat.front().theta.size());
  out << "group,size";
  for (int c = 0; c < dim; ++c) out << ',' << param_name(c, dim);
  out << ",sigma2\n";
  for (int k = 0; k < fit.K_hat; ++k) {
    out << (k + 1) << ',' << sizes[static_cast<std::size_t>(k)];
    const auto& gp = fit.params_hat[static_cast<std::size_t>(k)];
    for (int c = 0; c < dim; ++c)
      out << ',' << gagnar::detail::format_sig(gp.theta[c]);
    out << ',' << gagnar::detail::format_sig(gp.sigma2) << '\n';
  }
  if (!out) throw gagnar::IoError("write failed for '" + path.string() + "'");
}

void write_lpml_table(const fs::path& path, const std::vector<gagnar::HTableRow>& table) {
  std::ofstream out(path);
  if (!out) throw gagnar::IoError("cannot write '" + path.string() + "'");
  out << "h,lpml\n";
  for (const auto& row : table)
    out << gagnar::detail::format_sig(row.h) << ','
        << gagnar::detail::format_sig(row.lpml) << '\n';
  if (!out) throw gagnar::IoError("write failed for '" + path.string() + "'");
}

void write_hpd(const fs::path& path, const gagnar::ChainDraws& draws, double mass) {
  std::ofstream out(path);
  if (!out) throw gagnar::IoError("cannot write '" + path.string() + "'");
  out << "node,param,lo,hi\n";
  const int dim =
      static_cast<int>(draws.draws.front().params.front().theta.size());
  for (int i = 0; i < draws.n; ++i) {
    const Eigen::MatrixXd samples = gagnar::node_param_draws(draws, i);
    for (int c = 0; c <= dim; ++c) {
      std::vector<double> col(samples.col(c).data(), samples.col(c).data() + samples.rows());
      const auto [lo, hi] = gagnar::hpd_interval(std::move(col), mass);
      out << i << ',' << param_name(c, dim) << ','
          << gagnar::detail::format_sig(lo) << ',' << gagnar::detail::format_sig(hi)
          << '\n';
    }
  }
  if (!out) throw gagnar::IoError("write failed for '" + path.string() + "'");
}

void write_fit_artifacts(const fs::path& out_dir, const gagnar::ChainDraws& draws,
                         const gagnar::FitResult& fit, double hpd_mass) {
  fs::create_directories(out_dir);
  gagnar::write_draws(out_dir / "draws.jsonl", draws);
  gagnar::write_fit_json(out_dir / "fit.json", fit);
  write_summary(out_dir / "summary.txt", fit);
  gagnar::write_matrix_csv(out_dir / "comembership.csv", fit.mean_comembership, 6);
  if (hpd_mass > 0.0) write_hpd(out_dir / "hpd.csv", draws, hpd_mass);
}

int cmd_simulate(const std::string& scenario_path, const std::string& out_dir,
                 bool seed_set, std::uint64_t seed_override) {
  gagnar::ScenarioSpec spec = gagnar::load_scenario(scenario_path);
  if (seed_set) spec.seed = seed_override;
  const fs::path base = fs::path(scenario_path).parent_path();
  const fs::path out(out_dir);
  fs::create_directories(out);
  {
    std::ofstream manifest(out / "scenario.json");
    if (!manifest) throw gagnar::IoError("cannot write scenario manifest");
    nlohmann::json j;
    j["name"] = spec.name;
    j["n"] = spec.n;
    j["t"] = spec.t_len;
    j["replicates"] = spec.replicates;
    j["seed"] = spec.seed;
    manifest << j.dump(2) << '\n';
  }
  gagnar::parallel_for(spec.replicates, [&](int r) {
    const auto data = gagnar::simulate_replicate(spec, r, base);
    char dirname[32];
    std::snprintf(dirname, sizeof(dirname), "rep_%03d", r + 1);
    const fs::path rep = out / dirname;
    fs::create_directories(rep);
    gagnar::write_edge_csv(rep / "edges.csv", data.adj.edge_list());
    gagnar::write_matrix_csv(rep / "Y.csv", data.panel.Y);
    if (data.panel.p() > 0) gagnar::write_matrix_csv(rep / "V.csv", data.panel.V);
    gagnar::write_labels_csv(rep / "labels.csv", data.labels);
    std::ofstream params(rep / "params.csv");
    if (!params) throw gagnar::IoError("cannot write truth params");
    params << "sigma2,beta0,beta1,beta2";
    for (int c = 0; c < spec.p(); ++c) params << ",gamma" << (c + 1);
    params << '\n';
    for (const auto& g : spec.groups) {
      params << gagnar::detail::format_full(g.sigma2) << ','
             << gagnar::detail::format_full(g.beta0) << ','
             << gagnar::detail::format_full(g.beta1) << ','
             << gagnar::detail::format_full(g.beta2);
      for (int c = 0; c < spec.p(); ++c)
        params << ',' << gagnar::detail::format_full(g.gamma[c]);
      params << '\n';
    }
  });
  std::cout << "simulated " << spec.replicates << " replicate(s) of '" << spec.name
            << "' into " << out_dir << '\n';
  return 0;
}

int cmd_fit(const RunConfig& config, const std::string& from_draws) {
  const auto data = load_data(config);
  gagnar::ChainDraws draws;
  if (!from_draws.empty()) {
    draws = gagnar::read_draws(from_draws);
    if (draws.n != data.panel.n())
      throw gagnar::ValidationError("draws file does not match the panel");
  } else {
    auto sampler_config = config.sampler_config(data.panel.p());
    sampler_config.h = config.h;
    draws = gagnar::run_chain(sampler_config, data.panel, data.adj);
  }
  const gagnar::FitResult fit = gagnar::dahl_select(draws);
  write_fit_artifacts(config.out_dir, draws, fit, config.hpd_mass);
  std::cout << "fit: K_hat=" << fit.K_hat << " m_b=" << fit.m_b
            << " lpml=" << gagnar::detail::format_sig(fit.lpml) << '\n';
  return 0;
}

int cmd_select_h(const RunConfig& config) {
  const auto data = load_data(config);
  const auto sampler_config = config.sampler_config(data.panel.p());
  const std::vector<double> grid =
      config.h_grid.empty() ? RunConfig::default_h_grid() : config.h_grid;
  const gagnar::HSelection sel =
      gagnar::select_h(data.panel, data.adj, grid, sampler_config);
  fs::create_directories(config.out_dir);
  write_lpml_table(fs::path(config.out_dir) / "lpml.csv", sel.table);
  write_fit_artifacts(config.out_dir, sel.best_draws, sel.best_fit, config.hpd_mass);
  std::cout << "select-h: h_best=" << gagnar::detail::format_sig(sel.h_best)
            << " K_hat=" << sel.best_fit.K_hat
            << " lpml=" << gagnar::detail::format_sig(sel.best_fit.lpml) << '\n';
  return 0;
}

int cmd_predict(const RunConfig& config, const std::string& fit_path) {
  if (config.train_end <= 0)
    throw gagnar::ValidationError("--train-end is required for prediction");
  const auto data = load_data(config);
  const gagnar::FitResult fit = gagnar::read_fit_json(fit_path);
  const Eigen::MatrixXd row_norm = gagnar::row_normalized_adjacency(data.adj);
  const Eigen::MatrixXd y_hat =
      gagnar::predict(fit, data.panel, row_norm, config.train_end);
  fs::create_directories(config.out_dir);
  gagnar::write_matrix_csv(fs::path(config.out_dir) / "predictions.csv", y_hat);
  std::cout << "predict: wrote " << y_hat.rows() << "x" << y_hat.cols()
            << " predictions\n";
  return 0;
}

int cmd_evaluate(const std::string& fit_path, const std::string& truth_labels,
                 const std::string& truth_params, const std::string& predictions,
                 const std::string& responses, bool csv_header, int train_end,
                 const std::string& out_dir) {
  const gagnar::FitResult fit = gagnar::read_fit_json(fit_path);
  std::vector<std::pair<std::string, double>> metrics;
  if (!truth_labels.empty()) {
    const std::vector<int> z_true = gagnar::read_labels_csv(truth_labels);
    metrics.emplace_back("ari", gagnar::adjusted_rand_index(fit.z_hat, z_true));
    if (!truth_params.empty()) {
      const Eigen::MatrixXd tp = gagnar::read_matrix_csv(truth_params, true);
      gagnar::NodeParamTruth truth;
      truth.z = z_true;
      for (Eigen::Index g = 0; g < tp.rows(); ++g) {
        gagnar::GroupParams gp;
        gp.sigma2 = tp(g, 0);
        gp.theta = tp.row(g).tail(tp.cols() - 1).transpose();
        truth.params.push_back(std::move(gp));
      }
      const gagnar::ParamRmse rmse = gagnar::rmse_params({&fit, 1}, {&truth, 1});
      metrics.emplace_back("rmse_beta0", rmse.beta0);
      metrics.emplace_back("rmse_beta1", rmse.beta1);
      metrics.emplace_back("rmse_beta2", rmse.beta2);
      metrics.emplace_back("rmse_gamma", rmse.gamma);
      metrics.emplace_back("rmse_sigma2", rmse.sigma2);
    }
  }
  if (!predictions.empty()) {
    if (responses.empty() || train_end <= 0)
      throw gagnar::ValidationError("ReMSPE needs --responses and --train-end");
    const Eigen::MatrixXd y = gagnar::read_matrix_csv(responses, csv_header);
    const Eigen::MatrixXd y_hat = gagnar::read_matrix_csv(predictions, false);
    if (train_end >= y.cols())
      throw gagnar::ValidationError("train_end leaves no test window");
    const Eigen::MatrixXd y_train = y.leftCols(train_end);
    const Eigen::MatrixXd y_test = y.rightCols(y.cols() - train_end);
    metrics.emplace_back("remspe", gagnar::remspe(y_test, y_hat, y_train));
  }
  if (metrics.empty())
    throw gagnar::ValidationError("nothing to evaluate: supply truth files or predictions");
  fs::create_directories(out_dir);
  std::ofstream out(fs::path(out_dir) / "metrics.csv");
  if (!out) throw gagnar::IoError("cannot write metrics.csv");
  out << "metric,value\n";
  for (const auto& [name, value] : metrics) {
    out << name << ',' << gagnar::detail::format_sig(value) << '\n';
    std::cout << name << '=' << gagnar::detail::format_sig(value) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gagnar: graph-assisted grouped network autoregression"};
  app.require_subcommand(0, 1);
  // long-form help only; the short -h alias would shadow the smoothing flag
  app.set_help_flag("--help", "print help");

  bool print_config = false;
  app.add_flag("--print-config", print_config,
               "dump the default run config as JSON and exit");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate datasets from a scenario file");
  sim->set_help_flag("--help", "print help");
  std::string scenario_path, sim_out = "sim_out";
  std::uint64_t sim_seed = 0;
  sim->add_option("--scenario", scenario_path, "scenario JSON file")->required();
  sim->add_option("--out", sim_out, "output directory");
  auto* sim_seed_opt = sim->add_option("--seed", sim_seed, "override the scenario seed");

  // ---- shared fit-style options ----
  RunConfig config;
  std::string config_path, from_draws, fit_path;
  std::uint64_t cli_seed = 0;
  std::vector<double> cli_h_grid;
  auto add_common = [&](CLI::App* cmd) {
    cmd->set_help_flag("--help", "print help");
    cmd->add_option("--config", config_path, "run config JSON file");
    cmd->add_option("--edges", config.edges, "edge list CSV (src,dst header)");
    cmd->add_option("--responses", config.responses, "response CSV, N rows x T cols");
    cmd->add_option("--covariates", config.covariates, "covariate CSV, N rows x p cols");
    cmd->add_option("--out", config.out_dir, "output directory");
    cmd->add_option("--id-base", config.id_base, "node id base in edge CSV (0 or 1)");
    cmd->add_flag("--csv-header", config.csv_header, "data CSVs carry a header row");
    cmd->add_option("--alpha", config.alpha, "gaCRP concentration");
    cmd->add_option("--a0", config.a0, "inverse-gamma shape");
    cmd->add_option("--b0", config.b0, "inverse-gamma scale");
    cmd->add_option("--sigma0-scale", config.sigma0_scale, "prior covariance scale");
    cmd->add_option("--tau0", config.tau0, "prior mean (scalar fill or p+3 values)");
    cmd->add_option("--iters", config.total_iters, "total MCMC iterations");
    cmd->add_option("--burnin", config.burn_in, "burn-in iterations");
    return cmd->add_option("--seed", cli_seed, "RNG seed");
  };

  auto* fit = app.add_subcommand("fit", "run one chain and select the point estimate");
  auto* fit_seed_opt = add_common(fit);
  fit->add_option("--h", config.h, "smoothing parameter");
  fit->add_option("--from-draws", from_draws, "reuse a persisted draws file");
  fit->add_option("--hpd", config.hpd_mass, "emit per-node HPD intervals at this mass");

  auto* selh = app.add_subcommand("select-h", "scan an h grid by LPML and fit the best");
  auto* selh_seed_opt = add_common(selh);
  auto* selh_grid_opt = selh->add_option("--h-grid", cli_h_grid, "candidate h values");
  selh->add_option("--hpd", config.hpd_mass, "emit per-node HPD intervals at this mass");

  auto* pred = app.add_subcommand("predict", "one-step-ahead predictions over the test window");
  auto* pred_seed_opt = add_common(pred);
  pred->add_option("--fit", fit_path, "fit JSON file")->required();
  pred->add_option("--train-end", config.train_end, "last training time index (1-based)");

  auto* eval = app.add_subcommand("evaluate", "metrics against truth and/or predictions");
  std::string truth_labels, truth_params, predictions, eval_responses, eval_out = ".";
  bool eval_header = false;
  int eval_train_end = 0;
  eval->set_help_flag("--help", "print help");
  eval->add_option("--fit", fit_path, "fit JSON file")->required();
  eval->add_option("--truth-labels", truth_labels, "true group labels CSV");
  eval->add_option("--truth-params", truth_params, "true group parameter CSV");
  eval->add_option("--predictions", predictions, "predictions CSV from `predict`");
  eval->add_option("--responses", eval_responses, "response CSV (for ReMSPE)");
  eval->add_flag("--csv-header", eval_header, "response CSV carries a header row");
  eval->add_option("--train-end", eval_train_end, "last training time index (1-based)");
  eval->add_option("--out", eval_out, "output directory");

  try {
    // Config file must win over struct defaults but lose to explicit flags,
    // so parse twice: once to find --config, then overlay flags.
    app.parse(argc, argv);
    if (print_config) {
      std::cout << RunConfig().to_json().dump(2) << '\n';
      return 0;
    }
    if (!config_path.empty()) {
      RunConfig file_config = RunConfig::load(config_path);
      // re-apply CLI values on top of the file values
      RunConfig defaults;
      auto keep = [&](auto RunConfig::*field) {
        if (config.*field != defaults.*field) file_config.*field = config.*field;
      };
      keep(&RunConfig::edges);
      keep(&RunConfig::responses);
      keep(&RunConfig::covariates);
      keep(&RunConfig::out_dir);
      keep(&RunConfig::id_base);
      keep(&RunConfig::csv_header);
      keep(&RunConfig::tau0);
      keep(&RunConfig::sigma0_scale);
      keep(&RunConfig::a0);
      keep(&RunConfig::b0);
      keep(&RunConfig::alpha);
      keep(&RunConfig::total_iters);
      keep(&RunConfig::burn_in);
      keep(&RunConfig::h);
      keep(&RunConfig::train_end);
      keep(&RunConfig::hpd_mass);
      keep(&RunConfig::shuffle_order);
      config = std::move(file_config);
    }
    if (*fit_seed_opt || *selh_seed_opt || *pred_seed_opt) {
      config.seed = cli_seed;
      config.has_seed = true;
    }
    if (*selh_grid_opt) config.h_grid = cli_h_grid;

    if (sim->parsed())
      return cmd_simulate(scenario_path, sim_out, sim_seed_opt->count() > 0, sim_seed);
    if (fit->parsed()) return cmd_fit(config, from_draws);
    if (selh->parsed()) return cmd_select_h(config);
    if (pred->parsed()) return cmd_predict(config, fit_path);
    if (eval->parsed())
      return cmd_evaluate(fit_path, truth_labels, truth_params, predictions,
                          eval_responses, eval_header, eval_train_end, eval_out);
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return kExitValidation;
  } catch (const gagnar::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const gagnar::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const gagnar::IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
}
