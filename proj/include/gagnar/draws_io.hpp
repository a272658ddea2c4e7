// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <string>
#include <vector>

#include "gagnar/errors.hpp"
#include "gagnar/posthoc.hpp"
#include "gagnar/sampler.hpp"

namespace gagnar {

// Draw files are JSON Lines. The first record carries the chain metadata
// ("type":"meta"); every following line is one recorded iteration with
// keys (alphabetical): K, iter, loglik, params, z. Files are append-only
// and reload exactly (doubles are emitted in shortest round-trip form).

namespace detail {

inline nlohmann::json params_to_json(const std::vector<GroupParams>& params) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& gp : params) {
    nlohmann::json pj;
    pj["sigma2"] = gp.sigma2;
    pj["theta"] = std::vector<double>(gp.theta.data(), gp.theta.data() + gp.theta.size());
    arr.push_back(std::move(pj));
  }
  return arr;
}

inline std::vector<GroupParams> params_from_json(const nlohmann::json& arr) {
  std::vector<GroupParams> params;
  params.reserve(arr.size());
  for (const auto& pj : arr) {
    GroupParams gp;
    gp.sigma2 = pj.at("sigma2").get<double>();
    const auto theta = pj.at("theta").get<std::vector<double>>();
    gp.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                 static_cast<Eigen::Index>(theta.size()));
    params.push_back(std::move(gp));
  }
  return params;
}

}  // namespace detail

inline void write_draws(const std::filesystem::path& path, const ChainDraws& draws) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  nlohmann::json meta;
  meta["type"] = "meta";
  meta["n"] = draws.n;
  meta["t_len"] = draws.t_len;
  meta["p"] = draws.p;
  meta["total_iters"] = draws.total_iters;
  meta["burn_in"] = draws.burn_in;
  meta["h"] = draws.h;
  meta["rng_seed"] = draws.rng_seed;
  meta["rng_stream"] = draws.rng_stream;
  out << meta.dump() << '\n';
  for (const Draw& d : draws.draws) {
    nlohmann::json j;
    j["iter"] = d.iter;
    j["K"] = d.K;
    j["z"] = d.z;
    j["params"] = detail::params_to_json(d.params);
    j["loglik"] = std::vector<double>(d.node_loglik.data(),
                                      d.node_loglik.data() + d.node_loglik.size());
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline ChainDraws read_draws(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": empty draws file");
  ChainDraws draws;
  try {
    const nlohmann::json meta = nlohmann::json::parse(line);
    if (meta.value("type", std::string()) != "meta")
      throw IoError(path.string() + ": first record must be the meta line");
    draws.n = meta.at("n").get<int>();
    draws.t_len = meta.at("t_len").get<int>();
    draws.p = meta.at("p").get<int>();
    draws.total_iters = meta.at("total_iters").get<int>();
    draws.burn_in = meta.at("burn_in").get<int>();
    draws.h = meta.at("h").get<double>();
    draws.rng_seed = meta.at("rng_seed").get<std::uint64_t>();
    draws.rng_stream = meta.at("rng_stream").get<std::uint64_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      Draw d;
      d.iter = j.at("iter").get<int>();
      d.K = j.at("K").get<int>();
      d.z = j.at("z").get<std::vector<int>>();
      d.params = detail::params_from_json(j.at("params"));
      const auto ll = j.at("loglik").get<std::vector<double>>();
      d.node_loglik = Eigen::Map<const Eigen::VectorXd>(ll.data(),
                                                        static_cast<Eigen::Index>(ll.size()));
      if (static_cast<int>(d.z.size()) != draws.n || d.node_loglik.size() != draws.n ||
          static_cast<int>(d.params.size()) != d.K)
        throw IoError(path.string() + ": inconsistent draw record at iter " +
                      std::to_string(d.iter));
      draws.draws.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed draws file: " + e.what());
  }
  return draws;
}

inline void write_fit_json(const std::filesystem::path& path, const FitResult& fit) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  nlohmann::json j;
  j["K_hat"] = fit.K_hat;
  j["z_hat"] = fit.z_hat;
  j["params_hat"] = detail::params_to_json(fit.params_hat);
  j["m_b"] = fit.m_b;
  j["lpml"] = fit.lpml;
  j["h"] = fit.h;
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline FitResult read_fit_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    FitResult fit;
    fit.K_hat = j.at("K_hat").get<int>();
    fit.z_hat = j.at("z_hat").get<std::vector<int>>();
    fit.params_hat = detail::params_from_json(j.at("params_hat"));
    fit.m_b = j.at("m_b").get<int>();
    fit.lpml = j.at("lpml").get<double>();
    fit.h = j.at("h").get<double>();
    return fit;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": malformed fit file: " + e.what());
  }
}

}  // namespace gagnar
