// SPDX-License-Identifier: Apache-2.0
//
// krosbl: Kronecker-structured sparse Bayesian learning for IRS-aided MIMO
// cascaded channel estimation.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "krosbl/io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string>

namespace krosbl {

namespace {

json complex_pair(cplx z) { return json::array({z.real(), z.imag()}); }

cplx complex_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected a [re, im] pair");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
void read_opt(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

json index_list(const std::vector<Index>& v) {
  json arr = json::array();
  for (auto i : v) arr.push_back(i);
  return arr;
}

void check_keys(const json& j, std::initializer_list<const char*> known, const char* what) {
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw ConfigError(std::string("unknown ") + what + " key '" + key + "'");
    }
  }
}

std::vector<Index> index_list_from(const json& j) {
  std::vector<Index> v;
  for (const auto& x : j) v.push_back(x.get<Index>());
  return v;
}

}  // namespace

json to_json(const cvec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(complex_pair(v[i]));
  return arr;
}

json to_json(const cmat& m) {
  json data = json::array();
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) data.push_back(complex_pair(m(i, j)));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

json to_json(const rvec& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

cvec cvec_from_json(const json& j) {
  cvec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = complex_from(j[i]);
  return v;
}

cmat cmat_from_json(const json& j) {
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols) {
    throw std::invalid_argument("matrix data length does not match rows * cols");
  }
  cmat m(rows, cols);
  std::size_t k = 0;
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) m(r, c) = complex_from(data[k++]);
  }
  return m;
}

rvec rvec_from_json(const json& j) {
  rvec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = j[i].get<double>();
  return v;
}

json to_json(const SystemConfig& c) {
  return {{"bs_antennas", c.bs_antennas},
          {"ms_antennas", c.ms_antennas},
          {"irs_elements", c.irs_elements},
          {"grid_size", c.grid_size},
          {"irs_configs", c.irs_configs},
          {"pilots_per_config", c.pilots_per_config},
          {"paths_ms", c.paths_ms},
          {"paths_bs", c.paths_bs},
          {"sigma2", c.sigma2},
          {"element_spacing", c.element_spacing},
          {"irs_norm_count", c.irs_norm_count},
          {"off_grid", c.off_grid},
          {"pilot_design", to_string(c.pilot_design)},
          {"seed", c.seed}};
}

SystemConfig system_config_from_json(const json& j, SystemConfig c) {
  if (!j.is_object()) throw ConfigError("system config must be a JSON object");
  check_keys(j,
             {"bs_antennas", "ms_antennas", "irs_elements", "grid_size", "irs_configs",
              "pilots_per_config", "paths_ms", "paths_bs", "sigma2", "element_spacing",
              "irs_norm_count", "off_grid", "pilot_design", "seed"},
             "system config");
  read_opt(j, "bs_antennas", c.bs_antennas);
  read_opt(j, "ms_antennas", c.ms_antennas);
  read_opt(j, "irs_elements", c.irs_elements);
  read_opt(j, "grid_size", c.grid_size);
  read_opt(j, "irs_configs", c.irs_configs);
  read_opt(j, "pilots_per_config", c.pilots_per_config);
  read_opt(j, "paths_ms", c.paths_ms);
  read_opt(j, "paths_bs", c.paths_bs);
  read_opt(j, "sigma2", c.sigma2);
  read_opt(j, "element_spacing", c.element_spacing);
  read_opt(j, "irs_norm_count", c.irs_norm_count);
  read_opt(j, "off_grid", c.off_grid);
  if (j.contains("pilot_design")) c.pilot_design = parse_pilot_design(j.at("pilot_design").get<std::string>());
  read_opt(j, "seed", c.seed);
  return c;
}

json to_json(const SolverConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"epsilon", c.epsilon},
          {"max_iterations", c.max_iterations},
          {"am_max_sweeps", c.am_max_sweeps},
          {"am_tol", c.am_tol},
          {"gamma_floor", c.gamma_floor},
          {"omp_sparsity", c.omp_sparsity},
          {"omp_residual_tol", c.omp_residual_tol}};
}

SolverConfig solver_config_from_json(const json& j, SolverConfig c) {
  if (!j.is_object()) throw ConfigError("solver config must be a JSON object");
  check_keys(j,
             {"variant", "epsilon", "max_iterations", "am_max_sweeps", "am_tol", "gamma_floor",
              "omp_sparsity", "omp_residual_tol"},
             "solver config");
  if (j.contains("variant")) c.variant = parse_variant(j.at("variant").get<std::string>());
  read_opt(j, "epsilon", c.epsilon);
  read_opt(j, "max_iterations", c.max_iterations);
  read_opt(j, "am_max_sweeps", c.am_max_sweeps);
  read_opt(j, "am_tol", c.am_tol);
  read_opt(j, "gamma_floor", c.gamma_floor);
  read_opt(j, "omp_sparsity", c.omp_sparsity);
  read_opt(j, "omp_residual_tol", c.omp_residual_tol);
  return c;
}

json to_json(const GroundTruth& t) {
  return {{"h_ms", to_json(t.h_ms)},
          {"h_bs", to_json(t.h_bs)},
          {"g_b", to_json(t.g_b)},
          {"g_ld", to_json(t.g_ld)},
          {"g_la", to_json(t.g_la)},
          {"g_m", to_json(t.g_m)},
          {"g_l", to_json(t.g_l)},
          {"g", to_json(t.g)},
          {"support", index_list(t.support)},
          {"gains_ms", to_json(t.gains_ms)},
          {"gains_bs", to_json(t.gains_bs)},
          {"aoa_irs", index_list(t.aoa_irs)},
          {"aod_ms", t.aod_ms},
          {"aoa_bs", index_list(t.aoa_bs)},
          {"aod_irs", t.aod_irs}};
}

GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth t;
  t.h_ms = cmat_from_json(j.at("h_ms"));
  t.h_bs = cmat_from_json(j.at("h_bs"));
  t.g_b = cvec_from_json(j.at("g_b"));
  t.g_ld = cvec_from_json(j.at("g_ld"));
  t.g_la = cvec_from_json(j.at("g_la"));
  t.g_m = cvec_from_json(j.at("g_m"));
  t.g_l = cvec_from_json(j.at("g_l"));
  t.g = cvec_from_json(j.at("g"));
  t.support = index_list_from(j.at("support"));
  t.gains_ms = cvec_from_json(j.at("gains_ms"));
  t.gains_bs = cvec_from_json(j.at("gains_bs"));
  t.aoa_irs = index_list_from(j.at("aoa_irs"));
  t.aod_ms = j.at("aod_ms").get<Index>();
  t.aoa_bs = index_list_from(j.at("aoa_bs"));
  t.aod_irs = j.at("aod_irs").get<Index>();
  return t;
}

json to_json(const MeasurementSet& m) {
  return {{"pilots", to_json(m.pilots)}, {"theta", to_json(m.theta)}, {"y", to_json(m.y)},
          {"y_tilde", to_json(m.y_tilde)}, {"noise", to_json(m.noise)}, {"sigma2", m.sigma2}};
}

MeasurementSet measurement_set_from_json(const json& j) {
  MeasurementSet m;
  m.pilots = cmat_from_json(j.at("pilots"));
  m.theta = cmat_from_json(j.at("theta"));
  m.y = cmat_from_json(j.at("y"));
  m.y_tilde = cvec_from_json(j.at("y_tilde"));
  m.noise = cmat_from_json(j.at("noise"));
  m.sigma2 = j.at("sigma2").get<double>();
  if (m.y_tilde.size() != m.y.size()) throw DimensionError("measurements: y_tilde does not match y");
  return m;
}

json to_json(const HyperParams& h) {
  return {{"gamma1", to_json(h.gamma1)}, {"gamma2", to_json(h.gamma2)}, {"gamma3", to_json(h.gamma3)}};
}

json to_json(const EstimateResult& r) {
  json j = {{"variant", to_string(r.variant)},
            {"g_hat", to_json(r.g_hat)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"nll_trace", r.nll_trace},
            {"elapsed_s", r.elapsed},
            {"flagged", r.flagged},
            {"message", r.message}};
  if (r.hyper.gamma1.size() > 0) j["hyper"] = to_json(r.hyper);
  if (r.gamma_full.size() > 0) j["gamma"] = to_json(r.gamma_full);
  if (!r.selected.empty()) j["selected"] = index_list(r.selected);
  return j;
}

SweepSpec sweep_spec_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
  check_keys(j,
             {"system", "solver", "estimators", "snr_db", "irs_configs", "trials", "ser_symbols",
              "support_threshold", "jobs", "output"},
             "sweep config");
  SweepSpec s;
  if (j.contains("system")) s.system = system_config_from_json(j.at("system"));
  read_opt(j, "snr_db", s.snr_db);
  if (j.contains("irs_configs")) {
    const json& k = j.at("irs_configs");
    s.irs_config_counts = k.is_array() ? k.get<std::vector<Index>>() : std::vector<Index>{k.get<Index>()};
  }
  read_opt(j, "trials", s.trials);
  read_opt(j, "ser_symbols", s.ser_symbols);
  read_opt(j, "support_threshold", s.support.relative);
  read_opt(j, "jobs", s.jobs);
  if (j.contains("output")) s.output = j.at("output").get<std::string>();

  const json shared_json = j.contains("solver") ? j.at("solver") : json::object();
  const SolverConfig shared = solver_config_from_json(shared_json);
  if (j.contains("estimators")) {
    for (const auto& e : j.at("estimators")) {
      json body = e;
      std::string name;
      if (body.is_string()) {
        name = body.get<std::string>();
        body = json{{"variant", name}};
      } else {
        name = body.value("name", body.value("variant", std::string{}));
        body.erase("name");
      }
      s.estimators.push_back({name, solver_config_from_json(body, shared)});
    }
  } else {
    for (auto& e : default_estimators()) {
      json body = shared_json;
      body.erase("variant");
      s.estimators.push_back({e.name, solver_config_from_json(body, e.solver)});
    }
  }
  return s;
}

json to_json(const SweepSpec& s) {
  json est = json::array();
  for (const auto& e : s.estimators) {
    json body = to_json(e.solver);
    body["name"] = e.name;
    est.push_back(std::move(body));
  }
  return {{"system", to_json(s.system)},
          {"snr_db", s.snr_db},
          {"irs_configs", s.config_counts()},
          {"trials", s.trials},
          {"estimators", std::move(est)},
          {"ser_symbols", s.ser_symbols},
          {"support_threshold", s.support.relative},
          {"jobs", s.jobs},
          {"output", s.output.string()}};
}

json to_json(const Problem& p) {
  json j = {{"config", to_json(p.config)}, {"measurements", to_json(p.measurements)}};
  if (p.truth) j["truth"] = to_json(*p.truth);
  return j;
}

Problem problem_from_json(const json& j) {
  Problem p;
  p.config = system_config_from_json(j.at("config"));
  p.measurements = measurement_set_from_json(j.at("measurements"));
  if (j.contains("truth")) p.truth = ground_truth_from_json(j.at("truth"));
  return p;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return json::parse(in);
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace krosbl
