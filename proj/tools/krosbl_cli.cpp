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

#include "krosbl/channel.hpp"
#include "krosbl/experiments.hpp"
#include "krosbl/io.hpp"
#include "krosbl/metrics.hpp"
#include "krosbl/sbl.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace krosbl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;
constexpr const char* kVersion = "0.1.0";

/// Usage or configuration problem: exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> variants;
  std::vector<double> snr;
  std::optional<int> trials;
  std::optional<int> jobs;
  std::string out;
  std::string problem;
  std::string results;
};

fs::path output_root() {
  const char* env = std::getenv("KROSBL_OUT");
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("krosbl_out");
}

fs::path output_dir(const Options& o, const char* command) {
  return o.out.empty() ? output_root() / command : fs::path(o.out);
}

/// Config files use the sweep schema; a manifest is accepted in place of a
/// config and contributes its resolved section.
json load_config(const Options& o) {
  if (o.config.empty()) return json::object();
  json j;
  try {
    j = read_json_file(o.config);
  } catch (const json::exception& e) {
    throw UsageError(o.config + ": " + e.what());
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  if (!j.is_object()) throw UsageError(o.config + ": config must be a JSON object");
  if (j.contains("resolved")) return j.at("resolved");
  return j;
}

SweepSpec resolve_sweep(const Options& o) {
  SweepSpec spec = sweep_spec_from_json(load_config(o));
  if (o.seed) spec.system.seed = *o.seed;
  if (!o.snr.empty()) spec.snr_db = o.snr;
  if (o.trials) spec.trials = *o.trials;
  spec.jobs = o.jobs ? *o.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (!o.variants.empty()) {
    std::vector<EstimatorSpec> picked;
    for (const auto& name : o.variants) {
      const Variant v = parse_variant(name);
      bool found = false;
      for (const auto& e : spec.estimators) {
        if (e.solver.variant == v) {
          picked.push_back(e);
          found = true;
        }
      }
      if (!found) {
        for (const auto& e : default_estimators()) {
          if (e.solver.variant == v) picked.push_back(e);
        }
      }
    }
    spec.estimators = std::move(picked);
  }
  spec.validate();
  return spec;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& o, const SweepSpec& spec,
                    json extra = json::object()) {
  json m = {{"tool", "krosbl"},
            {"version", kVersion},
            {"command", command},
            {"config_path", o.config},
            {"timestamp", utc_timestamp()},
            {"seed", spec.system.seed},
            {"resolved", to_json(spec)}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_json_file(dir / "manifest.json", m);
}

int cmd_synth(const Options& o) {
  SweepSpec spec = resolve_sweep(o);
  SystemConfig cfg = spec.system;
  cfg.irs_configs = spec.config_counts().front();
  cfg.validate();

  Rng truth_rng = make_rng(cfg.seed, {0});
  Problem p;
  p.truth = synth_channels(cfg, truth_rng);
  Rng design_rng = make_rng(cfg.seed, {0, static_cast<std::uint64_t>(cfg.irs_configs), 1});
  const MeasurementDesign design = draw_design(cfg, design_rng);
  const cmat unit = unit_complex_noise(cfg.bs_antennas * cfg.pilots_per_config, cfg.irs_configs, design_rng);
  if (!o.snr.empty()) cfg.sigma2 = snr_to_sigma2(*p.truth, design, o.snr.front());
  p.measurements = observe(*p.truth, design, cfg.sigma2, unit);
  p.config = cfg;

  const fs::path dir = output_dir(o, "synth");
  fs::create_directories(dir);
  write_json_file(dir / "problem.json", to_json(p));
  spec.system = cfg;
  spec.irs_config_counts = {cfg.irs_configs};
  write_manifest(dir, "synth", o, spec, {{"outputs", {"problem.json"}}});
  std::cout << "wrote " << (dir / "problem.json").string() << " (sigma2 = " << cfg.sigma2 << ")\n";
  return kExitOk;
}

int cmd_estimate(const Options& o) {
  if (o.problem.empty()) throw UsageError("estimate: a problem file is required");
  Problem p;
  try {
    p = problem_from_json(read_json_file(o.problem));
  } catch (const json::exception& e) {
    throw std::runtime_error(o.problem + ": " + e.what());
  }
  const json cfg_json = load_config(o);
  const std::vector<std::string> names = o.variants.empty() ? std::vector<std::string>{"svd"} : o.variants;

  const fs::path dir = output_dir(o, "estimate");
  fs::create_directories(dir);
  const Dictionary dict = build_dictionary(p.config, p.measurements.pilots, p.measurements.theta);
  json outputs = json::array();
  for (const auto& name : names) {
    const Variant v = parse_variant(name);
    SolverConfig solver;
    for (const auto& e : default_estimators()) {
      if (e.solver.variant == v) solver = e.solver;
    }
    if (cfg_json.contains("solver")) {
      json body = cfg_json.at("solver");
      body.erase("variant");
      solver = solver_config_from_json(body, solver);
    }
    solver.variant = v;
    solver.validate();

    const EstimateResult res = estimate(dict, p.measurements.y_tilde, p.measurements.sigma2, solver);
    json j = to_json(res);
    const cmat cascade = reconstruct_cascade(dict, res.g_hat);
    j["cascade"] = {{"rows", cascade.rows()}, {"cols", cascade.cols()}, {"frobenius_norm", cascade.norm()}};
    j["solver"] = to_json(solver);
    std::cout << name << ": " << res.iterations << " iterations, " << res.elapsed << " s";
    if (p.truth) {
      const double e = nmse(*p.truth, res.g_hat, dict, p.measurements.theta);
      const double s = srr(p.truth->g, res.g_hat);
      j["nmse"] = e;
      j["srr"] = s;
      std::cout << ", NMSE " << e << ", SRR " << s;
    }
    std::cout << '\n';
    const std::string file = "estimate_" + name + ".json";
    write_json_file(dir / file, j);
    outputs.push_back(file);
  }
  SweepSpec spec;
  spec.system = p.config;
  spec.irs_config_counts = {p.config.irs_configs};
  write_manifest(dir, "estimate", o, spec, {{"problem", o.problem}, {"outputs", outputs}});
  return kExitOk;
}

void print_summary(const std::vector<CellSummary>& cells) {
  std::cout << std::left << std::setw(6) << "K_I" << std::setw(8) << "SNR" << std::setw(10) << "estimator"
            << std::setw(6) << "n" << std::setw(8) << "flagged" << std::setw(14) << "median NMSE"
            << std::setw(12) << "mean SRR" << std::setw(12) << "mean SER" << "median time [s]\n";
  for (const auto& c : cells) {
    std::cout << std::left << std::setw(6) << c.irs_configs << std::setw(8) << c.snr_db << std::setw(10)
              << c.estimator << std::setw(6) << c.count << std::setw(8) << c.flagged << std::setw(14)
              << c.median_nmse << std::setw(12) << c.mean_srr << std::setw(12) << c.mean_ser
              << c.median_elapsed << '\n';
  }
}

int cmd_sweep(const Options& o) {
  SweepSpec spec = resolve_sweep(o);
  const fs::path dir = output_dir(o, "sweep");
  spec.output = dir;
  fs::create_directories(dir);
  write_manifest(dir, "sweep", o, spec);
  const auto records = run_sweep(spec);
  write_manifest(dir, "sweep", o, spec,
                 {{"outputs", {"records.csv", "summary.json", "plot_nmse.csv", "plot_srr.csv",
                               "plot_runtime.csv", "plot_ser.csv"}}});
  const auto cells = aggregate(records);
  print_summary(cells);
  std::size_t flagged = 0;
  for (const auto& r : records) flagged += r.flagged ? 1 : 0;
  if (flagged > 0) {
    std::cerr << "krosbl: " << flagged << " of " << records.size() << " records failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_report(const Options& o) {
  const fs::path dir = o.results.empty() ? output_root() / "sweep" : fs::path(o.results);
  fs::path file = dir / "records.csv";
  if (!fs::exists(file) && fs::exists(dir / "records.partial.csv")) file = dir / "records.partial.csv";
  if (!fs::exists(file)) throw std::runtime_error("report: no records found in " + dir.string());
  const auto records = read_records_csv(file);
  if (records.empty()) throw std::runtime_error("report: " + file.string() + " holds no records");
  const auto cells = aggregate(records);
  const fs::path out = o.out.empty() ? dir : fs::path(o.out);
  fs::create_directories(out);
  write_summary_json(out / "summary.json", cells);
  for (const auto& f : write_plot_data(out, cells)) std::cout << "wrote " << f.string() << '\n';
  print_summary(cells);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kronecker-structured SBL for IRS cascaded channel estimation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config (sweep schema) or a manifest.json to replay");
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--out", o.out, "Output directory (default $KROSBL_OUT/<command>)");
  };
  auto* synth = app.add_subcommand("synth", "Synthesize channels and measurements");
  add_common(synth);
  synth->add_option("--snr", o.snr, "SNR in dB; sets the noise variance")->expected(1);

  auto* est = app.add_subcommand("estimate", "Estimate the cascaded channel of a problem file");
  add_common(est);
  est->add_option("problem", o.problem, "problem.json written by synth")->required();
  est->add_option("--variant", o.variants, "am, svd, classic or omp (repeatable)")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep over SNR");
  add_common(sweep);
  sweep->add_option("--variant", o.variants, "Estimators to run (comma separated)")->delimiter(',');
  sweep->add_option("--snr", o.snr, "SNR grid in dB (comma separated)")->delimiter(',');
  sweep->add_option("--trials", o.trials, "Trials per cell")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", o.jobs, "Worker threads (default: number of cores)")->check(CLI::PositiveNumber);

  auto* report = app.add_subcommand("report", "Summarize sweep results and emit plot data");
  report->add_option("results", o.results, "Results directory (default $KROSBL_OUT/sweep)");
  report->add_option("--out", o.out, "Directory for summary and plot data (default: results directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(o);
    if (*est) return cmd_estimate(o);
    if (*sweep) return cmd_sweep(o);
    if (*report) return cmd_report(o);
  } catch (const UsageError& e) {
    std::cerr << "krosbl: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "krosbl: " << e.what() << '\n';
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "krosbl: invalid config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "krosbl: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
