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

#include "krosbl/experiments.hpp"

#include "krosbl/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace krosbl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return s;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<Index> SweepSpec::config_counts() const {
  return irs_config_counts.empty() ? std::vector<Index>{system.irs_configs} : irs_config_counts;
}

void SweepSpec::validate() const {
  system.validate();
  if (snr_db.empty()) throw ConfigError("sweep: SNR grid is empty");
  for (double s : snr_db) {
    if (!std::isfinite(s)) throw ConfigError("sweep: SNR values must be finite");
  }
  if (trials < 1) throw ConfigError("sweep: trial count must be >= 1");
  if (estimators.empty()) throw ConfigError("sweep: no estimators configured");
  for (const auto& e : estimators) e.solver.validate();
  for (Index k : config_counts()) {
    if (k < 1) throw ConfigError("sweep: IRS configuration counts must be >= 1");
  }
  if (ser_symbols < 1) throw ConfigError("sweep: ser_symbols must be >= 1");
  if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");
}

std::vector<EstimatorSpec> default_estimators() {
  std::vector<EstimatorSpec> out;
  for (Variant v : {Variant::am, Variant::svd, Variant::classic, Variant::omp}) {
    SolverConfig s;
    s.variant = v;
    if (v == Variant::am || v == Variant::svd) s.max_iterations = kKroSblMaxIterations;
    out.push_back({to_string(v), s});
  }
  return out;
}

std::vector<TrialRecord> run_trial(const SweepSpec& spec, Index irs_configs, int trial) {
  SystemConfig sys = spec.system;
  sys.irs_configs = irs_configs;
  const auto t = static_cast<std::uint64_t>(trial);
  const auto k = static_cast<std::uint64_t>(irs_configs);

  Rng truth_rng = make_rng(sys.seed, {t});
  const GroundTruth truth = synth_channels(sys, truth_rng);
  Rng design_rng = make_rng(sys.seed, {t, k, 1});
  const MeasurementDesign design = draw_design(sys, design_rng);
  const cmat unit = unit_complex_noise(sys.bs_antennas * sys.pilots_per_config, irs_configs, design_rng);

  std::vector<TrialRecord> out;
  for (std::size_t si = 0; si < spec.snr_db.size(); ++si) {
    const double snr = spec.snr_db[si];
    SystemConfig cell = sys;
    cell.sigma2 = snr_to_sigma2(truth, design, snr);
    const MeasurementSet ms = observe(truth, design, cell.sigma2, unit);
    const Dictionary dict = build_dictionary(cell, ms.pilots, ms.theta);

    auto ser_rng = [&] { return make_rng(sys.seed, {t, k, 2, static_cast<std::uint64_t>(si)}); };
    Rng oracle_rng = ser_rng();
    const double ser_oracle =
        ser_experiment(truth, truth.g, dict, cell, spec.ser_symbols, oracle_rng, true).ser;

    for (const auto& est : spec.estimators) {
      TrialRecord rec;
      rec.seed = sys.seed;
      rec.trial = trial;
      rec.irs_configs = irs_configs;
      rec.snr_db = snr;
      rec.estimator = est.name;
      rec.ser_oracle = ser_oracle;
      try {
        const EstimateResult res = estimate(dict, ms.y_tilde, cell.sigma2, est.solver);
        rec.elapsed_s = res.elapsed;
        rec.iterations = res.iterations;
        rec.converged = res.converged;
        rec.nmse = nmse(truth, res.g_hat, dict, ms.theta);
        rec.srr = srr(truth.g, res.g_hat, spec.support);
        Rng rng = ser_rng();
        const SerOutcome ser = ser_experiment(truth, res.g_hat, dict, cell, spec.ser_symbols, rng);
        rec.ser = ser.ser;
        if (res.flagged) rec.message = res.message;
        if (ser.flagged) rec.message += (rec.message.empty() ? "" : "; ") + std::string("SER: estimate not equalizable");
      } catch (const std::exception& e) {
        rec.flagged = true;
        rec.nmse = rec.srr = rec.ser = kNaN;
        rec.message = e.what();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::string sweep_fingerprint(const SweepSpec& spec) {
  json j = to_json(spec);
  j.erase("jobs");
  j.erase("output");
  return j.dump();
}

std::vector<TrialRecord> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto counts = spec.config_counts();
  struct Task {
    Index irs_configs;
    int trial;
  };
  std::vector<Task> tasks;
  for (Index k : counts) {
    for (int t = 0; t < spec.trials; ++t) tasks.push_back({k, t});
  }
  std::vector<std::vector<TrialRecord>> results(tasks.size());
  std::vector<bool> done(tasks.size(), false);
  const std::size_t per_task = spec.snr_db.size() * spec.estimators.size();

  std::ofstream partial;
  const bool persist = !spec.output.empty();
  if (persist) {
    std::filesystem::create_directories(spec.output);
    const auto partial_path = spec.output / "records.partial.csv";
    const auto stamp_path = spec.output / "sweep.json";
    const std::string stamp = sweep_fingerprint(spec);
    if (spec.resume && std::filesystem::exists(partial_path) && std::filesystem::exists(stamp_path) &&
        read_json_file(stamp_path).dump() == stamp) {
      std::map<std::pair<Index, int>, std::vector<TrialRecord>> old;
      try {
        for (auto& r : read_records_csv(partial_path)) old[{r.irs_configs, r.trial}].push_back(std::move(r));
      } catch (const std::exception&) {
        old.clear();
      }
      for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto it = old.find({tasks[i].irs_configs, tasks[i].trial});
        if (it != old.end() && it->second.size() == per_task) {
          results[i] = std::move(it->second);
          done[i] = true;
        }
      }
    }
    write_json_file(stamp_path, json::parse(stamp));
    partial.open(partial_path, std::ios::trunc);
    if (!partial) throw std::runtime_error("cannot write to " + spec.output.string());
    partial << records_csv_header() << '\n';
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (!done[i]) continue;
      for (const auto& r : results[i]) partial << to_csv_row(r) << '\n';
    }
    partial.flush();
  }

  std::atomic<std::size_t> next{0};
  std::mutex sink;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      if (done[i]) continue;
      std::vector<TrialRecord> recs;
      try {
        recs = run_trial(spec, tasks[i].irs_configs, tasks[i].trial);
      } catch (const std::exception& e) {
        for (double snr : spec.snr_db) {
          for (const auto& est : spec.estimators) {
            TrialRecord r;
            r.seed = spec.system.seed;
            r.trial = tasks[i].trial;
            r.irs_configs = tasks[i].irs_configs;
            r.snr_db = snr;
            r.estimator = est.name;
            r.nmse = r.srr = r.ser = r.ser_oracle = kNaN;
            r.flagged = true;
            r.message = e.what();
            recs.push_back(std::move(r));
          }
        }
      }
      std::lock_guard lock(sink);
      if (persist) {
        for (const auto& r : recs) partial << to_csv_row(r) << '\n';
        partial.flush();
      }
      results[i] = std::move(recs);
    }
  };
  const int jobs = std::max(1, std::min<int>(spec.jobs, static_cast<int>(tasks.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<TrialRecord> all;
  for (auto& r : results) {
    for (auto& rec : r) all.push_back(std::move(rec));
  }
  // Order within a task is (snr, estimator); across tasks (irs_configs, trial).
  std::stable_sort(all.begin(), all.end(), [](const TrialRecord& a, const TrialRecord& b) {
    if (a.irs_configs != b.irs_configs) return a.irs_configs < b.irs_configs;
    return a.trial < b.trial;
  });

  if (persist) {
    partial.close();
    write_records_csv(spec.output / "records.csv", all);
    const auto cells = aggregate(all);
    write_summary_json(spec.output / "summary.json", cells);
    write_plot_data(spec.output, cells);
    std::filesystem::remove(spec.output / "records.partial.csv");
  }
  return all;
}

double median(std::vector<double> values) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<CellSummary> aggregate(const std::vector<TrialRecord>& records) {
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (std::find(order.begin(), order.end(), r.estimator) == order.end()) order.push_back(r.estimator);
  }
  auto rank = [&](const std::string& name) {
    return std::find(order.begin(), order.end(), name) - order.begin();
  };
  using Key = std::tuple<Index, double, std::ptrdiff_t>;
  std::map<Key, std::vector<const TrialRecord*>> groups;
  for (const auto& r : records) groups[{r.irs_configs, r.snr_db, rank(r.estimator)}].push_back(&r);

  std::vector<CellSummary> cells;
  for (const auto& [key, recs] : groups) {
    CellSummary c;
    c.irs_configs = std::get<0>(key);
    c.snr_db = std::get<1>(key);
    c.estimator = order[static_cast<std::size_t>(std::get<2>(key))];
    std::vector<double> nm, sr, se, so, el;
    for (const auto* r : recs) {
      if (r->flagged) {
        ++c.flagged;
        continue;
      }
      ++c.count;
      nm.push_back(r->nmse);
      sr.push_back(r->srr);
      se.push_back(r->ser);
      so.push_back(r->ser_oracle);
      el.push_back(r->elapsed_s);
    }
    c.median_nmse = median(nm);
    c.mean_nmse = mean(nm);
    c.median_srr = median(sr);
    c.mean_srr = mean(sr);
    c.median_ser = median(se);
    c.mean_ser = mean(se);
    c.median_ser_oracle = median(so);
    c.mean_ser_oracle = mean(so);
    c.median_elapsed = median(el);
    c.mean_elapsed = mean(el);
    cells.push_back(std::move(c));
  }
  return cells;
}

std::string records_csv_header() {
  return "seed,trial,irs_configs,snr_db,estimator,nmse,srr,ser,ser_oracle,elapsed_s,iterations,"
         "converged,flagged,message";
}

std::string to_csv_row(const TrialRecord& r) {
  std::ostringstream os;
  os << r.seed << ',' << r.trial << ',' << r.irs_configs << ',' << fmt_double(r.snr_db) << ','
     << sanitize(r.estimator) << ',' << fmt_double(r.nmse) << ',' << fmt_double(r.srr) << ','
     << fmt_double(r.ser) << ',' << fmt_double(r.ser_oracle) << ',' << fmt_double(r.elapsed_s) << ','
     << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << (r.flagged ? 1 : 0) << ','
     << sanitize(r.message);
  return os.str();
}

void write_records_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << records_csv_header() << '\n';
  for (const auto& r : records) out << to_csv_row(r) << '\n';
}

std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != records_csv_header()) {
    throw std::runtime_error(path.string() + ": not a records file");
  }
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 14) throw std::runtime_error(path.string() + ": malformed row: " + line);
    TrialRecord r;
    r.seed = std::stoull(f[0]);
    r.trial = std::stoi(f[1]);
    r.irs_configs = std::stoll(f[2]);
    r.snr_db = std::stod(f[3]);
    r.estimator = f[4];
    r.nmse = std::stod(f[5]);
    r.srr = std::stod(f[6]);
    r.ser = std::stod(f[7]);
    r.ser_oracle = std::stod(f[8]);
    r.elapsed_s = std::stod(f[9]);
    r.iterations = std::stoi(f[10]);
    r.converged = f[11] == "1";
    r.flagged = f[12] == "1";
    r.message = f[13];
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_json(const std::filesystem::path& path, const std::vector<CellSummary>& cells) {
  json arr = json::array();
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  for (const auto& c : cells) {
    arr.push_back({{"irs_configs", c.irs_configs},
                   {"snr_db", c.snr_db},
                   {"estimator", c.estimator},
                   {"count", c.count},
                   {"flagged", c.flagged},
                   {"nmse", {{"median", num(c.median_nmse)}, {"mean", num(c.mean_nmse)}}},
                   {"srr", {{"median", num(c.median_srr)}, {"mean", num(c.mean_srr)}}},
                   {"ser", {{"median", num(c.median_ser)}, {"mean", num(c.mean_ser)}}},
                   {"ser_oracle", {{"median", num(c.median_ser_oracle)}, {"mean", num(c.mean_ser_oracle)}}},
                   {"elapsed_s", {{"median", num(c.median_elapsed)}, {"mean", num(c.mean_elapsed)}}}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << json({{"cells", arr}}).dump(2) << '\n';
}

std::vector<std::filesystem::path> write_plot_data(const std::filesystem::path& dir,
                                                   const std::vector<CellSummary>& cells) {
  std::vector<std::string> names;
  std::vector<std::pair<Index, double>> rows;
  std::map<std::tuple<Index, double, std::string>, const CellSummary*> lookup;
  for (const auto& c : cells) {
    if (std::find(names.begin(), names.end(), c.estimator) == names.end()) names.push_back(c.estimator);
    if (std::find(rows.begin(), rows.end(), std::pair{c.irs_configs, c.snr_db}) == rows.end()) {
      rows.emplace_back(c.irs_configs, c.snr_db);
    }
    lookup[{c.irs_configs, c.snr_db, c.estimator}] = &c;
  }
  std::sort(rows.begin(), rows.end());

  struct Panel {
    const char* file;
    double (*value)(const CellSummary&);
    bool oracle_column;
  };
  const Panel panels[] = {
      {"plot_nmse.csv", [](const CellSummary& c) { return c.median_nmse; }, false},
      {"plot_srr.csv", [](const CellSummary& c) { return c.mean_srr; }, false},
      {"plot_runtime.csv", [](const CellSummary& c) { return c.median_elapsed; }, false},
      {"plot_ser.csv", [](const CellSummary& c) { return c.mean_ser; }, true},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& p : panels) {
    const auto path = dir / p.file;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "irs_configs,snr_db";
    for (const auto& n : names) out << ',' << n;
    if (p.oracle_column) out << ",oracle";
    out << '\n';
    for (const auto& [k, snr] : rows) {
      out << k << ',' << fmt_double(snr);
      double oracle = kNaN;
      for (const auto& n : names) {
        const auto it = lookup.find({k, snr, n});
        out << ',';
        if (it != lookup.end()) {
          out << fmt_double(p.value(*it->second));
          oracle = it->second->mean_ser_oracle;
        }
      }
      if (p.oracle_column) out << ',' << fmt_double(oracle);
      out << '\n';
    }
    written.push_back(path);
  }
  return written;
}

}  // namespace krosbl
