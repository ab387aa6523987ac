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

#pragma once

#include "krosbl/channel.hpp"
#include "krosbl/metrics.hpp"
#include "krosbl/sbl.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace krosbl {

struct EstimatorSpec {
  std::string name;  // column label in reports
  SolverConfig solver;
};

/// One Monte-Carlo sweep over SNR (and optionally several IRS
/// configuration counts) for a set of estimators.
struct SweepSpec {
  SystemConfig system;
  std::vector<double> snr_db{0.0, 10.0, 20.0, 30.0};
  /// IRS configuration counts to sweep; empty means system.irs_configs.
  std::vector<Index> irs_config_counts{4, 10};
  int trials = 50;
  std::vector<EstimatorSpec> estimators;
  Index ser_symbols = 10'000;
  SupportRule support;
  /// Directory receiving records.csv, summary.json and plot data. Empty
  /// disables persistence.
  std::filesystem::path output;
  int jobs = 1;
  /// Reuse complete trials from records.partial.csv left by an interrupted
  /// run whose sweep.json matches this spec.
  bool resume = true;

  std::vector<Index> config_counts() const;
  void validate() const;
};

/// EM iteration cap for the KroSBL variants in sweeps; they stop on the
/// epsilon rule long before it at the default scale.
inline constexpr int kKroSblMaxIterations = 50'000;

/// Default estimator set: AM and SVD with kKroSblMaxIterations, classic
/// SBL and OMP with default solver settings.
std::vector<EstimatorSpec> default_estimators();

struct TrialRecord {
  std::uint64_t seed = 0;
  int trial = 0;
  Index irs_configs = 0;
  double snr_db = 0.0;
  std::string estimator;
  double nmse = 0.0;
  double srr = 0.0;
  double ser = 0.0;
  double ser_oracle = 0.0;
  double elapsed_s = 0.0;
  int iterations = 0;
  bool converged = false;
  bool flagged = false;
  std::string message;
};

struct CellSummary {
  Index irs_configs = 0;
  double snr_db = 0.0;
  std::string estimator;
  int count = 0;    // unflagged records
  int flagged = 0;  // excluded records
  double median_nmse = 0.0, mean_nmse = 0.0;
  double median_srr = 0.0, mean_srr = 0.0;
  double median_ser = 0.0, mean_ser = 0.0;
  double median_ser_oracle = 0.0, mean_ser_oracle = 0.0;
  double median_elapsed = 0.0, mean_elapsed = 0.0;
};

/// All records of one trial: every SNR point and every estimator run on
/// identical measurement data.
std::vector<TrialRecord> run_trial(const SweepSpec& spec, Index irs_configs, int trial);

/// Canonical JSON of the fields that determine metric values (everything
/// except jobs, output and resume).
std::string sweep_fingerprint(const SweepSpec& spec);

/// Runs all trials (spec.jobs threads), persisting records as trials
/// complete. Writes sweep.json (the fingerprint) next to the records. Output order is deterministic: (irs_configs, trial, snr,
/// estimator).
std::vector<TrialRecord> run_sweep(const SweepSpec& spec);

/// Median/mean per (irs_configs, snr, estimator); flagged records are
/// counted but excluded from the statistics.
std::vector<CellSummary> aggregate(const std::vector<TrialRecord>& records);

double median(std::vector<double> values);

void write_records_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_records_csv(const std::filesystem::path& path);
std::string records_csv_header();
std::string to_csv_row(const TrialRecord& r);

void write_summary_json(const std::filesystem::path& path, const std::vector<CellSummary>& cells);

/// Per-panel plot data (NMSE, SRR, run time, SER): one row per
/// (irs_configs, snr_db), one column per estimator. Returns written files.
std::vector<std::filesystem::path> write_plot_data(const std::filesystem::path& dir,
                                                   const std::vector<CellSummary>& cells);

}  // namespace krosbl
