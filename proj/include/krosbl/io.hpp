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
#include "krosbl/experiments.hpp"
#include "krosbl/sbl.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>

namespace krosbl {

using json = nlohmann::json;

// Complex scalars are [re, im] pairs. Matrices are objects
// {"rows": r, "cols": c, "data": [...]} with data in column-major order;
// vectors are plain arrays.
json to_json(const cvec& v);
json to_json(const cmat& m);
json to_json(const rvec& v);
cvec cvec_from_json(const json& j);
cmat cmat_from_json(const json& j);
rvec rvec_from_json(const json& j);

json to_json(const SystemConfig& cfg);
/// Fields absent from `j` keep their values in `base`.
SystemConfig system_config_from_json(const json& j, SystemConfig base = {});

json to_json(const SolverConfig& cfg);
SolverConfig solver_config_from_json(const json& j, SolverConfig base = {});

json to_json(const GroundTruth& t);
GroundTruth ground_truth_from_json(const json& j);

json to_json(const MeasurementSet& m);
MeasurementSet measurement_set_from_json(const json& j);

json to_json(const HyperParams& h);
json to_json(const EstimateResult& r);

/// Sweep configuration. Recognized keys: "system", "solver" (shared
/// overrides), "estimators" (list of {"name", "variant", ...solver keys}),
/// "snr_db", "irs_configs", "trials", "ser_symbols", "support_threshold",
/// "jobs", "output".
SweepSpec sweep_spec_from_json(const json& j);
json to_json(const SweepSpec& spec);

/// A synthesized problem: configuration, measurements and, when known, the
/// ground truth.
struct Problem {
  SystemConfig config;
  MeasurementSet measurements;
  std::optional<GroundTruth> truth;
};

json to_json(const Problem& p);
Problem problem_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace krosbl
