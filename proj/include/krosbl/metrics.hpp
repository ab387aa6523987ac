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
#include "krosbl/types.hpp"

#include <span>
#include <vector>

namespace krosbl {

/// supp(g_hat) = { i : |g_hat_i| > relative * max |g_hat| }.
struct SupportRule {
  double relative = 1e-2;
};

/// Channel NMSE averaged over the IRS configurations in `theta`.
/// Throws NumericalError when a true cascaded channel has zero norm.
double nmse(const GroundTruth& truth, const cvec& g_hat, const Dictionary& dict, const cmat& theta);

std::vector<Index> exact_support(const cvec& g);
std::vector<Index> estimated_support(const cvec& g_hat, const SupportRule& rule);

/// |est & true| / (|est \ true| + |true|) for sorted index sets.
double support_recovery_rate(std::span<const Index> true_support, std::span<const Index> est_support);

double srr(const cvec& g_true, const cvec& g_hat, const SupportRule& rule = {});

struct SerOutcome {
  double ser = 1.0;
  bool flagged = false;
};

/// Single-stream QPSK link over the true cascaded channel for a fresh IRS
/// configuration. The transmitter beamforms along the leading right singular
/// vector of the channel estimate, the receiver applies the least-squares
/// equalizer of the estimated effective channel. With `oracle` the true
/// channel replaces the estimate. Data noise variance is cfg.sigma2.
SerOutcome ser_experiment(const GroundTruth& truth, const cvec& g_hat, const Dictionary& dict,
                          const SystemConfig& cfg, Index n_symbols, Rng& rng, bool oracle = false);

}  // namespace krosbl
