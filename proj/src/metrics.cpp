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

#include "krosbl/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace krosbl {

double nmse(const GroundTruth& truth, const cvec& g_hat, const Dictionary& dict, const cmat& theta) {
  if (theta.cols() == 0) throw DimensionError("nmse: no IRS configurations");
  const cmat cascade = reconstruct_cascade(dict, g_hat);
  const Index b = truth.h_bs.rows();
  double acc = 0.0;
  for (Index k = 0; k < theta.cols(); ++k) {
    const cmat h = cascaded_channel(truth.h_bs, truth.h_ms, theta.col(k));
    const double ref = h.squaredNorm();
    if (!(ref > 0.0)) throw NumericalError("nmse: true cascaded channel has zero norm");
    acc += (h - cascade_for_config(cascade, theta.col(k), b)).squaredNorm() / ref;
  }
  return acc / static_cast<double>(theta.cols());
}

std::vector<Index> exact_support(const cvec& g) {
  std::vector<Index> s;
  for (Index i = 0; i < g.size(); ++i) {
    if (g[i] != cplx(0.0, 0.0)) s.push_back(i);
  }
  return s;
}

std::vector<Index> estimated_support(const cvec& g_hat, const SupportRule& rule) {
  std::vector<Index> s;
  if (g_hat.size() == 0) return s;
  const double peak = g_hat.cwiseAbs().maxCoeff();
  if (!(peak > 0.0)) return s;
  const double thr = rule.relative * peak;
  for (Index i = 0; i < g_hat.size(); ++i) {
    if (std::abs(g_hat[i]) > thr) s.push_back(i);
  }
  return s;
}

double support_recovery_rate(std::span<const Index> true_support, std::span<const Index> est_support) {
  if (true_support.empty()) throw std::invalid_argument("srr: true support is empty");
  std::vector<Index> common;
  std::set_intersection(true_support.begin(), true_support.end(), est_support.begin(),
                        est_support.end(), std::back_inserter(common));
  const auto extra = est_support.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(extra + true_support.size());
}

double srr(const cvec& g_true, const cvec& g_hat, const SupportRule& rule) {
  if (g_true.size() != g_hat.size()) throw DimensionError("srr: length mismatch");
  const auto t = exact_support(g_true);
  const auto e = estimated_support(g_hat, rule);
  return support_recovery_rate(t, e);
}

SerOutcome ser_experiment(const GroundTruth& truth, const cvec& g_hat, const Dictionary& dict,
                          const SystemConfig& cfg, Index n_symbols, Rng& rng, bool oracle) {
  if (n_symbols < 1) throw ConfigError("ser_experiment: n_symbols must be >= 1");
  const Index b = truth.h_bs.rows();
  std::bernoulli_distribution coin(0.5);
  cvec theta(truth.h_bs.cols());
  for (Index l = 0; l < theta.size(); ++l) theta[l] = coin(rng) ? cfg.irs_amplitude() : -cfg.irs_amplitude();

  const cmat h_true = cascaded_channel(truth.h_bs, truth.h_ms, theta);
  const cmat h_est = oracle ? h_true : cascade_for_config(reconstruct_cascade(dict, g_hat), theta, b);

  SerOutcome out;
  cvec beam = cvec::Zero(h_true.cols());
  beam[0] = 1.0;
  if (h_est.squaredNorm() > 0.0) {
    Eigen::JacobiSVD<cmat> svd(h_est, Eigen::ComputeThinV);
    beam = svd.matrixV().col(0);
  }
  const cvec eff_true = h_true * beam;
  const cvec eff_est = h_est * beam;
  const double gain = eff_est.squaredNorm();
  if (!(gain > 1e-24 * std::max(h_true.squaredNorm(), 1e-300))) out.flagged = true;

  const double amp = 1.0 / std::sqrt(2.0);
  const std::array<cplx, 4> qpsk{cplx(amp, amp), cplx(-amp, amp), cplx(-amp, -amp), cplx(amp, -amp)};
  auto decide = [](cplx s) -> int {
    const bool re = s.real() >= 0.0;
    const bool im = s.imag() >= 0.0;
    if (re && im) return 0;
    if (!re && im) return 1;
    if (!re) return 2;
    return 3;
  };

  std::uniform_int_distribution<int> pick(0, 3);
  const double noise_std = std::sqrt(cfg.sigma2 / 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Index errors = 0;
  cvec rx(b);
  for (Index s = 0; s < n_symbols; ++s) {
    const int tx = pick(rng);
    for (Index i = 0; i < b; ++i) {
      const double re = noise_std * normal(rng);
      const double im = noise_std * normal(rng);
      rx[i] = eff_true[i] * qpsk[static_cast<std::size_t>(tx)] + cplx(re, im);
    }
    const cplx eq = out.flagged ? cplx(0.0, 0.0) : eff_est.dot(rx) / gain;
    if (decide(eq) != tx) ++errors;
  }
  out.ser = static_cast<double>(errors) / static_cast<double>(n_symbols);
  return out;
}

}  // namespace krosbl
