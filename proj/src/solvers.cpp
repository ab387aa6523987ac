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

#include "krosbl/sbl.hpp"

#include <chrono>
#include <cmath>

namespace krosbl {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::am: return "am";
    case Variant::svd: return "svd";
    case Variant::classic: return "classic";
    case Variant::omp: return "omp";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "am") return Variant::am;
  if (name == "svd") return Variant::svd;
  if (name == "classic") return Variant::classic;
  if (name == "omp") return Variant::omp;
  throw ConfigError("unknown estimator variant '" + name + "' (expected am, svd, classic or omp)");
}

void SolverConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("solver: epsilon must be > 0");
  if (max_iterations < 1) throw ConfigError("solver: max_iterations must be >= 1");
  if (am_max_sweeps < 1) throw ConfigError("solver: am_max_sweeps must be >= 1");
  if (!(am_tol > 0.0)) throw ConfigError("solver: am_tol must be > 0");
  if (!(gamma_floor >= 0.0)) throw ConfigError("solver: gamma_floor must be >= 0");
  if (omp_sparsity < 1) throw ConfigError("solver: omp_sparsity must be >= 1");
}

namespace {

template <typename EStep, typename MStep, typename Snapshot>
void run_em(EstimateResult& res, Index unknowns, const SolverConfig& cfg, EStep&& e_step,
            MStep&& m_step, Snapshot&& snapshot) {
  cvec mu_prev = cvec::Ones(unknowns);
  cvec mu = cvec::Zero(unknowns);
  int r = 0;
  while ((mu - mu_prev).norm() > cfg.epsilon && r < cfg.max_iterations) {
    Posterior post = e_step();
    if (!std::isfinite(post.neg_log_likelihood) || !post.mu.allFinite()) {
      throw EstimationAborted("non-finite likelihood at EM iteration " + std::to_string(r + 1), r + 1,
                              snapshot());
    }
    res.nll_trace.push_back(post.neg_log_likelihood);
    mu_prev.swap(mu);
    mu = std::move(post.mu);
    m_step(post.d);
    ++r;
  }
  res.iterations = r;
  res.converged = (mu - mu_prev).norm() <= cfg.epsilon;
  res.g_hat = std::move(mu);
}

}  // namespace

EstimateResult kro_sbl_estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                                const SolverConfig& cfg) {
  cfg.validate();
  if (cfg.variant != Variant::am && cfg.variant != Variant::svd) {
    throw ConfigError("kro_sbl_estimate: variant must be am or svd");
  }
  const Index n = dict.grid_size();
  EstimateResult res;
  res.variant = cfg.variant;
  HyperParams hyper = HyperParams::ones(n);
  run_em(
      res, n * n * n, cfg, [&] { return e_step_fast(dict, y_tilde, hyper, sigma2); },
      [&](const rvec& d) {
        hyper = cfg.variant == Variant::am ? m_step_am(d, hyper, cfg) : m_step_svd(d);
      },
      [&] { return hyper; });
  res.hyper = std::move(hyper);
  return res;
}

EstimateResult classic_sbl_estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                                    const SolverConfig& cfg) {
  cfg.validate();
  const Index n = dict.grid_size();
  EstimateResult res;
  res.variant = Variant::classic;
  rvec gamma = rvec::Ones(n * n * n);
  run_em(
      res, n * n * n, cfg, [&] { return e_step_classic(dict, y_tilde, gamma, sigma2); },
      [&](const rvec& d) { gamma = d; }, [&] { return HyperParams{}; });
  res.gamma_full = std::move(gamma);
  return res;
}

EstimateResult estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                        const SolverConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  EstimateResult res;
  switch (cfg.variant) {
    case Variant::am:
    case Variant::svd:
      res = kro_sbl_estimate(dict, y_tilde, sigma2, cfg);
      break;
    case Variant::classic:
      res = classic_sbl_estimate(dict, y_tilde, sigma2, cfg);
      break;
    case Variant::omp: {
      cfg.validate();
      const double tol = cfg.omp_residual_tol >= 0.0
                             ? cfg.omp_residual_tol
                             : std::sqrt(static_cast<double>(y_tilde.size()) * sigma2);
      res = omp_estimate(dict, y_tilde, cfg.omp_sparsity, tol);
      break;
    }
  }
  res.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace krosbl
