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

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace krosbl {

/// Factored prior variances; the full prior variance of g is
/// kron(gamma1, gamma2, gamma3).
struct HyperParams {
  rvec gamma1;
  rvec gamma2;
  rvec gamma3;

  static HyperParams ones(Index n);
  Index grid_size() const { return gamma1.size(); }
  /// kron(gamma1, gamma2, gamma3). Test and diagnostic use only.
  rvec product() const;
};

/// Gaussian posterior of g, diagonal only.
struct Posterior {
  cvec mu;
  rvec sigma_diag;
  rvec d;  // sigma_diag + |mu|^2
  double neg_log_likelihood = 0.0;  // -log p(y; gamma, sigma2) at the prior used
};

enum class Variant { am, svd, classic, omp };

std::string to_string(Variant v);
/// Parses "am", "svd", "classic" or "omp". Throws ConfigError otherwise.
Variant parse_variant(const std::string& name);

struct SolverConfig {
  Variant variant = Variant::svd;
  double epsilon = 1e-3;
  int max_iterations = 200;
  int am_max_sweeps = 50;
  double am_tol = 1e-6;
  double gamma_floor = 1e-12;
  /// OMP: maximum number of atoms.
  Index omp_sparsity = 32;
  /// OMP: stop once the residual norm drops to this value. Negative selects
  /// sqrt(B K sigma2), the expected noise norm.
  double omp_residual_tol = -1.0;

  void validate() const;
};

struct EstimateResult {
  Variant variant = Variant::svd;
  cvec g_hat;
  HyperParams hyper;
  rvec gamma_full;  // classic SBL only
  int iterations = 0;
  bool converged = false;
  /// Negative log-likelihood per EM iteration. For OMP: residual norm per
  /// selected atom.
  std::vector<double> nll_trace;
  std::vector<Index> selected;  // OMP selection order
  double elapsed = 0.0;
  bool flagged = false;
  std::string message;
};

/// Raised when the likelihood becomes non-finite; carries the state at the
/// failing iteration.
class EstimationAborted : public NumericalError {
 public:
  EstimationAborted(const std::string& what, int iteration, HyperParams hyper)
      : NumericalError(what), iteration_(iteration), hyper_(std::move(hyper)) {}
  int iteration() const { return iteration_; }
  const HyperParams& hyper() const { return hyper_; }

 private:
  int iteration_;
  HyperParams hyper_;
};

/// Posterior under a Kronecker prior via eigendecompositions of the three
/// small Gram matrices; never forms the N^3 x N^3 covariance.
Posterior e_step_fast(const Dictionary& dict, const cvec& y_tilde, const HyperParams& hyper,
                      double sigma2);

/// Posterior under an arbitrary diagonal prior (length N^3) via Cholesky of
/// the (B K) x (B K) system sigma2 I + H Gamma H^H.
Posterior e_step_classic(const Dictionary& dict, const cvec& y_tilde, const rvec& gamma, double sigma2);

/// Objective log|diag(gamma)| + d^T gamma^{-1} for gamma = kron of factors.
double m_step_objective(const rvec& d, const HyperParams& hyper);

/// Right-hand sides of the coordinate stationarity equations evaluated at
/// `hyper`; entry j is the update for gamma_j with the others held fixed.
std::array<rvec, 3> am_coordinate_updates(const rvec& d, const HyperParams& hyper);

/// Cyclic exact minimization over (gamma1, gamma2, gamma3), warm-started at
/// `init`; returns gamma1, gamma2 normalized to unit norm.
HyperParams m_step_am(const rvec& d, const HyperParams& init, const SolverConfig& cfg);

/// Projection of the unconstrained minimizer d onto Kronecker structure by
/// two nested rank-1 approximations.
HyperParams m_step_svd(const rvec& d);

EstimateResult kro_sbl_estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                                const SolverConfig& cfg);

EstimateResult classic_sbl_estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                                    const SolverConfig& cfg);

/// Orthogonal matching pursuit over the lazy sensing operator.
EstimateResult omp_estimate(const Dictionary& dict, const cvec& y_tilde, Index sparsity_k,
                            double residual_tol = 0.0);

/// Dispatches on cfg.variant and records wall-clock time of the call.
EstimateResult estimate(const Dictionary& dict, const cvec& y_tilde, double sigma2,
                        const SolverConfig& cfg);

}  // namespace krosbl
