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

#include <algorithm>

namespace krosbl {

EstimateResult omp_estimate(const Dictionary& dict, const cvec& y_tilde, Index sparsity_k,
                            double residual_tol) {
  const KronOperator op = dict.sensing();
  if (y_tilde.size() != op.rows()) throw DimensionError("omp_estimate: observation length mismatch");
  if (sparsity_k < 1 || sparsity_k > op.rows()) {
    throw ConfigError("omp_estimate: sparsity must lie in [1, B K]");
  }
  const rvec norms = op.column_norms();

  EstimateResult res;
  res.variant = Variant::omp;
  res.g_hat = cvec::Zero(op.cols());
  cvec residual = y_tilde;
  cmat atoms(op.rows(), 0);
  cvec coef;
  std::vector<bool> used(static_cast<std::size_t>(op.cols()), false);

  while (static_cast<Index>(res.selected.size()) < sparsity_k && residual.norm() > residual_tol) {
    const cvec corr = op.apply_adjoint(residual);
    Index best = -1;
    double best_score = -1.0;
    for (Index i = 0; i < corr.size(); ++i) {
      if (used[static_cast<std::size_t>(i)] || norms[i] <= 0.0) continue;
      const double score = std::abs(corr[i]) / norms[i];
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    if (best < 0) break;

    cmat grown(op.rows(), atoms.cols() + 1);
    grown << atoms, op.column(best);
    Eigen::ColPivHouseholderQR<cmat> qr(grown);
    if (qr.rank() < grown.cols()) {
      res.flagged = true;
      res.message = "selected columns became rank-deficient; stopped early";
      break;
    }
    atoms.swap(grown);
    used[static_cast<std::size_t>(best)] = true;
    res.selected.push_back(best);
    coef = qr.solve(y_tilde);
    residual = y_tilde - atoms * coef;
    res.nll_trace.push_back(residual.norm());
  }

  for (std::size_t k = 0; k < res.selected.size(); ++k) {
    res.g_hat[res.selected[k]] = coef[static_cast<Index>(k)];
  }
  res.iterations = static_cast<int>(res.selected.size());
  res.converged = residual.norm() <= residual_tol;
  return res;
}

}  // namespace krosbl
