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

#include <cmath>
#include <limits>

namespace krosbl {

namespace {

Index cube_root(Index size) {
  auto n = static_cast<Index>(std::llround(std::cbrt(static_cast<double>(size))));
  if (n < 1 || n * n * n != size) throw DimensionError("M-step: length of d must be N^3");
  return n;
}

void check_d(const rvec& d) {
  for (Index i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) throw NumericalError("M-step: non-finite entry in d");
    if (d[i] < 0.0) throw ConfigError("M-step: d must be nonnegative");
  }
}

// Exact minimizer over factor j with the other two fixed.
rvec coordinate_update(const rvec& d, const HyperParams& h, int j) {
  const Index n = h.grid_size();
  const rvec inv1 = h.gamma1.cwiseInverse();
  const rvec inv2 = h.gamma2.cwiseInverse();
  const rvec inv3 = h.gamma3.cwiseInverse();
  rvec out = rvec::Zero(n);
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index i2 = 0; i2 < n; ++i2) {
      const double* slab = d.data() + (i1 * n + i2) * n;
      switch (j) {
        case 0: {
          double acc = 0.0;
          for (Index i3 = 0; i3 < n; ++i3) acc += slab[i3] * inv3[i3];
          out[i1] += acc * inv2[i2];
          break;
        }
        case 1: {
          double acc = 0.0;
          for (Index i3 = 0; i3 < n; ++i3) acc += slab[i3] * inv3[i3];
          out[i2] += acc * inv1[i1];
          break;
        }
        default: {
          const double w = inv1[i1] * inv2[i2];
          for (Index i3 = 0; i3 < n; ++i3) out[i3] += slab[i3] * w;
          break;
        }
      }
    }
  }
  return out / static_cast<double>(n * n);
}

void normalize(HyperParams& h) {
  const double n1 = h.gamma1.norm();
  const double n2 = h.gamma2.norm();
  if (n1 > 0.0 && n2 > 0.0) {
    h.gamma1 /= n1;
    h.gamma2 /= n2;
    h.gamma3 *= n1 * n2;
  }
}

// Leading singular pair of a nonnegative matrix with entrywise nonnegative
// singular vectors; returns (sigma * u, v).
// Leading singular pair of m through the eigendecomposition of the small
// Gram matrix m^T m. Returns (sigma * u, v) with v of unit norm.
std::pair<rvec, rvec> nonnegative_rank_one(const rmat& m) {
  const rmat gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<rmat> eig(gram);
  if (eig.info() != Eigen::Success) throw NumericalError("M-step: eigendecomposition failed");
  rvec v = eig.eigenvectors().col(gram.rows() - 1);
  if (v.sum() < 0.0) v = -v;
  v = v.cwiseMax(0.0);
  const double nv = v.norm();
  if (nv == 0.0) return {rvec::Zero(m.rows()), rvec::Zero(m.cols())};
  v /= nv;
  rvec u = (m * v).cwiseMax(0.0);
  return {u, v};
}

}  // namespace

HyperParams HyperParams::ones(Index n) {
  return {rvec::Ones(n), rvec::Ones(n), rvec::Ones(n)};
}

rvec HyperParams::product() const {
  const Index n = grid_size();
  rvec out(n * n * n);
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index i2 = 0; i2 < n; ++i2) {
      out.segment((i1 * n + i2) * n, n) = gamma1[i1] * gamma2[i2] * gamma3;
    }
  }
  return out;
}

double m_step_objective(const rvec& d, const HyperParams& hyper) {
  const Index n = hyper.grid_size();
  if (d.size() != n * n * n) throw DimensionError("m_step_objective: length of d must be N^3");
  double acc = 0.0;
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index i2 = 0; i2 < n; ++i2) {
      for (Index i3 = 0; i3 < n; ++i3) {
        const double g = hyper.gamma1[i1] * hyper.gamma2[i2] * hyper.gamma3[i3];
        acc += std::log(g) + d[(i1 * n + i2) * n + i3] / g;
      }
    }
  }
  return acc;
}

std::array<rvec, 3> am_coordinate_updates(const rvec& d, const HyperParams& hyper) {
  const Index n = hyper.grid_size();
  if (d.size() != n * n * n) throw DimensionError("am_coordinate_updates: length of d must be N^3");
  return {coordinate_update(d, hyper, 0), coordinate_update(d, hyper, 1),
          coordinate_update(d, hyper, 2)};
}

HyperParams m_step_am(const rvec& d, const HyperParams& init, const SolverConfig& cfg) {
  const Index n = cube_root(d.size());
  if (init.gamma1.size() != n || init.gamma2.size() != n || init.gamma3.size() != n) {
    throw DimensionError("m_step_am: initial hyperparameters do not match d");
  }
  check_d(d);
  const double floor = std::max(cfg.gamma_floor, std::numeric_limits<double>::min());
  auto clamp = [floor](rvec& v) { v = v.cwiseMax(floor); };

  HyperParams h = init;
  clamp(h.gamma1);
  clamp(h.gamma2);
  clamp(h.gamma3);
  normalize(h);
  for (int sweep = 0; sweep < cfg.am_max_sweeps; ++sweep) {
    const HyperParams prev = h;
    h.gamma1 = coordinate_update(d, h, 0);
    clamp(h.gamma1);
    h.gamma2 = coordinate_update(d, h, 1);
    clamp(h.gamma2);
    h.gamma3 = coordinate_update(d, h, 2);
    clamp(h.gamma3);
    normalize(h);
    double change = 0.0;
    change = std::max(change, (h.gamma1 - prev.gamma1).norm() / std::max(prev.gamma1.norm(), floor));
    change = std::max(change, (h.gamma2 - prev.gamma2).norm() / std::max(prev.gamma2.norm(), floor));
    change = std::max(change, (h.gamma3 - prev.gamma3).norm() / std::max(prev.gamma3.norm(), floor));
    if (change < cfg.am_tol) break;
  }
  return h;
}

HyperParams m_step_svd(const rvec& d) {
  const Index n = cube_root(d.size());
  check_d(d);
  if (d.isZero(0.0)) return {rvec::Zero(n), rvec::Zero(n), rvec::Zero(n)};

  // vec(D1) = d with D1 of shape N^2 x N, so d = kron(gamma1, gamma_tilde).
  const Eigen::Map<const rmat> d1(d.data(), n * n, n);
  auto [gamma_tilde, gamma1] = nonnegative_rank_one(d1);
  // vec(D2) = gamma_tilde with D2 of shape N x N, so gamma_tilde = kron(gamma2, gamma3).
  const Eigen::Map<const rmat> d2(gamma_tilde.data(), n, n);
  auto [gamma3, gamma2] = nonnegative_rank_one(d2);
  return {std::move(gamma1), std::move(gamma2), std::move(gamma3)};
}

}  // namespace krosbl
