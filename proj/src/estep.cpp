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
#include <mutex>
#include <numbers>

#include <lapacke.h>

// Present when LAPACK is backed by OpenBLAS. Used to pin its thread pool to
// one thread so results do not depend on the host core count.
extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace krosbl {

namespace {

void check_noise(double sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
    throw ConfigError("E-step: noise variance must be finite and > 0");
  }
}

void check_prior(const rvec& v, Index n, const char* name) {
  if (v.size() != n) throw DimensionError(std::string("E-step: ") + name + " has the wrong length");
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw NumericalError(std::string("E-step: non-finite ") + name);
    if (v[i] < 0.0) throw ConfigError(std::string("E-step: negative entry in ") + name);
  }
}

rvec kron_real(const rvec& a, const rvec& b) {
  rvec out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a[i] * b;
  return out;
}

// Row (a * K + a') holds phi(a, :) .* conj(phi(a', :)).
cmat pair_products(const cmat& phi) {
  const Index k = phi.rows();
  cmat e(k * k, phi.cols());
  for (Index a = 0; a < k; ++a) {
    for (Index ap = 0; ap < k; ++ap) {
      e.row(a * k + ap) = phi.row(a).cwiseProduct(phi.row(ap).conjugate());
    }
  }
  return e;
}

}  // namespace

Posterior e_step_fast(const Dictionary& dict, const cvec& y_tilde, const HyperParams& hyper,
                      double sigma2) {
  check_noise(sigma2);
  const Index n = dict.grid_size();
  check_prior(hyper.gamma1, n, "gamma1");
  check_prior(hyper.gamma2, n, "gamma2");
  check_prior(hyper.gamma3, n, "gamma3");
  const std::array<const cmat*, 3> phi{&dict.phi_l, &dict.phi_m, &dict.phi_b};
  const std::array<const rvec*, 3> gam{&hyper.gamma1, &hyper.gamma2, &hyper.gamma3};

  Index rows = 1;
  for (auto* p : phi) rows *= p->rows();
  if (y_tilde.size() != rows) throw DimensionError("E-step: observation length mismatch");

  std::vector<cmat> u_adj(3), v(3), v_adj(3);
  std::vector<rmat> power_t(3);
  rvec pi = rvec::Ones(1);
  for (std::size_t j = 0; j < 3; ++j) {
    cmat gram = (*phi[j]) * gam[j]->asDiagonal() * phi[j]->adjoint();
    gram = 0.5 * (gram + gram.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<cmat> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericalError("E-step: eigendecomposition failed");
    u_adj[j] = eig.eigenvectors().adjoint();
    v[j] = u_adj[j] * (*phi[j]);
    v_adj[j] = v[j].adjoint();
    power_t[j] = v[j].cwiseAbs2().transpose();
    pi = kron_real(pi, eig.eigenvalues().cwiseMax(0.0));
  }

  const rvec denom = pi.array() + sigma2;
  const cvec z = kron_mode_apply<cplx>(std::span<const cmat>(u_adj), y_tilde);
  const cvec w = z.array() / denom.array().cast<cplx>();
  const cvec back = kron_mode_apply<cplx>(std::span<const cmat>(v_adj), w);
  const rvec inv_denom = denom.cwiseInverse();
  const rvec quad = kron_mode_apply<double>(std::span<const rmat>(power_t), inv_denom);

  Posterior post;
  post.mu.resize(n * n * n);
  post.sigma_diag.resize(n * n * n);
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index i2 = 0; i2 < n; ++i2) {
      const double g12 = hyper.gamma1[i1] * hyper.gamma2[i2];
      for (Index i3 = 0; i3 < n; ++i3) {
        const Index i = (i1 * n + i2) * n + i3;
        const double gi = g12 * hyper.gamma3[i3];
        post.mu[i] = gi * back[i];
        post.sigma_diag[i] = std::clamp(gi - gi * gi * quad[i], 0.0, gi);
      }
    }
  }
  post.d = post.sigma_diag + post.mu.cwiseAbs2();
  post.neg_log_likelihood = static_cast<double>(rows) * std::log(std::numbers::pi) +
                            denom.array().log().sum() +
                            (z.cwiseAbs2().array() * inv_denom.array()).sum();
  return post;
}

Posterior e_step_classic(const Dictionary& dict, const cvec& y_tilde, const rvec& gamma, double sigma2) {
  check_noise(sigma2);
  const Index n = dict.grid_size();
  check_prior(gamma, n * n * n, "gamma");
  const cmat& phi1 = dict.phi_l;
  const cmat& phi2 = dict.phi_m;
  const cmat& phi3 = dict.phi_b;
  const Index k1 = phi1.rows(), k2 = phi2.rows(), k3 = phi3.rows();
  const Index k12 = k1 * k2;
  const Index rows = k12 * k3;
  if (y_tilde.size() != rows) throw DimensionError("E-step: observation length mismatch");

  static std::once_flag single_thread;
  std::call_once(single_thread, [] {
    if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
  });

  // sigma2 I + H diag(gamma) H^H, contracted one Kronecker mode at a time.
  const cmat e1 = pair_products(phi1);
  const cmat e2 = pair_products(phi2);
  const cmat e3 = pair_products(phi3);
  const Eigen::Map<const rmat> gam_mat(gamma.data(), n * n, n);  // (i2 i3, i1)
  const cmat t1 = e1 * gam_mat.transpose().cast<cplx>();           // (a a', i2 i3)
  cmat t_all(n, k1 * k1 * k2 * k2);
  for (Index p = 0; p < k1 * k1; ++p) {
    const cmat mode = t1.row(p).reshaped(n, n);  // (i3, i2)
    const cmat t2 = e2 * mode.transpose();       // (b b', i3)
    t_all.middleCols(p * k2 * k2, k2 * k2) = t2.transpose();
  }
  const cmat c_part = e3 * t_all;  // (c c', (a a') (b b'))
  cmat cov(rows, rows);
  for (Index a = 0; a < k1; ++a) {
    for (Index ap = 0; ap < k1; ++ap) {
      for (Index b = 0; b < k2; ++b) {
        for (Index bp = 0; bp < k2; ++bp) {
          const Index col = (a * k1 + ap) * k2 * k2 + b * k2 + bp;
          for (Index c = 0; c < k3; ++c) {
            for (Index cp = 0; cp < k3; ++cp) {
              cov((a * k2 + b) * k3 + c, (ap * k2 + bp) * k3 + cp) = c_part(c * k3 + cp, col);
            }
          }
        }
      }
    }
  }
  cov.diagonal().array() += sigma2;

  // Cholesky factor, then the explicit inverse from the same factor.
  const int dim = static_cast<int>(rows);
  auto* raw = reinterpret_cast<lapack_complex_double*>(cov.data());
  if (LAPACKE_zpotrf(LAPACK_COL_MAJOR, 'L', dim, raw, dim) != 0) {
    throw NumericalError("E-step: covariance is not positive definite");
  }
  double logdet = 0.0;
  for (Index i = 0; i < rows; ++i) logdet += 2.0 * std::log(cov(i, i).real());
  cvec w = y_tilde;
  LAPACKE_zpotrs(LAPACK_COL_MAJOR, 'L', dim, 1, raw, dim, reinterpret_cast<lapack_complex_double*>(w.data()),
                 dim);
  if (LAPACKE_zpotri(LAPACK_COL_MAJOR, 'L', dim, raw, dim) != 0) {
    throw NumericalError("E-step: covariance inversion failed");
  }
  const cmat c_inv = cov.selfadjointView<Eigen::Lower>();
  const cvec back = dict.sensing().apply_adjoint(w);

  Posterior post;
  post.mu = gamma.cast<cplx>().cwiseProduct(back);
  post.neg_log_likelihood = static_cast<double>(rows) * std::log(std::numbers::pi) + logdet +
                            y_tilde.dot(w).real();

  // diag(H^H C^{-1} H), contracting the explicit inverse mode by mode.
  cmat y3(rows, k12 * n);
  for (Index cb = 0; cb < k12; ++cb) {
    y3.middleCols(cb * n, n).noalias() = c_inv.middleCols(cb * k3, k3) * phi3;
  }
  const cmat phi3_conj = phi3.conjugate();
  const cmat e2c = pair_products(phi2.conjugate());
  const cmat e1c = pair_products(phi1.conjugate());
  cmat z(k2 * k2, k1 * k1 * n);
  for (Index a = 0; a < k1; ++a) {
    for (Index b = 0; b < k2; ++b) {
      const Index rb = a * k2 + b;
      for (Index ap = 0; ap < k1; ++ap) {
        for (Index bp = 0; bp < k2; ++bp) {
          const Index cb = ap * k2 + bp;
          const auto blk = y3.block(rb * k3, cb * n, k3, n);
          const Eigen::RowVectorXcd r1 = phi3_conj.cwiseProduct(blk).colwise().sum();
          z.block(b * k2 + bp, (a * k1 + ap) * n, 1, n) = r1;
        }
      }
    }
  }
  const cmat r2 = e2c.transpose() * z;  // (i2, (a a') i3)
  cmat wmat(k1 * k1, n * n);
  for (Index p = 0; p < k1 * k1; ++p) {
    for (Index i2 = 0; i2 < n; ++i2) wmat.block(p, i2 * n, 1, n) = r2.block(i2, p * n, 1, n);
  }
  const cmat q = e1c.transpose() * wmat;  // (i1, i2 i3)

  post.sigma_diag.resize(n * n * n);
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index r = 0; r < n * n; ++r) {
      const Index i = i1 * n * n + r;
      const double gi = gamma[i];
      post.sigma_diag[i] = std::clamp(gi - gi * gi * q(i1, r).real(), 0.0, gi);
    }
  }
  post.d = post.sigma_diag + post.mu.cwiseAbs2();
  return post;
}

}  // namespace krosbl
