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

#include "krosbl/types.hpp"

#include <span>
#include <vector>

namespace krosbl {

/// Array response dictionary of a Q-element uniform linear array evaluated
/// on an angular grid. Column n is the steering vector for grid[n].
struct SteeringMatrix {
  cmat entries;
  double element_spacing = 0.5;
  std::vector<double> grid;

  Index antennas() const { return entries.rows(); }
  Index grid_size() const { return entries.cols(); }
};

/// Unit-norm steering vector (1/sqrt(Q)) exp(j 2 pi q delta cos psi),
/// q = 0..Q-1. Throws DimensionError for Q = 0.
cvec steering_vector(Index antennas, double psi, double delta);

/// Grid angles psi_n = arccos(2n/N - 1), n = 1..N. Includes cos = +1 and
/// excludes cos = -1.
std::vector<double> default_grid(Index n);

SteeringMatrix steering_matrix(Index antennas, std::vector<double> grid, double delta);

/// Column-wise Kronecker product; column k is kron(a[:,k], b[:,k]).
cmat khatri_rao(const cmat& a, const cmat& b);

/// Dense Kronecker product of two matrices. Intended for small operands.
cmat kron(const cmat& a, const cmat& b);

/// Kronecker product of vectors in order (first vector varies slowest).
cvec kron_vec(std::span<const cvec> parts);

/// Applies kron(factors[0], ..., factors[J-1]) to x by successive mode
/// products; the Kronecker product itself is never formed.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> kron_mode_apply(
    std::span<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> factors,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  if (factors.empty()) throw DimensionError("kron_mode_apply: empty factor list");
  std::vector<Index> dims;
  Index total = 1;
  for (const auto& f : factors) {
    dims.push_back(f.cols());
    total *= f.cols();
  }
  if (x.size() != total) {
    throw DimensionError("kron_mode_apply: vector length " + std::to_string(x.size()) +
                         " does not match operator width " + std::to_string(total));
  }

  Vec cur = x;
  for (Index j = static_cast<Index>(factors.size()) - 1; j >= 0; --j) {
    const auto& a = factors[static_cast<std::size_t>(j)];
    Index pre = 1, post = 1;
    for (Index l = 0; l < j; ++l) pre *= dims[static_cast<std::size_t>(l)];
    for (Index l = j + 1; l < static_cast<Index>(dims.size()); ++l) {
      post *= dims[static_cast<std::size_t>(l)];
    }
    const Index n = dims[static_cast<std::size_t>(j)];
    const Index m = a.rows();
    Vec next(pre * m * post);
    if (post == 1) {
      // Trailing mode: one GEMM over all leading slices.
      Eigen::Map<const RowMat> in(cur.data(), pre, n);
      Eigen::Map<RowMat> out(next.data(), pre, m);
      out.noalias() = in * a.transpose();
    } else {
      for (Index p = 0; p < pre; ++p) {
        Eigen::Map<const RowMat> in(cur.data() + p * n * post, n, post);
        Eigen::Map<RowMat> out(next.data() + p * m * post, m, post);
        out.noalias() = a * in;
      }
    }
    cur.swap(next);
    dims[static_cast<std::size_t>(j)] = m;
  }
  return cur;
}

/// Lazy Kronecker product of an ordered, non-empty list of complex factors.
class KronOperator {
 public:
  /// Largest entry count dense() will materialize.
  static constexpr Index kDenseLimit = 10'000'000;

  explicit KronOperator(std::vector<cmat> factors);

  Index rows() const;
  Index cols() const;
  const std::vector<cmat>& factors() const { return factors_; }

  cvec apply(const cvec& x) const;
  cvec apply_adjoint(const cvec& y) const;

  /// Column `col` of the operator, built from one column of each factor.
  cvec column(Index col) const;
  /// Euclidean norm of every column.
  rvec column_norms() const;

  /// Dense materialization, for oracles only. Throws DimensionError when
  /// rows*cols exceeds kDenseLimit.
  cmat dense() const;

 private:
  std::vector<cmat> factors_;
};

cvec kron_apply(const KronOperator& op, const cvec& x);

}  // namespace krosbl
