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

#include "krosbl/kron.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace krosbl {

cvec steering_vector(Index antennas, double psi, double delta) {
  if (antennas < 1) throw DimensionError("steering_vector: antenna count must be >= 1");
  const double phase = 2.0 * std::numbers::pi * delta * std::cos(psi);
  const double scale = 1.0 / std::sqrt(static_cast<double>(antennas));
  cvec a(antennas);
  for (Index q = 0; q < antennas; ++q) {
    a[q] = std::polar(scale, phase * static_cast<double>(q));
  }
  return a;
}

std::vector<double> default_grid(Index n) {
  if (n < 1) throw DimensionError("default_grid: grid size must be >= 1");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(n));
  for (Index k = 1; k <= n; ++k) {
    const double c = 2.0 * static_cast<double>(k) / static_cast<double>(n) - 1.0;
    grid.push_back(std::acos(std::clamp(c, -1.0, 1.0)));
  }
  return grid;
}

SteeringMatrix steering_matrix(Index antennas, std::vector<double> grid, double delta) {
  if (grid.empty()) throw DimensionError("steering_matrix: empty grid");
  SteeringMatrix s;
  s.entries.resize(antennas, static_cast<Index>(grid.size()));
  for (std::size_t n = 0; n < grid.size(); ++n) {
    s.entries.col(static_cast<Index>(n)) = steering_vector(antennas, grid[n], delta);
  }
  s.element_spacing = delta;
  s.grid = std::move(grid);
  return s;
}

cmat khatri_rao(const cmat& a, const cmat& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("khatri_rao: column counts differ (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.cols()) + ")");
  }
  cmat out(a.rows() * b.rows(), a.cols());
  for (Index k = 0; k < a.cols(); ++k) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.col(k).segment(i * b.rows(), b.rows()) = a(i, k) * b.col(k);
    }
  }
  return out;
}

cmat kron(const cmat& a, const cmat& b) {
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

cvec kron_vec(std::span<const cvec> parts) {
  if (parts.empty()) throw DimensionError("kron_vec: empty list");
  cvec out = parts.front();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const cvec& v = parts[p];
    cvec next(out.size() * v.size());
    for (Index i = 0; i < out.size(); ++i) next.segment(i * v.size(), v.size()) = out[i] * v;
    out.swap(next);
  }
  return out;
}

KronOperator::KronOperator(std::vector<cmat> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw DimensionError("KronOperator: factor list is empty");
}

Index KronOperator::rows() const {
  Index r = 1;
  for (const auto& f : factors_) r *= f.rows();
  return r;
}

Index KronOperator::cols() const {
  Index c = 1;
  for (const auto& f : factors_) c *= f.cols();
  return c;
}

cvec KronOperator::apply(const cvec& x) const {
  return kron_mode_apply<cplx>(std::span<const cmat>(factors_), x);
}

cvec KronOperator::apply_adjoint(const cvec& y) const {
  std::vector<cmat> adj;
  adj.reserve(factors_.size());
  for (const auto& f : factors_) adj.push_back(f.adjoint());
  return kron_mode_apply<cplx>(std::span<const cmat>(adj), y);
}

cvec KronOperator::column(Index col) const {
  if (col < 0 || col >= cols()) throw DimensionError("KronOperator::column: index out of range");
  std::vector<cvec> parts(factors_.size());
  Index rem = col;
  for (std::size_t j = factors_.size(); j-- > 0;) {
    parts[j] = factors_[j].col(rem % factors_[j].cols());
    rem /= factors_[j].cols();
  }
  return kron_vec(parts);
}

rvec KronOperator::column_norms() const {
  std::vector<rvec> norms;
  for (const auto& f : factors_) norms.push_back(f.colwise().norm().transpose());
  rvec out = norms.front();
  for (std::size_t p = 1; p < norms.size(); ++p) {
    rvec next(out.size() * norms[p].size());
    for (Index i = 0; i < out.size(); ++i) {
      next.segment(i * norms[p].size(), norms[p].size()) = out[i] * norms[p];
    }
    out.swap(next);
  }
  return out;
}

cmat KronOperator::dense() const {
  const double entries = static_cast<double>(rows()) * static_cast<double>(cols());
  if (entries > static_cast<double>(kDenseLimit)) {
    throw DimensionError("KronOperator::dense: operator too large to materialize");
  }
  cmat out = factors_.front();
  for (std::size_t p = 1; p < factors_.size(); ++p) out = kron(out, factors_[p]);
  return out;
}

cvec kron_apply(const KronOperator& op, const cvec& x) { return op.apply(x); }

}  // namespace krosbl
