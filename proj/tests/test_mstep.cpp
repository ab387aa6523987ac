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

#include "doctest.h"
#include "oracles.hpp"

#include "krosbl/sbl.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace krosbl;

namespace {

// Coordinate update j written directly from the stationarity condition of
// sum log(gamma) + d / gamma over the Kronecker-structured gamma.
rvec update_oracle(const rvec& d, const HyperParams& h, int j) {
  const Index n = h.gamma1.size();
  rvec out = rvec::Zero(n);
  for (Index i1 = 0; i1 < n; ++i1) {
    for (Index i2 = 0; i2 < n; ++i2) {
      for (Index i3 = 0; i3 < n; ++i3) {
        const double v = d[(i1 * n + i2) * n + i3];
        if (j == 0) out[i1] += v / (h.gamma2[i2] * h.gamma3[i3]);
        if (j == 1) out[i2] += v / (h.gamma1[i1] * h.gamma3[i3]);
        if (j == 2) out[i3] += v / (h.gamma1[i1] * h.gamma2[i2]);
      }
    }
  }
  return out / static_cast<double>(n * n);
}

double stationarity_residual(const rvec& d, const HyperParams& h) {
  const std::array<const rvec*, 3> g{&h.gamma1, &h.gamma2, &h.gamma3};
  double worst = 0.0;
  for (int j = 0; j < 3; ++j) {
    const rvec u = update_oracle(d, h, j);
    worst = std::max(worst, (u - *g[static_cast<std::size_t>(j)]).norm() / g[static_cast<std::size_t>(j)]->norm());
  }
  return worst;
}

double objective_oracle(const rvec& d, const HyperParams& h) {
  const rvec g = oracle::real_kron({h.gamma1, h.gamma2, h.gamma3});
  return (g.array().log() + d.array() / g.array()).sum();
}

}  // namespace

TEST_CASE("AM update leaves an exactly Kronecker d fixed") {
  std::mt19937_64 rng(1);
  for (Index n : {2, 3, 5, 8}) {
    const HyperParams truth{oracle::random_positive(n, rng), oracle::random_positive(n, rng),
                            oracle::random_positive(n, rng)};
    const rvec d = truth.product();
    SolverConfig cfg;
    const HyperParams out = m_step_am(d, HyperParams::ones(n), cfg);
    CHECK(out.gamma1.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(out.gamma2.norm() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((out.product() - d).norm() < 1e-10 * d.norm());
    CHECK(stationarity_residual(d, out) < 1e-10);

    // Starting at the solution, a single pass changes nothing.
    HyperParams start = truth;
    const HyperParams again = m_step_am(d, start, cfg);
    CHECK((again.product() - d).norm() < 1e-12 * d.norm());
  }
}

TEST_CASE("AM on all-ones d with N=2") {
  SolverConfig cfg;
  const HyperParams out = m_step_am(rvec::Ones(8), HyperParams::ones(2), cfg);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(out.gamma1[0] == doctest::Approx(s));
  CHECK(out.gamma1[1] == doctest::Approx(s));
  CHECK(out.gamma2[0] == doctest::Approx(s));
  CHECK(out.gamma2[1] == doctest::Approx(s));
  CHECK((out.product() - rvec::Ones(8)).norm() < 1e-12);
}

TEST_CASE("AM returns a stationary point on random d") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Index n = 2 + t % 5;
    const rvec d = oracle::random_positive(n * n * n, rng, 0.0, 3.0);
    SolverConfig cfg;
    cfg.am_max_sweeps = 5000;
    cfg.am_tol = 1e-13;
    const HyperParams out = m_step_am(d, HyperParams::ones(n), cfg);
    CHECK(stationarity_residual(d, out) < 1e-8);
    CHECK(m_step_objective(d, out) == doctest::Approx(objective_oracle(d, out)).epsilon(1e-12));
    const auto u = am_coordinate_updates(d, out);
    CHECK((u[0] - update_oracle(d, out, 0)).norm() < 1e-12 * u[0].norm());
    CHECK((u[2] - update_oracle(d, out, 2)).norm() < 1e-12 * u[2].norm());
  }
}

TEST_CASE("AM beats a random search of the constraint set for N=2") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi / 2);
  for (int t = 0; t < 3; ++t) {
    const rvec d = oracle::random_positive(8, rng, 0.0, 2.0);
    const HyperParams out = m_step_am(d, HyperParams::ones(2), SolverConfig{});
    const double am = objective_oracle(d, out);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 100'000; ++s) {
      // Unit-norm nonnegative gamma1, gamma2; gamma3 minimized in closed form.
      const double a1 = angle(rng), a2 = angle(rng);
      HyperParams h{(rvec(2) << std::cos(a1), std::sin(a1)).finished(),
                    (rvec(2) << std::cos(a2), std::sin(a2)).finished(), rvec::Ones(2)};
      h.gamma3 = update_oracle(d, h, 2);
      best = std::min(best, objective_oracle(d, h));
    }
    CHECK(am <= best + 1e-6);
  }
}

TEST_CASE("AM clamps vanishing entries instead of dividing by zero") {
  const Index n = 3;
  std::mt19937_64 rng(4);
  rvec d = oracle::random_positive(n * n * n, rng);
  for (Index i2 = 0; i2 < n; ++i2) {
    for (Index i3 = 0; i3 < n; ++i3) d[(0 * n + i2) * n + i3] = 0.0;  // gamma1[0] slab
  }
  SolverConfig cfg;
  const HyperParams out = m_step_am(d, HyperParams::ones(n), cfg);
  CHECK(out.gamma1.allFinite());
  CHECK(out.gamma3.allFinite());
  CHECK(out.gamma1[0] >= 0.0);
  CHECK(out.gamma1[0] < 1e-6 * out.gamma1.maxCoeff());
  CHECK(out.gamma1.norm() == doctest::Approx(1.0));

  CHECK_THROWS_AS(m_step_am(-d, HyperParams::ones(n), cfg), ConfigError);
  CHECK_THROWS_AS(m_step_am(rvec::Ones(26), HyperParams::ones(3), cfg), DimensionError);
}

TEST_CASE("SVD projection recovers an exact Kronecker d") {
  std::mt19937_64 rng(5);
  for (Index n : {2, 3, 6, 18}) {
    const rvec a = oracle::random_positive(n, rng), b = oracle::random_positive(n, rng),
               c = oracle::random_positive(n, rng);
    const rvec d = oracle::real_kron({a, b, c});
    const HyperParams out = m_step_svd(d);
    CHECK((out.gamma1 - a / a.norm()).norm() < 1e-10);
    CHECK((out.gamma2 - b / b.norm()).norm() < 1e-10);
    CHECK((out.gamma3 - a.norm() * b.norm() * c).norm() < 1e-10 * c.norm() * a.norm() * b.norm());
  }
}

TEST_CASE("SVD projection of a single spike") {
  const Index n = 4;
  for (Index k : {0, 5, 63}) {
    rvec d = rvec::Zero(n * n * n);
    d[k] = 2.5;
    const HyperParams out = m_step_svd(d);
    const Index i1 = k / (n * n), i2 = (k / n) % n, i3 = k % n;
    CHECK(out.gamma1[i1] == doctest::Approx(1.0));
    CHECK(out.gamma1.sum() == doctest::Approx(1.0));
    CHECK(out.gamma2[i2] == doctest::Approx(1.0));
    CHECK(out.gamma2.sum() == doctest::Approx(1.0));
    CHECK(out.gamma3[i3] == doctest::Approx(2.5));
    CHECK(out.gamma3.sum() == doctest::Approx(2.5));
  }
}

TEST_CASE("SVD first rank-one step is no worse than random unit candidates") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const rvec d = oracle::random_positive(8, rng, 0.0, 1.0);
    const Eigen::Map<const rmat> d1(d.data(), 4, 2);
    const HyperParams out = m_step_svd(d);
    // For unit v, the best left factor is D1 v, with squared residual
    // ||D1||^2 - ||D1 v||^2.
    auto residual = [&](const rvec& v) { return d1.squaredNorm() - (d1 * v).squaredNorm(); };
    const double ours = residual(out.gamma1);
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 100'000; ++s) {
      rvec v(2);
      v << normal(rng), normal(rng);
      best = std::min(best, residual(v / v.norm()));
    }
    CHECK(ours <= best + 1e-12);
    CHECK(out.gamma1.norm() == doctest::Approx(1.0));
    CHECK(out.gamma2.norm() == doctest::Approx(1.0));
    CHECK(out.gamma1.minCoeff() >= 0.0);
    CHECK(out.gamma3.minCoeff() >= 0.0);
  }
}

TEST_CASE("SVD projection edge cases") {
  const HyperParams zero = m_step_svd(rvec::Zero(27));
  CHECK(zero.gamma1.norm() == 0.0);
  CHECK(zero.gamma3.norm() == 0.0);
  CHECK_THROWS_AS(m_step_svd(-rvec::Ones(8)), ConfigError);
  CHECK_THROWS_AS(m_step_svd(rvec::Ones(10)), DimensionError);
}
