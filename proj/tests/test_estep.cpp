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

using namespace krosbl;

namespace {

struct Instance {
  SystemConfig cfg;
  MeasurementSet meas;
  Dictionary dict;
};

Instance tiny_instance(Index n, Index ki, Index kp, Index b, std::uint64_t seed) {
  Instance in;
  in.cfg.grid_size = n;
  in.cfg.irs_configs = ki;
  in.cfg.pilots_per_config = kp;
  in.cfg.bs_antennas = b;
  in.cfg.ms_antennas = 2;
  in.cfg.irs_elements = 2 * n;
  in.cfg.paths_ms = 1;
  in.cfg.paths_bs = 1;
  in.cfg.sigma2 = 0.3;
  Rng rng = make_rng(seed);
  const GroundTruth t = synth_channels(in.cfg, rng);
  in.meas = gen_measurements(in.cfg, t, rng);
  in.dict = build_dictionary(in.cfg, in.meas.pilots, in.meas.theta);
  return in;
}

HyperParams random_hyper(Index n, std::mt19937_64& rng) {
  return {oracle::random_positive(n, rng), oracle::random_positive(n, rng), oracle::random_positive(n, rng)};
}

}  // namespace

TEST_CASE("fast E-step matches dense inversion on the reference tiny instance") {
  const Instance in = tiny_instance(3, 2, 2, 2, 1);
  std::mt19937_64 rng(2);
  const HyperParams h = random_hyper(3, rng);
  const Posterior p = e_step_fast(in.dict, in.meas.y_tilde, h, 0.3);
  const auto naive = oracle::naive_posterior(in.dict.sensing().dense(), in.meas.y_tilde, h.product(), 0.3);
  CHECK(oracle::rel_err(p.mu, naive.mu) <= 1e-8);
  CHECK(oracle::rel_err(p.sigma_diag, naive.sigma_diag) <= 1e-8);
  CHECK(p.neg_log_likelihood == doctest::Approx(naive.nll).epsilon(1e-10));
}

TEST_CASE("fast and classic E-steps match dense inversion on random instances") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<Index> pick_n(2, 4), pick_k(2, 3);
  std::uniform_real_distribution<double> noise(0.05, 3.0);
  for (int t = 0; t < 60; ++t) {
    const Instance in = tiny_instance(pick_n(rng), pick_k(rng), pick_k(rng), pick_k(rng), 100 + t);
    const Index n = in.cfg.grid_size;
    const HyperParams h = random_hyper(n, rng);
    const double s2 = noise(rng);
    const cvec y = oracle::random_cvec(in.meas.y_tilde.size(), rng);
    const auto naive = oracle::naive_posterior(in.dict.sensing().dense(), y, h.product(), s2);

    const Posterior fast = e_step_fast(in.dict, y, h, s2);
    CHECK(oracle::rel_err(fast.mu, naive.mu) <= 1e-8);
    CHECK(oracle::rel_err(fast.sigma_diag, naive.sigma_diag) <= 1e-8);
    CHECK(fast.neg_log_likelihood == doctest::Approx(naive.nll).epsilon(1e-9));

    // Classic path with a non-Kronecker prior.
    const rvec gamma = oracle::random_positive(n * n * n, rng);
    const auto naive_c = oracle::naive_posterior(in.dict.sensing().dense(), y, gamma, s2);
    const Posterior classic = e_step_classic(in.dict, y, gamma, s2);
    CHECK(oracle::rel_err(classic.mu, naive_c.mu) <= 1e-8);
    CHECK(oracle::rel_err(classic.sigma_diag, naive_c.sigma_diag) <= 1e-8);
    CHECK(classic.neg_log_likelihood == doctest::Approx(naive_c.nll).epsilon(1e-9));
  }
}

TEST_CASE("classic E-step on a Kronecker prior agrees with the fast E-step") {
  SystemConfig c;
  c.grid_size = 6;
  c.irs_configs = 3;
  c.pilots_per_config = 3;
  c.bs_antennas = 4;
  c.ms_antennas = 3;
  c.irs_elements = 16;
  c.sigma2 = 0.1;
  Rng rng = make_rng(5);
  const GroundTruth t = synth_channels(c, rng);
  const MeasurementSet m = gen_measurements(c, t, rng);
  const Dictionary d = build_dictionary(c, m.pilots, m.theta);
  std::mt19937_64 r2(6);
  const HyperParams h = random_hyper(6, r2);
  const Posterior fast = e_step_fast(d, m.y_tilde, h, c.sigma2);
  const Posterior classic = e_step_classic(d, m.y_tilde, h.product(), c.sigma2);
  CHECK(oracle::rel_err(classic.mu, fast.mu) <= 1e-8);
  CHECK(oracle::rel_err(classic.sigma_diag, fast.sigma_diag) <= 1e-8);
  CHECK(classic.neg_log_likelihood == doctest::Approx(fast.neg_log_likelihood).epsilon(1e-10));
}

TEST_CASE("posterior invariants") {
  const Instance in = tiny_instance(4, 3, 2, 3, 9);
  std::mt19937_64 rng(10);
  const HyperParams h = random_hyper(4, rng);
  const Posterior p = e_step_fast(in.dict, in.meas.y_tilde, h, 0.3);
  const rvec gamma = h.product();
  CHECK((p.d - (p.sigma_diag + p.mu.cwiseAbs2())).norm() < 1e-14 * p.d.norm());
  for (Index i = 0; i < gamma.size(); ++i) {
    CHECK(p.sigma_diag[i] >= 0.0);
    CHECK(p.sigma_diag[i] <= gamma[i]);
  }
}

TEST_CASE("degenerate priors and noise limits") {
  const Instance in = tiny_instance(3, 2, 2, 2, 11);
  const HyperParams zero{rvec::Zero(3), rvec::Zero(3), rvec::Zero(3)};
  const Posterior p0 = e_step_fast(in.dict, in.meas.y_tilde, zero, 0.3);
  CHECK(p0.mu.norm() == 0.0);
  CHECK(p0.sigma_diag.norm() == 0.0);

  std::mt19937_64 rng(12);
  const HyperParams h = random_hyper(3, rng);
  const Posterior big = e_step_fast(in.dict, in.meas.y_tilde, h, 1e12);
  CHECK(big.mu.norm() < 1e-9 * in.meas.y_tilde.norm());
  CHECK(oracle::rel_err(big.sigma_diag, h.product()) < 1e-9);
}

TEST_CASE("E-step input validation") {
  const Instance in = tiny_instance(3, 2, 2, 2, 13);
  const HyperParams h = HyperParams::ones(3);
  CHECK_THROWS_AS(e_step_fast(in.dict, in.meas.y_tilde, h, 0.0), ConfigError);
  CHECK_THROWS_AS(e_step_fast(in.dict, in.meas.y_tilde, h, -1.0), ConfigError);
  HyperParams bad = h;
  bad.gamma2[1] = std::nan("");
  CHECK_THROWS_AS(e_step_fast(in.dict, in.meas.y_tilde, bad, 1.0), NumericalError);
  bad = h;
  bad.gamma3[0] = -1.0;
  CHECK_THROWS_AS(e_step_fast(in.dict, in.meas.y_tilde, bad, 1.0), ConfigError);
  CHECK_THROWS_AS(e_step_fast(in.dict, cvec::Zero(3), h, 1.0), DimensionError);
  CHECK_THROWS_AS(e_step_classic(in.dict, in.meas.y_tilde, rvec::Ones(26), 1.0), DimensionError);
  CHECK_THROWS_AS(e_step_classic(in.dict, in.meas.y_tilde, rvec::Ones(27), 0.0), ConfigError);
}
