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

#include "krosbl/channel.hpp"

#include <cmath>
#include <set>

using namespace krosbl;

namespace {

SystemConfig small_config(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Index> pick(2, 5);
  SystemConfig c;
  c.bs_antennas = pick(rng);
  c.ms_antennas = pick(rng);
  c.irs_elements = 2 * pick(rng) + 2;
  c.grid_size = pick(rng) + 1;
  c.irs_configs = pick(rng);
  c.pilots_per_config = pick(rng);
  c.paths_ms = std::uniform_int_distribution<Index>(1, 2)(rng);
  c.paths_bs = std::uniform_int_distribution<Index>(1, 2)(rng);
  c.sigma2 = 0.0;
  return c;
}

// Backward-error scale of the observation: the same products taken over
// entrywise magnitudes. Small random designs can cancel exactly, which makes
// the plain output norm a useless denominator.
double magnitude_scale(const GroundTruth& t, const MeasurementSet& m) {
  double acc = 0.0;
  for (Index k = 0; k < m.theta.cols(); ++k) {
    acc += (t.h_bs.cwiseAbs() * m.theta.col(k).cwiseAbs().asDiagonal() * t.h_ms.cwiseAbs() *
            m.pilots.cwiseAbs())
               .squaredNorm();
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("single-ray channels are rank one with the expected scale") {
  SystemConfig c;
  c.paths_ms = 1;
  c.paths_bs = 1;
  Rng rng = make_rng(3);
  const GroundTruth t = synth_channels(c, rng);
  const auto grid = default_grid(c.grid_size);
  const cvec a_l = steering_vector(c.irs_elements, grid[static_cast<std::size_t>(t.aoa_irs[0])], 0.5);
  const cvec a_m = steering_vector(c.ms_antennas, grid[static_cast<std::size_t>(t.aod_ms)], 0.5);
  const cmat want = std::sqrt(static_cast<double>(c.irs_elements * c.ms_antennas)) * t.gains_ms[0] * a_l *
                    a_m.adjoint();
  CHECK((t.h_ms - want).norm() < 1e-10 * want.norm());

  Eigen::JacobiSVD<cmat> svd(t.h_ms);
  const auto s = svd.singularValues();
  CHECK(s[1] < 1e-10 * s[0]);
  Eigen::JacobiSVD<cmat> svd_bs(t.h_bs);
  CHECK(svd_bs.singularValues()[1] < 1e-10 * svd_bs.singularValues()[0]);
}

TEST_CASE("sparse factors reproduce the channel matrices") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SystemConfig c;
    Rng rng = make_rng(seed);
    const GroundTruth t = synth_channels(c, rng);
    const auto arr = array_dictionaries(c);
    const cmat h_ms = arr.a_l.entries * t.g_la * t.g_m.adjoint() * arr.a_m.entries.adjoint();
    const cmat h_bs = arr.a_b.entries * t.g_b * t.g_ld.adjoint() * arr.a_l.entries.adjoint();
    CHECK((h_ms - t.h_ms).norm() < 1e-10 * t.h_ms.norm());
    CHECK((h_bs - t.h_bs).norm() < 1e-10 * t.h_bs.norm());

    // One nonzero in each single-angle factor.
    CHECK((t.g_m.array() != cplx(0.0)).count() == 1);
    CHECK((t.g_ld.array() != cplx(0.0)).count() == 1);
  }
}

TEST_CASE("support size is the product of path counts up to cascade collisions") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SystemConfig c;
    Rng rng = make_rng(seed);
    const GroundTruth t = synth_channels(c, rng);
    // Independent count: cascade bins (aoa - aod) mod N hit by MS-IRS paths.
    std::set<Index> bins;
    for (Index a : t.aoa_irs) bins.insert(((t.aod_irs - a) % c.grid_size + c.grid_size) % c.grid_size);
    const auto expected = static_cast<std::size_t>(bins.size()) * t.aoa_bs.size();
    CHECK(t.support.size() == expected);
    CHECK(t.support.size() <= static_cast<std::size_t>(c.paths_ms * c.paths_bs));
    for (Index i : t.support) CHECK(t.g[i] != cplx(0.0));
    CHECK(static_cast<std::size_t>((t.g.array() != cplx(0.0)).count()) == t.support.size());
  }
}

TEST_CASE("synthesis is deterministic given the seed") {
  SystemConfig c;
  Rng r1 = make_rng(42, {7});
  Rng r2 = make_rng(42, {7});
  const GroundTruth a = synth_channels(c, r1);
  const GroundTruth b = synth_channels(c, r2);
  CHECK((a.g - b.g).norm() == 0.0);
  CHECK((a.h_ms - b.h_ms).norm() == 0.0);
  CHECK((a.h_bs - b.h_bs).norm() == 0.0);
  Rng r3 = make_rng(42, {8});
  CHECK((synth_channels(c, r3).h_ms - a.h_ms).norm() > 0.0);
}

TEST_CASE("invalid path counts are rejected") {
  SystemConfig c;
  c.grid_size = 3;
  c.paths_ms = 4;
  Rng rng = make_rng(1);
  CHECK_THROWS_AS(synth_channels(c, rng), ConfigError);
  c.paths_ms = 1;
  c.bs_antennas = 0;
  CHECK_THROWS_AS(synth_channels(c, rng), ConfigError);
}

TEST_CASE("noise-free observation equals the sensing operator applied to g") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SystemConfig c = small_config(seed);
    Rng rng = make_rng(seed, {1});
    const GroundTruth t = synth_channels(c, rng);
    const MeasurementSet m = gen_measurements(c, t, rng);
    const Dictionary d = build_dictionary(c, m.pilots, m.theta);
    const cvec hg = d.sensing().apply(t.g);
    CHECK((m.y_tilde - hg).norm() <= 1e-10 * magnitude_scale(t, m));
  }
}

TEST_CASE("measurement length and alphabets at the default scale") {
  SystemConfig c;
  Rng rng = make_rng(5);
  const GroundTruth t = synth_channels(c, rng);
  const MeasurementSet m = gen_measurements(c, t, rng);
  CHECK(m.y_tilde.size() == 384);
  const double amp = 1.0 / std::sqrt(18.0);
  for (Index i = 0; i < m.theta.size(); ++i) {
    CHECK(std::abs(std::abs(m.theta(i).real()) - amp) < 1e-15);
    CHECK(m.theta(i).imag() == 0.0);
  }
  const double xamp = 1.0 / std::sqrt(6.0);
  for (Index i = 0; i < m.pilots.size(); ++i) CHECK(std::abs(std::abs(m.pilots(i)) - xamp) < 1e-15);
  // K_P = M: orthogonal rows of equal power.
  CHECK((m.pilots * m.pilots.adjoint() - cmat::Identity(6, 6)).norm() < 1e-12);

  c.pilot_design = PilotDesign::sign;
  Rng rng_sign = make_rng(5);
  const MeasurementDesign signs = draw_design(c, rng_sign);
  for (Index i = 0; i < signs.pilots.size(); ++i) {
    CHECK(std::abs(std::abs(signs.pilots(i).real()) - xamp) < 1e-15);
    CHECK(signs.pilots(i).imag() == 0.0);
  }
  c.pilot_design = PilotDesign::dft;

  c.irs_norm_count = 256;
  Rng rng2 = make_rng(5);
  const MeasurementDesign design = draw_design(c, rng2);
  CHECK(std::abs(std::abs(design.theta(0, 0).real()) - 1.0 / 16.0) < 1e-15);
}

TEST_CASE("dft pilots are orthogonal for either aspect ratio") {
  for (auto [m, kp] : {std::pair<Index, Index>{4, 6}, {6, 4}, {3, 3}}) {
    SystemConfig c;
    c.ms_antennas = m;
    c.pilots_per_config = kp;
    Rng rng = make_rng(1);
    const cmat x = draw_design(c, rng).pilots;
    if (kp >= m) {
      CHECK((x * x.adjoint() - static_cast<double>(kp) / static_cast<double>(m) * cmat::Identity(m, m)).norm() <
            1e-12);
    } else {
      CHECK((x.adjoint() * x - cmat::Identity(kp, kp)).norm() < 1e-12);
    }
  }
  CHECK(parse_pilot_design("sign") == PilotDesign::sign);
  CHECK_THROWS_AS(parse_pilot_design("zadoff"), ConfigError);
}

TEST_CASE("noise power matches sigma2") {
  Rng rng = make_rng(9);
  const cmat w = unit_complex_noise(1000, 100, rng);
  const double sigma2 = 0.37;
  const double power = (std::sqrt(sigma2) * w).squaredNorm() / static_cast<double>(w.size());
  CHECK(std::abs(power - sigma2) < 0.02 * sigma2);
  // Real and imaginary parts carry half the power each.
  CHECK(std::abs(w.real().squaredNorm() / static_cast<double>(w.size()) - 0.5) < 0.01);
}

TEST_CASE("dictionary factors") {
  SystemConfig c;
  c.grid_size = 3;
  c.irs_elements = 4;
  c.irs_configs = 2;
  c.pilots_per_config = 2;
  c.ms_antennas = 2;
  c.bs_antennas = 2;
  c.paths_ms = c.paths_bs = 1;
  Rng rng = make_rng(4);
  const MeasurementDesign design = draw_design(c, rng);
  const Dictionary d = build_dictionary(c, design.pilots, design.theta);
  const auto arr = array_dictionaries(c);
  CHECK((d.phi_b - arr.a_b.entries).norm() == 0.0);
  CHECK((d.phi_m - design.pilots.transpose() * arr.a_m.entries.conjugate()).norm() < 1e-14);
  CHECK(d.phi_a.rows() == 4);
  CHECK(d.phi_a.cols() == 3);
  CHECK(d.phi_l.rows() == 2);

  // Column (n1, n2) of the pair dictionary holds a_L(n1) * conj(a_L(n2)).
  const cmat pairs = irs_pair_dictionary(arr.a_l);
  for (Index n1 = 0; n1 < 3; ++n1) {
    for (Index n2 = 0; n2 < 3; ++n2) {
      for (Index l = 0; l < 4; ++l) {
        const cplx want = arr.a_l.entries(l, n1) * std::conj(arr.a_l.entries(l, n2));
        CHECK(std::abs(pairs(l, n1 * 3 + n2) - want) < 1e-15);
      }
    }
  }

  // Discarded columns of the full IRS dictionary are multiples of kept ones.
  const cmat full = full_irs_dictionary(design.theta, arr.a_l);
  const CascadeReduction red = cascade_reduction(arr.a_l);
  CHECK(red.max_residual < 1e-12);
  for (Index c2 = 0; c2 < 9; ++c2) {
    const auto k = red.bin[static_cast<std::size_t>(c2)];
    CHECK((full.col(c2) - red.scale[static_cast<std::size_t>(c2)] * d.phi_l.col(k)).norm() < 1e-12);
  }
}

TEST_CASE("reduced and full IRS dictionaries predict the same observations") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SystemConfig c = small_config(seed + 1000);
    Rng rng = make_rng(seed, {2});
    const GroundTruth t = synth_channels(c, rng);
    const MeasurementDesign design = draw_design(c, rng);
    const Dictionary d = build_dictionary(c, design.pilots, design.theta);
    const cmat full = full_irs_dictionary(design.theta, d.a_l);
    // Full model: kron(full, phi_m, phi_b) applied to kron(g_la, conj(g_ld), conj(g_m), g_b).
    const std::array<cvec, 2> pair{t.g_la, t.g_ld.conjugate()};
    const cvec g_full = kron_vec(pair);
    const std::array<cvec, 3> rest{g_full, t.g_m.conjugate(), t.g_b};
    const KronOperator full_op({full, d.phi_m, d.phi_b});
    const cvec lhs = full_op.apply(kron_vec(rest));
    const cvec rhs = d.sensing().apply(t.g);
    MeasurementSet m;
    m.theta = design.theta;
    m.pilots = design.pilots;
    CHECK((lhs - rhs).norm() <= 1e-10 * magnitude_scale(t, m));
  }
}

TEST_CASE("reconstructed cascade equals the khatri-rao form of the channels") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const SystemConfig c = small_config(seed + 2000);
    Rng rng = make_rng(seed, {3});
    const GroundTruth t = synth_channels(c, rng);
    const MeasurementDesign design = draw_design(c, rng);
    const Dictionary d = build_dictionary(c, design.pilots, design.theta);
    const cmat cascade = reconstruct_cascade(d, t.g);
    const cmat kr = khatri_rao(t.h_ms.transpose(), t.h_bs);
    CHECK((cascade - kr).norm() <= 1e-10 * kr.norm());
    for (Index k = 0; k < c.irs_configs; ++k) {
      const cmat hk = cascaded_channel(t.h_bs, t.h_ms, design.theta.col(k));
      const double scale =
          (t.h_bs.cwiseAbs() * design.theta.col(k).cwiseAbs().asDiagonal() * t.h_ms.cwiseAbs()).norm();
      CHECK((cascade_for_config(cascade, design.theta.col(k), c.bs_antennas) - hk).norm() <= 1e-10 * scale);
    }
  }
  SystemConfig c;
  Rng rng = make_rng(1);
  const MeasurementDesign design = draw_design(c, rng);
  const Dictionary d = build_dictionary(c, design.pilots, design.theta);
  CHECK(reconstruct_cascade(d, cvec::Zero(c.unknowns())).norm() == 0.0);
  CHECK_THROWS_AS(reconstruct_cascade(d, cvec::Zero(5)), DimensionError);
}

TEST_CASE("snr calibration") {
  SystemConfig c;
  Rng rng = make_rng(8);
  GroundTruth t = synth_channels(c, rng);
  const MeasurementDesign design = draw_design(c, rng);
  const cmat y = noise_free_observation(t, design);
  const double power = y.squaredNorm() / static_cast<double>(y.size());
  CHECK(snr_to_sigma2(t, design, 0.0) == doctest::Approx(power).epsilon(1e-12));
  CHECK(snr_to_sigma2(t, design, 10.0) == doctest::Approx(power / 10.0).epsilon(1e-12));
  const double before = snr_to_sigma2(t, design, 20.0);
  t.h_bs *= std::sqrt(2.0);
  CHECK(snr_to_sigma2(t, design, 20.0) == doctest::Approx(2.0 * before).epsilon(1e-12));
}

TEST_CASE("measurements are reproducible from the seed") {
  SystemConfig c;
  c.sigma2 = 0.5;
  Rng r1 = make_rng(77);
  Rng r2 = make_rng(77);
  const GroundTruth t1 = synth_channels(c, r1);
  const GroundTruth t2 = synth_channels(c, r2);
  const MeasurementSet m1 = gen_measurements(c, t1, r1);
  const MeasurementSet m2 = gen_measurements(c, t2, r2);
  CHECK((m1.y_tilde - m2.y_tilde).norm() == 0.0);
  CHECK((m1.noise - m2.noise).norm() == 0.0);
  CHECK(m1.noise.squaredNorm() > 0.0);
}

TEST_CASE("off-grid mode produces consistent nearest-grid indices") {
  SystemConfig c;
  c.off_grid = true;
  Rng rng = make_rng(6);
  const GroundTruth t = synth_channels(c, rng);
  CHECK(t.h_ms.allFinite());
  for (Index k : t.aoa_irs) CHECK((k >= 0 && k < c.grid_size));
  CHECK((t.aod_ms >= 0 && t.aod_ms < c.grid_size));
}
