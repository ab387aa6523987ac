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

#include "krosbl/channel.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <numbers>
#include <numeric>

namespace krosbl {

namespace {

std::vector<Index> draw_distinct(Index count, Index n, Rng& rng) {
  std::vector<Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Index{0});
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(count));
  return all;
}

cplx complex_normal(Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

cvec unit_vector(Index n, Index k) {
  cvec e = cvec::Zero(n);
  e[k] = 1.0;
  return e;
}

Index nearest_grid_index(double cosine, Index n) {
  // cos psi_k = 2(k+1)/N - 1 for k = 0..N-1
  const double k = std::round((cosine + 1.0) * static_cast<double>(n) / 2.0) - 1.0;
  const auto idx = static_cast<Index>(k);
  return ((idx % n) + n) % n;
}

cmat random_sign_matrix(Index rows, Index cols, double amplitude, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  cmat m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = coin(rng) ? amplitude : -amplitude;
  }
  return m;
}

cmat dft_pilots(Index m, Index kp) {
  const Index p = std::max(m, kp);
  const double amp = 1.0 / std::sqrt(static_cast<double>(m));
  cmat x(m, kp);
  for (Index k = 0; k < kp; ++k) {
    for (Index i = 0; i < m; ++i) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>((i * k) % p) / static_cast<double>(p);
      x(i, k) = std::polar(amp, phase);
    }
  }
  return x;
}

}  // namespace

std::string to_string(PilotDesign p) { return p == PilotDesign::dft ? "dft" : "sign"; }

PilotDesign parse_pilot_design(const std::string& name) {
  if (name == "dft") return PilotDesign::dft;
  if (name == "sign") return PilotDesign::sign;
  throw ConfigError("unknown pilot design '" + name + "' (expected dft or sign)");
}

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.push_back(static_cast<std::uint32_t>(seed));
  words.push_back(static_cast<std::uint32_t>(seed >> 32));
  for (auto s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

double SystemConfig::irs_amplitude() const {
  const double count = irs_norm_count > 0.0 ? irs_norm_count : static_cast<double>(grid_size);
  return 1.0 / std::sqrt(count);
}

void SystemConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(bs_antennas, "bs_antennas");
  positive(ms_antennas, "ms_antennas");
  positive(irs_elements, "irs_elements");
  positive(grid_size, "grid_size");
  positive(irs_configs, "irs_configs");
  positive(pilots_per_config, "pilots_per_config");
  positive(paths_ms, "paths_ms");
  positive(paths_bs, "paths_bs");
  if (paths_ms > grid_size || paths_bs > grid_size) {
    throw ConfigError("path count exceeds grid size: cannot place distinct on-grid paths");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) throw ConfigError("sigma2 must be finite and >= 0");
  if (!(element_spacing > 0.0)) throw ConfigError("element_spacing must be > 0");
  if (irs_norm_count < 0.0) throw ConfigError("irs_norm_count must be >= 0");
}

cmat irs_pair_dictionary(const SteeringMatrix& a_l) {
  const cmat& a = a_l.entries;
  return khatri_rao(a.transpose(), a.adjoint()).transpose();
}

cmat full_irs_dictionary(const cmat& theta, const SteeringMatrix& a_l) {
  if (theta.rows() != a_l.antennas()) {
    throw DimensionError("full_irs_dictionary: theta rows must equal IRS element count");
  }
  return theta.transpose() * irs_pair_dictionary(a_l);
}

CascadeReduction cascade_reduction(const SteeringMatrix& a_l) {
  const Index n = a_l.grid_size();
  const cmat pairs = irs_pair_dictionary(a_l);
  CascadeReduction red;
  red.bin.resize(static_cast<std::size_t>(n * n));
  red.scale.resize(static_cast<std::size_t>(n * n));
  for (Index n1 = 0; n1 < n; ++n1) {
    for (Index n2 = 0; n2 < n; ++n2) {
      const Index c = n1 * n + n2;
      const Index k = ((n2 - n1) % n + n) % n;
      const auto kept = pairs.col(k);
      const auto col = pairs.col(c);
      const cplx s = kept.dot(col) / kept.squaredNorm();
      const double res = (col - s * kept).norm() / std::max(col.norm(), 1e-300);
      red.bin[static_cast<std::size_t>(c)] = k;
      red.scale[static_cast<std::size_t>(c)] = s;
      red.max_residual = std::max(red.max_residual, res);
    }
  }
  return red;
}

ArrayDictionaries array_dictionaries(const SystemConfig& cfg) {
  const auto grid = default_grid(cfg.grid_size);
  return {steering_matrix(cfg.irs_elements, grid, cfg.element_spacing),
          steering_matrix(cfg.ms_antennas, grid, cfg.element_spacing),
          steering_matrix(cfg.bs_antennas, grid, cfg.element_spacing)};
}

GroundTruth synth_channels(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  const Index n = cfg.grid_size;
  const Index l = cfg.irs_elements;
  const Index m = cfg.ms_antennas;
  const Index b = cfg.bs_antennas;
  const double delta = cfg.element_spacing;
  const auto grid = default_grid(n);

  GroundTruth t;
  std::vector<double> cos_irs_in, cos_bs_in;
  double cos_ms_out = 0.0, cos_irs_out = 0.0;
  if (!cfg.off_grid) {
    t.aoa_irs = draw_distinct(cfg.paths_ms, n, rng);
    t.aod_ms = draw_distinct(1, n, rng).front();
    t.aoa_bs = draw_distinct(cfg.paths_bs, n, rng);
    t.aod_irs = draw_distinct(1, n, rng).front();
    for (auto k : t.aoa_irs) cos_irs_in.push_back(std::cos(grid[static_cast<std::size_t>(k)]));
    for (auto k : t.aoa_bs) cos_bs_in.push_back(std::cos(grid[static_cast<std::size_t>(k)]));
    cos_ms_out = std::cos(grid[static_cast<std::size_t>(t.aod_ms)]);
    cos_irs_out = std::cos(grid[static_cast<std::size_t>(t.aod_irs)]);
  } else {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Index p = 0; p < cfg.paths_ms; ++p) cos_irs_in.push_back(u(rng));
    cos_ms_out = u(rng);
    for (Index p = 0; p < cfg.paths_bs; ++p) cos_bs_in.push_back(u(rng));
    cos_irs_out = u(rng);
    for (double c : cos_irs_in) t.aoa_irs.push_back(nearest_grid_index(c, n));
    t.aod_ms = nearest_grid_index(cos_ms_out, n);
    for (double c : cos_bs_in) t.aoa_bs.push_back(nearest_grid_index(c, n));
    t.aod_irs = nearest_grid_index(cos_irs_out, n);
  }

  t.gains_ms.resize(cfg.paths_ms);
  for (Index p = 0; p < cfg.paths_ms; ++p) t.gains_ms[p] = complex_normal(rng);
  t.gains_bs.resize(cfg.paths_bs);
  for (Index p = 0; p < cfg.paths_bs; ++p) t.gains_bs[p] = complex_normal(rng);

  const double scale_ms = std::sqrt(static_cast<double>(l * m) / static_cast<double>(cfg.paths_ms));
  const double scale_bs = std::sqrt(static_cast<double>(b * l) / static_cast<double>(cfg.paths_bs));

  // Channels straight from the ray sums.
  const cvec a_ms_out = steering_vector(m, std::acos(cos_ms_out), delta);
  const cvec a_irs_out = steering_vector(l, std::acos(cos_irs_out), delta);
  t.h_ms = cmat::Zero(l, m);
  for (Index p = 0; p < cfg.paths_ms; ++p) {
    const cvec a_in = steering_vector(l, std::acos(cos_irs_in[static_cast<std::size_t>(p)]), delta);
    t.h_ms += scale_ms * t.gains_ms[p] * a_in * a_ms_out.adjoint();
  }
  t.h_bs = cmat::Zero(b, l);
  for (Index p = 0; p < cfg.paths_bs; ++p) {
    const cvec a_in = steering_vector(b, std::acos(cos_bs_in[static_cast<std::size_t>(p)]), delta);
    t.h_bs += scale_bs * t.gains_bs[p] * a_in * a_irs_out.adjoint();
  }

  t.g_la = cvec::Zero(n);
  for (Index p = 0; p < cfg.paths_ms; ++p) {
    t.g_la[t.aoa_irs[static_cast<std::size_t>(p)]] += scale_ms * t.gains_ms[p];
  }
  t.g_m = unit_vector(n, t.aod_ms);
  t.g_b = cvec::Zero(n);
  for (Index p = 0; p < cfg.paths_bs; ++p) {
    t.g_b[t.aoa_bs[static_cast<std::size_t>(p)]] += scale_bs * t.gains_bs[p];
  }
  t.g_ld = unit_vector(n, t.aod_irs);

  const auto a_l = steering_matrix(l, grid, delta);
  const auto red = cascade_reduction(a_l);
  if (red.max_residual > 1e-9) {
    throw ConfigError("IRS element spacing does not admit the N-column cascade reduction");
  }
  t.g_l = cvec::Zero(n);
  for (Index n1 = 0; n1 < n; ++n1) {
    for (Index n2 = 0; n2 < n; ++n2) {
      const auto c = static_cast<std::size_t>(n1 * n + n2);
      t.g_l[red.bin[c]] += red.scale[c] * t.g_la[n1] * std::conj(t.g_ld[n2]);
    }
  }
  const std::array<cvec, 3> parts{t.g_l, t.g_m.conjugate(), t.g_b};
  t.g = kron_vec(parts);
  for (Index i = 0; i < t.g.size(); ++i) {
    if (t.g[i] != cplx(0.0, 0.0)) t.support.push_back(i);
  }
  return t;
}

MeasurementDesign draw_design(const SystemConfig& cfg, Rng& rng) {
  cfg.validate();
  MeasurementDesign d;
  d.theta = random_sign_matrix(cfg.irs_elements, cfg.irs_configs, cfg.irs_amplitude(), rng);
  d.pilots = cfg.pilot_design == PilotDesign::dft
                 ? dft_pilots(cfg.ms_antennas, cfg.pilots_per_config)
                 : random_sign_matrix(cfg.ms_antennas, cfg.pilots_per_config,
                                      1.0 / std::sqrt(static_cast<double>(cfg.ms_antennas)), rng);
  return d;
}

cmat noise_free_observation(const GroundTruth& truth, const MeasurementDesign& design) {
  const Index b = truth.h_bs.rows();
  const Index kp = design.pilots.cols();
  cmat y(b * kp, design.theta.cols());
  for (Index k = 0; k < design.theta.cols(); ++k) {
    const cmat yk = cascaded_channel(truth.h_bs, truth.h_ms, design.theta.col(k)) * design.pilots;
    y.col(k) = yk.reshaped();
  }
  return y;
}

cmat unit_complex_noise(Index rows, Index cols, Rng& rng) {
  cmat w(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) w(i, j) = complex_normal(rng);
  }
  return w;
}

MeasurementSet observe(const GroundTruth& truth, const MeasurementDesign& design, double sigma2,
                       const cmat& unit_noise) {
  if (!(sigma2 >= 0.0)) throw ConfigError("observe: sigma2 must be >= 0");
  MeasurementSet ms;
  ms.pilots = design.pilots;
  ms.theta = design.theta;
  ms.sigma2 = sigma2;
  ms.y = noise_free_observation(truth, design);
  if (unit_noise.rows() != ms.y.rows() || unit_noise.cols() != ms.y.cols()) {
    throw DimensionError("observe: noise realization has the wrong shape");
  }
  ms.noise = std::sqrt(sigma2) * unit_noise;
  ms.y += ms.noise;
  ms.y_tilde = ms.y.reshaped();
  return ms;
}

MeasurementSet gen_measurements(const SystemConfig& cfg, const GroundTruth& truth, Rng& rng) {
  const auto design = draw_design(cfg, rng);
  const cmat unit = unit_complex_noise(cfg.bs_antennas * cfg.pilots_per_config, cfg.irs_configs, rng);
  return observe(truth, design, cfg.sigma2, unit);
}

Dictionary build_dictionary(const SystemConfig& cfg, const cmat& pilots, const cmat& theta) {
  cfg.validate();
  if (pilots.rows() != cfg.ms_antennas || pilots.cols() != cfg.pilots_per_config) {
    throw DimensionError("build_dictionary: pilot matrix must be M x K_P");
  }
  if (theta.rows() != cfg.irs_elements || theta.cols() != cfg.irs_configs) {
    throw DimensionError("build_dictionary: IRS configuration matrix must be L x K_I");
  }
  auto arrays = array_dictionaries(cfg);
  Dictionary d;
  d.phi_a = irs_pair_dictionary(arrays.a_l).leftCols(cfg.grid_size);
  d.phi_l = theta.transpose() * d.phi_a;
  d.phi_m = pilots.transpose() * arrays.a_m.entries.conjugate();
  d.phi_b = arrays.a_b.entries;
  d.a_l = std::move(arrays.a_l);
  d.a_m = std::move(arrays.a_m);
  d.a_b = std::move(arrays.a_b);
  return d;
}

cmat reconstruct_cascade(const Dictionary& dict, const cvec& g_hat) {
  const Index n = dict.grid_size();
  if (g_hat.size() != n * n * n) throw DimensionError("reconstruct_cascade: expected length N^3");
  const cvec v = dict.reconstruction().apply(g_hat);
  const Index mb = dict.a_m.antennas() * dict.phi_b.rows();
  return v.reshaped(mb, dict.phi_a.rows());
}

cmat cascaded_channel(const cmat& h_bs, const cmat& h_ms, const cvec& theta) {
  return h_bs * theta.asDiagonal() * h_ms;
}

cmat cascade_for_config(const cmat& cascade, const cvec& theta, Index bs_antennas) {
  const cvec v = cascade * theta;
  return v.reshaped(bs_antennas, v.size() / bs_antennas);
}

double snr_to_sigma2(const GroundTruth& truth, const MeasurementDesign& design, double snr_db) {
  if (!std::isfinite(snr_db)) throw ConfigError("snr_to_sigma2: SNR must be finite");
  const cmat y = noise_free_observation(truth, design);
  const double power = y.squaredNorm() / static_cast<double>(y.size());
  return power / std::pow(10.0, snr_db / 10.0);
}

}  // namespace krosbl
