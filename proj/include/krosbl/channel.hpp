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

#include "krosbl/kron.hpp"
#include "krosbl/types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

namespace krosbl {

using Rng = std::mt19937_64;

/// Pilot matrix family. dft: the first M rows and K_P columns of a
/// max(M, K_P)-point DFT scaled by 1/sqrt(M), so the rows (or columns) are
/// orthogonal. sign: i.i.d. entries on {-1/sqrt(M), +1/sqrt(M)}.
/// With dft and K_P < M, some grid MS directions are orthogonal to every
/// pilot and never reach the receiver.
enum class PilotDesign { dft, sign };

std::string to_string(PilotDesign p);
PilotDesign parse_pilot_design(const std::string& name);

/// Independent generator for one Monte-Carlo stream, derived from a base
/// seed and any number of stream indices.
Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream = {});

/// Physical and algorithmic dimensions of one IRS-aided uplink scenario.
/// Defaults are the desk-scale reference experiment.
struct SystemConfig {
  Index bs_antennas = 16;
  Index ms_antennas = 6;
  Index irs_elements = 256;
  Index grid_size = 18;
  Index irs_configs = 4;
  Index pilots_per_config = 6;
  Index paths_ms = 2;
  Index paths_bs = 2;
  double sigma2 = 1.0;
  double element_spacing = 0.5;
  /// Count in the IRS alphabet normalizer {-1/sqrt(c), +1/sqrt(c)}.
  /// Zero selects the grid size.
  double irs_norm_count = 0.0;
  /// Draw angles uniformly in cosine instead of on the grid. Sparse
  /// representations in GroundTruth are then nearest-grid approximations.
  bool off_grid = false;
  PilotDesign pilot_design = PilotDesign::dft;
  std::uint64_t seed = 1;

  Index time_slots() const { return irs_configs * pilots_per_config; }
  Index measurements() const { return bs_antennas * time_slots(); }
  Index unknowns() const { return grid_size * grid_size * grid_size; }
  double irs_amplitude() const;

  /// Throws ConfigError when a count is < 1, sigma2 < 0, or a path count
  /// exceeds the grid size.
  void validate() const;
};

/// Ground-truth channels together with their angular-domain sparse factors.
struct GroundTruth {
  cmat h_ms;  // L x M
  cmat h_bs;  // B x L
  cvec g_b;
  cvec g_ld;
  cvec g_la;
  cvec g_m;
  cvec g_l;  // reduced cascade factor
  cvec g;    // kron(g_l, conj(g_m), g_b)
  std::vector<Index> support;
  cvec gains_ms;
  cvec gains_bs;
  std::vector<Index> aoa_irs;  // per MS-IRS path
  Index aod_ms = 0;
  std::vector<Index> aoa_bs;  // per IRS-BS path
  Index aod_irs = 0;
};

/// Pilot matrix and IRS configurations.
struct MeasurementDesign {
  cmat pilots;  // M x K_P
  cmat theta;   // L x K_I
};

struct MeasurementSet {
  cmat pilots;  // M x K_P
  cmat theta;   // L x K_I
  cmat y;       // (B K_P) x K_I, column k is vec(Y_k)
  cvec y_tilde;
  cmat noise;   // realization added to y
  double sigma2 = 0.0;
};

struct Dictionary {
  cmat phi_l;  // K_I x N
  cmat phi_m;  // K_P x N
  cmat phi_b;  // B x N
  cmat phi_a;  // L x N
  SteeringMatrix a_l;
  SteeringMatrix a_m;
  SteeringMatrix a_b;

  Index grid_size() const { return phi_b.cols(); }
  /// kron(phi_l, phi_m, phi_b), shape (B K) x N^3.
  KronOperator sensing() const { return KronOperator({phi_l, phi_m, phi_b}); }
  /// kron(phi_a, conj(A_M), phi_b), shape (L M B) x N^3.
  KronOperator reconstruction() const {
    return KronOperator({phi_a, a_m.entries.conjugate(), phi_b});
  }
};

/// Where column (n1, n2) of the full IRS pair dictionary lands in the
/// reduced N-column dictionary, and the scalar relating the two.
struct CascadeReduction {
  std::vector<Index> bin;    // N^2 entries, indexed n1 * N + n2
  std::vector<cplx> scale;   // column(n1, n2) = scale * kept column bin
  double max_residual = 0.0; // worst relative non-proportionality
};

/// Transpose of khatri_rao(A_L^T, A_L^H): L x N^2, column n1*N+n2 equals
/// a_L(psi_n1) .* conj(a_L(psi_n2)).
cmat irs_pair_dictionary(const SteeringMatrix& a_l);

/// Full K_I x N^2 IRS dictionary Theta^T * irs_pair_dictionary(A_L).
cmat full_irs_dictionary(const cmat& theta, const SteeringMatrix& a_l);

CascadeReduction cascade_reduction(const SteeringMatrix& a_l);

/// Steering dictionaries on the default grid for the configured arrays.
struct ArrayDictionaries {
  SteeringMatrix a_l, a_m, a_b;
};
ArrayDictionaries array_dictionaries(const SystemConfig& cfg);

GroundTruth synth_channels(const SystemConfig& cfg, Rng& rng);

MeasurementDesign draw_design(const SystemConfig& cfg, Rng& rng);

/// Noise-free received matrix, column k = vec(H_BS diag(theta_k) H_MS X).
cmat noise_free_observation(const GroundTruth& truth, const MeasurementDesign& design);

/// Adds noise sqrt(sigma2) * unit_noise to the noise-free observation.
MeasurementSet observe(const GroundTruth& truth, const MeasurementDesign& design, double sigma2,
                       const cmat& unit_noise);

/// i.i.d. CN(0, 1) matrix.
cmat unit_complex_noise(Index rows, Index cols, Rng& rng);

/// Draws a design and noise, using cfg.sigma2.
MeasurementSet gen_measurements(const SystemConfig& cfg, const GroundTruth& truth, Rng& rng);

Dictionary build_dictionary(const SystemConfig& cfg, const cmat& pilots, const cmat& theta);

/// Cascaded channel product matrix H_MS^T (Khatri-Rao) H_BS, shape (M B) x L.
cmat reconstruct_cascade(const Dictionary& dict, const cvec& g_hat);

/// vec(H_BS diag(theta) H_MS) reshaped to B x M.
cmat cascaded_channel(const cmat& h_bs, const cmat& h_ms, const cvec& theta);

/// Applies a (M B) x L cascade product to theta and reshapes to B x M.
cmat cascade_for_config(const cmat& cascade, const cvec& theta, Index bs_antennas);

/// Noise variance giving the requested per-entry SNR of the noise-free
/// received signal, averaged over all IRS configurations.
double snr_to_sigma2(const GroundTruth& truth, const MeasurementDesign& design, double snr_db);

}  // namespace krosbl
