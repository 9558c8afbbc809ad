#pragma once

// Steering vectors, the uniform beam/delay/Doppler grids with their learnable
// perturbations, and the factor matrices (plus analytic derivatives) that map
// the BDD domain onto the SFT domain.

#include "tsbli/system_config.hpp"
#include "tsbli/tensor.hpp"

#include <cstddef>

namespace tsbli {

/// Spatial chirp: [a]_n = exp(j 2 pi n d (cosine - n d slope) / lambda), n = 0..N_an-1.
CVector steer_beam(double cosine, double slope, const SystemConfig& cfg);
/// [b]_n = exp(-j 2 pi n df_pilot tau).
CVector steer_delay(double delay, const SystemConfig& cfg);
/// [c]_n = exp(+j 2 pi n dT_pilot nu).
CVector steer_doppler(double doppler, const SystemConfig& cfg);
/// [c~]_n = exp(j 2 pi (origin + n dT) nu), n = 1..horizon.
CVector steer_doppler_pred(double doppler, double origin, std::size_t horizon, const SystemConfig& cfg);
CVector steer_doppler_pred(double doppler, std::size_t horizon, const SystemConfig& cfg);

// d/dparam of the steering vectors above.
CVector steer_beam_dcosine(double cosine, double slope, const SystemConfig& cfg);
CVector steer_beam_dslope(double cosine, double slope, const SystemConfig& cfg);
CVector steer_delay_d(double delay, const SystemConfig& cfg);
CVector steer_doppler_d(double doppler, const SystemConfig& cfg);

struct GridCounts {
  std::size_t beam = 0;
  std::size_t delay = 0;
  std::size_t doppler = 0;

  /// K_be = N_an, K_de = N_sc / 2, K_do = 2 N_sym.
  static GridCounts defaults_for(const SystemConfig& cfg);
};

/// Fixed coarse grids. The cosine grid is the half-open DFT grid
/// -1 + 2k/K_be (so +-1, which alias at half-wavelength spacing, appear once);
/// delay spans [0, T_cp] and Doppler [-nu_max, nu_max], both inclusive.
struct GridSpec {
  RVector cosine;
  RVector delay;
  RVector doppler;
  double eta_max = 0.0;  // upper clamp for learned slopes, 1/(2 r_min)

  std::size_t beam_count() const { return static_cast<std::size_t>(cosine.size()); }
  std::size_t delay_count() const { return static_cast<std::size_t>(delay.size()); }
  std::size_t doppler_count() const { return static_cast<std::size_t>(doppler.size()); }
  Shape bdd_shape() const { return {beam_count(), delay_count(), doppler_count()}; }

  double cosine_step() const;
  double delay_step() const;
  double doppler_step() const;
};

GridSpec make_grids(const SystemConfig& cfg, const GridCounts& counts, double max_doppler, double min_distance);

/// Learnable offsets relative to the coarse grids plus per-beam slopes.
struct Perturbations {
  RVector dphi;
  RVector dtau;
  RVector dnu;
  RVector eta;

  static Perturbations zeros(const GridSpec& grids);
};

/// Clamps offsets to half a grid step and slopes to [0, eta_max].
Perturbations clamp(Perturbations p, const GridSpec& grids);

struct FactorSet {
  CMatrix A;      // N_an x K_be, A_ss .* S
  CMatrix A_ss;   // N_an x K_be, unit modulus
  CMatrix B;      // N_sc x K_de
  CMatrix C;      // N_sym x K_do
  CMatrix dA_phi; // d A / d cosine (masked by S)
  CMatrix dA_eta; // d A / d slope (masked by S)
  CMatrix dB;
  CMatrix dC;
};

/// `visibility` is N_an x K_be, binary or soft probabilities.
FactorSet build_factors(const GridSpec& grids, const Perturbations& pert, const RMatrix& visibility,
                        const SystemConfig& cfg);

/// Columns are steer_beam at the perturbed cosines and learned slopes.
CMatrix beam_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg);
CMatrix delay_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg);
CMatrix doppler_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg);

/// horizon x K_do matrix of steer_doppler_pred columns.
CMatrix prediction_doppler_matrix(const GridSpec& grids, const Perturbations& pert, std::size_t horizon,
                                  const SystemConfig& cfg);

}  // namespace tsbli
