#pragma once

// Reference predictors: aging-unaware stale CSI and a far-field OMP + Prony
// tap extrapolator.

#include "tsbli/system_config.hpp"
#include "tsbli/tensor.hpp"

#include <span>
#include <string>
#include <vector>

namespace tsbli {

struct BaselineResult {
  std::string method;
  Tensor prediction;                    // N_an x N_sc x horizon; empty for horizon 0
  Tensor fitted;                        // in-frame reconstruction (omp_prony only)
  std::vector<double> nmse_per_horizon; // filled by score_baseline
};

/// Wiener-scaled last pilot slice, gain P / (P + noise_var) with P the
/// noise-corrected average power of y, repeated over the horizon.
BaselineResult stale_csi(const Tensor& y, double noise_var, std::size_t horizon);

struct OmpPronyOptions {
  std::size_t beam_atoms = 0;   // 0: N_an
  std::size_t delay_atoms = 0;  // 0: N_sc / 2
  std::size_t sparsity = 8;
  double max_pole_modulus = 1.05;
};

struct PoleFit {
  cplx pole{1.0, 0.0};
  cplx amplitude{0.0, 0.0};
};

/// One-exponential fit x[n] ~ amplitude * pole^n: the pole is the lag-one
/// least-squares predictor, the amplitude the least-squares fit given it.
PoleFit fit_single_pole(std::span<const cplx> x);

/// OMP on the first pilot symbol over the Kronecker cosine-delay dictionary
/// (half-open cosine grid, delays on [0, T_cp]), per-symbol least-squares tap
/// refit, single-pole extrapolation of each tap. Poles beyond
/// max_pole_modulus are projected onto the unit circle.
BaselineResult omp_prony(const Tensor& y, const SystemConfig& cfg, const OmpPronyOptions& opts, std::size_t horizon);

/// Per-slice NMSE of result.prediction against truth (same shape).
void score_baseline(BaselineResult& result, const Tensor& truth);

/// ||estimate - truth||^2 / ||truth||^2.
double nmse(const Tensor& estimate, const Tensor& truth);

}  // namespace tsbli
