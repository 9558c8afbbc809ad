#pragma once

// Synthetic ground truth: ray-traced SFT channels with near-field phase,
// per-path visibility (SnS), Doppler evolution, and noisy comb-pilot
// observations.

#include "tsbli/factor_matrices.hpp"
#include "tsbli/system_config.hpp"
#include "tsbli/tensor.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace tsbli {

struct PathParams {
  cplx gain{0.0, 0.0};
  double cosine = 0.0;    // direction cosine in [-1, 1]
  double distance = 0.0;  // m
  double slope = 0.0;     // 1/m, (1 - cosine^2) / (2 distance)
  double delay = 0.0;     // s, reference delay at the first antenna
  double doppler = 0.0;   // Hz
  std::vector<std::uint8_t> visibility;  // one 0/1 entry per antenna
};

struct Scene {
  std::vector<PathParams> paths;
  std::uint64_t seed = 0;

  std::size_t size() const { return paths.size(); }
};

struct SceneOptions {
  std::size_t num_paths = 4;
  double min_distance = 10.0;    // m
  double max_distance = 0.0;     // m; 10 * min_distance when 0
  double speed = 60.0 / 3.6;     // m/s
  double sns_fraction = 0.0;     // probability that a path is partially visible
  double power_decay = 0.5;      // per-path exponent of the exponential power profile

  double resolved_max_distance() const { return max_distance > 0 ? max_distance : 10.0 * min_distance; }
  void validate() const;
};

/// Deterministic seed-to-stream mapping: the engine is mt19937_64 seeded with
/// a std::seed_seq over the 32-bit halves (low first) of `seed` followed by
/// those of each tag. Distinct tag paths give independent streams.
std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags = {});

double slope_from_geometry(double cosine, double distance);

/// Draws L paths. Every path consumes the same nine variates in the same
/// order whatever sns_fraction is, so scenes with and without SnS drawn from
/// one seed share all other parameters.
Scene sample_scene(const SystemConfig& cfg, const SceneOptions& opts, std::uint64_t seed);

/// Delay difference between antenna `antenna` (0-based) and the first one.
double delay_offset(const PathParams& p, std::size_t antenna, const SystemConfig& cfg);

/// N_an x N_sc x N_sym channel built from per-path outer products.
Tensor assemble_sft(const Scene& scene, const SystemConfig& cfg);

/// N_an x N_sc x horizon channel at t = T0 + n dT, n = 1..horizon.
Tensor ground_truth_prediction(const Scene& scene, const SystemConfig& cfg, std::size_t horizon);

/// Y = H + Z with Z i.i.d. CN(0, noise_var). The pilot tensor is all ones.
Tensor observe(const Tensor& h, double noise_var, std::mt19937_64& rng);

/// sigma^2 such that ||H||^2 / (numel * sigma^2) equals the SNR.
double noise_variance_for_snr(const Tensor& h, double snr_db);

/// Distance beyond which amplitude variation across the aperture stays
/// within `zeta`.
double amplitude_validity_distance(const SystemConfig& cfg, double zeta);
/// Distance beyond which third-order phase terms are negligible.
double phase_validity_distance(const SystemConfig& cfg);

}  // namespace tsbli
