#pragma once

// Monte-Carlo experiment harness: configuration, per-trial runs of TS-BLI and
// the baselines, parallel sweeps and the metrics CSV.
//
// CSV columns (header always present, one row per trial x method x horizon,
// then one summary row per value x method x horizon):
//   kind       trial | summary | failed
//   axis       sweep axis name
//   value      sweep value
//   method     tsbli | stale | omp_prony
//   trial      trial index (NA in summaries)
//   seed       trial seed; run_trial(config, value, seed) replays the row
//   horizon    n_cp, symbols after the last pilot
//   nmse       linear NMSE of that prediction slice (mean over trials in summaries)
//   nmse_db    10 log10 nmse (mean of per-trial dB in summaries)
//   runtime_ms wall time of the method, NA unless timing is enabled
//   iterations outer EM iterations used (0 for baselines)
//   converged  1/0 for tsbli, NA for baselines

#include "tsbli/baselines.hpp"
#include "tsbli/channel_model.hpp"
#include "tsbli/factor_matrices.hpp"
#include "tsbli/inference.hpp"
#include "tsbli/system_config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tsbli {

inline const std::vector<std::string> kAllMethods = {"tsbli", "stale", "omp_prony"};

enum class SweepAxis { kSnr, kHorizon, kCarrier, kIterations, kSns };

std::string to_string(SweepAxis axis);
SweepAxis parse_axis(const std::string& name);

struct ExperimentConfig {
  SystemConfig system;
  SceneOptions scene;
  GridCounts grids;  // zero entries fall back to GridCounts::defaults_for
  InferenceOptions inference;
  OmpPronyOptions omp;
  double snr_db = 10.0;
  std::vector<std::size_t> horizons = {1, 7, 14};
  SweepAxis axis = SweepAxis::kSnr;
  std::vector<double> values = {10.0};
  std::size_t trials = 20;
  std::uint64_t seed = 1;
  std::vector<std::string> methods = kAllMethods;
  std::size_t workers = 0;  // 0: hardware concurrency
  bool timing = false;
  std::string output;

  void validate() const;
};

/// N_an = N_sc = 32, N_sym = 10, L = 4, K = 32 / 16 / 20, 20 trials.
ExperimentConfig desk_profile();
/// Table-scale system: N_an = N_sc = 128 with default grids.
ExperimentConfig stretch_profile();
ExperimentConfig profile_by_name(const std::string& name);

/// Flat `section.key = value` lines; `#` starts a comment. Lists are
/// comma-separated. Unknown keys throw ConfigError naming the line.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(std::istream& in, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);
/// Inverse of parse_config for every key (round-trips).
std::string format_config(const ExperimentConfig& cfg);

/// Configuration with the sweep value applied to its axis.
ExperimentConfig at_value(const ExperimentConfig& cfg, double value);
GridCounts resolved_grids(const ExperimentConfig& cfg);

struct MetricRow {
  std::string kind = "trial";
  std::string axis;
  double value = 0.0;
  std::string method;
  std::optional<std::size_t> trial;
  std::uint64_t seed = 0;
  std::size_t horizon = 0;
  std::optional<double> nmse;
  std::optional<double> nmse_db;
  std::optional<double> runtime_ms;
  std::size_t iterations = 0;
  std::optional<bool> converged;
};

/// Seed of trial `trial` under base seed `seed`; independent of the sweep
/// value so every value sees the same scenes.
std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial);

/// Everything one trial produces, before flattening into rows.
struct TrialOutcome {
  Scene scene;
  Tensor truth;  // N_an x N_sc x max horizon
  double noise_var = 0.0;
  std::vector<MetricRow> rows;
  std::optional<EmResult> tsbli;
};

/// `trace` is forwarded to the TS-BLI run.
TrialOutcome run_trial(const ExperimentConfig& cfg, double value, std::uint64_t seed, std::size_t trial_index = 0,
                       const TraceSink& trace = {});

struct SweepResult {
  std::vector<MetricRow> trials;
  std::vector<MetricRow> summary;
};

SweepResult run_sweep(const ExperimentConfig& cfg);

void write_csv(std::ostream& out, const SweepResult& result);
void write_csv(const std::filesystem::path& path, const SweepResult& result);

/// Mean of summary nmse_db for (value, method, horizon); NaN when absent.
double summary_db(const SweepResult& result, double value, const std::string& method, std::size_t horizon);

}  // namespace tsbli
