#include "tsbli/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <thread>

namespace tsbli {

namespace {

constexpr std::uint64_t kTrialTag = 0x7121A1;
constexpr std::uint64_t kNoiseTag = 0x9015E;

double slice_nmse(const Tensor& pred, const Tensor& truth, std::size_t horizon) {
  const std::size_t slab = truth.dim(0) * truth.dim(1);
  const std::size_t off = (horizon - 1) * slab;
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < slab; ++i) {
    err += std::norm(pred[off + i] - truth[off + i]);
    ref += std::norm(truth[off + i]);
  }
  if (!(ref > 0)) throw std::invalid_argument("ground-truth slice has zero energy");
  return err / ref;
}

double to_db(double x) { return 10.0 * std::log10(std::max(x, std::numeric_limits<double>::min())); }

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

template <typename F>
auto timed(bool enabled, std::optional<double>& ms, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto out = f();
  if (enabled) {
    ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

}  // namespace

ExperimentConfig at_value(const ExperimentConfig& cfg, double value) {
  ExperimentConfig c = cfg;
  switch (cfg.axis) {
    case SweepAxis::kSnr:
      c.snr_db = value;
      break;
    case SweepAxis::kHorizon:
      if (!(value >= 1)) throw ConfigError("horizon sweep values must be >= 1");
      c.horizons = {static_cast<std::size_t>(value)};
      break;
    case SweepAxis::kCarrier:
      c.system.carrier_frequency = value;
      break;
    case SweepAxis::kIterations:
      if (!(value >= 0)) throw ConfigError("iteration sweep values must be >= 0");
      c.inference.outer_iterations = static_cast<std::size_t>(value);
      break;
    case SweepAxis::kSns:
      c.scene.sns_fraction = value;
      break;
  }
  return c;
}

GridCounts resolved_grids(const ExperimentConfig& cfg) {
  GridCounts g = GridCounts::defaults_for(cfg.system);
  if (cfg.grids.beam) g.beam = cfg.grids.beam;
  if (cfg.grids.delay) g.delay = cfg.grids.delay;
  if (cfg.grids.doppler) g.doppler = cfg.grids.doppler;
  return g;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
  auto rng = make_stream(seed, {kTrialTag, trial});
  return rng();
}

TrialOutcome run_trial(const ExperimentConfig& base, double value, std::uint64_t seed, std::size_t trial_index,
                       const TraceSink& trace) {
  const ExperimentConfig cfg = at_value(base, value);
  cfg.validate();
  const SystemConfig& sys = cfg.system;
  const std::size_t max_h = *std::max_element(cfg.horizons.begin(), cfg.horizons.end());

  TrialOutcome out;
  out.scene = sample_scene(sys, cfg.scene, seed);
  const Tensor h = assemble_sft(out.scene, sys);
  out.truth = ground_truth_prediction(out.scene, sys, max_h);
  out.noise_var = noise_variance_for_snr(h, cfg.snr_db);
  auto noise_rng = make_stream(seed, {kNoiseTag});
  const Tensor y = observe(h, out.noise_var, noise_rng);
  const GridSpec grids = make_grids(sys, resolved_grids(cfg), sys.max_doppler(cfg.scene.speed), cfg.scene.min_distance);

  auto emit = [&](const std::string& method, const Tensor& pred, std::optional<double> ms, std::size_t iters,
                  std::optional<bool> converged) {
    for (auto hz : cfg.horizons) {
      MetricRow r;
      r.axis = to_string(cfg.axis);
      r.value = value;
      r.method = method;
      r.trial = trial_index;
      r.seed = seed;
      r.horizon = hz;
      r.nmse = slice_nmse(pred, out.truth, hz);
      r.nmse_db = to_db(*r.nmse);
      r.runtime_ms = ms;
      r.iterations = iters;
      r.converged = converged;
      out.rows.push_back(std::move(r));
    }
  };

  for (const auto& method : cfg.methods) {
    std::optional<double> ms;
    if (method == "tsbli") {
      const Tensor pred = timed(cfg.timing, ms, [&] {
        out.tsbli = em_loop(y, out.noise_var, grids, sys, cfg.inference, {}, trace);
        return predict(out.tsbli->state, out.tsbli->hyper, grids, sys, max_h);
      });
      emit(method, pred, ms, out.tsbli->iterations, out.tsbli->converged);
    } else if (method == "stale") {
      const auto res = timed(cfg.timing, ms, [&] { return stale_csi(y, out.noise_var, max_h); });
      emit(method, res.prediction, ms, 0, std::nullopt);
    } else if (method == "omp_prony") {
      const auto res = timed(cfg.timing, ms, [&] { return omp_prony(y, sys, cfg.omp, max_h); });
      emit(method, res.prediction, ms, 0, std::nullopt);
    }
  }
  return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  struct Job {
    std::size_t value_index;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < cfg.values.size(); ++v) {
    for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({v, t});
  }
  std::vector<std::vector<MetricRow>> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const double value = cfg.values[jobs[j].value_index];
      const std::uint64_t seed = trial_seed(cfg.seed, jobs[j].trial);
      try {
        results[j] = run_trial(cfg, value, seed, jobs[j].trial).rows;
      } catch (const std::exception&) {
        for (const auto& m : cfg.methods) {
          MetricRow r;
          r.kind = "failed";
          r.axis = to_string(cfg.axis);
          r.value = value;
          r.method = m;
          r.trial = jobs[j].trial;
          r.seed = seed;
          results[j].push_back(std::move(r));
        }
      }
    }
  };

  std::size_t n_workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, jobs.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  SweepResult out;
  for (auto& rows : results) {
    for (auto& r : rows) out.trials.push_back(std::move(r));
  }
  std::stable_sort(out.trials.begin(), out.trials.end(), [](const MetricRow& a, const MetricRow& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.trial.value_or(0) < b.trial.value_or(0);
  });

  std::vector<double> values = cfg.values;
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (double v : values) {
    const ExperimentConfig at = at_value(cfg, v);
    for (const auto& m : cfg.methods) {
      for (auto hz : at.horizons) {
        double lin = 0.0, db = 0.0;
        std::size_t n = 0;
        for (const auto& r : out.trials) {
          if (r.kind == "trial" && r.value == v && r.method == m && r.horizon == hz && r.nmse) {
            lin += *r.nmse;
            db += *r.nmse_db;
            ++n;
          }
        }
        MetricRow s;
        s.kind = "summary";
        s.axis = to_string(cfg.axis);
        s.value = v;
        s.method = m;
        s.seed = cfg.seed;
        s.horizon = hz;
        if (n) {
          s.nmse = lin / static_cast<double>(n);
          s.nmse_db = db / static_cast<double>(n);
        }
        s.iterations = n;
        out.summary.push_back(std::move(s));
      }
    }
  }
  return out;
}

void write_csv(std::ostream& out, const SweepResult& result) {
  out << "kind,axis,value,method,trial,seed,horizon,nmse,nmse_db,runtime_ms,iterations,converged\n";
  auto opt = [](const std::optional<double>& x) { return x ? fmt(*x) : std::string("NA"); };
  auto row = [&](const MetricRow& r) {
    out << r.kind << ',' << r.axis << ',' << fmt(r.value) << ',' << r.method << ','
        << (r.trial ? std::to_string(*r.trial) : std::string("NA")) << ',' << r.seed << ',' << r.horizon << ','
        << opt(r.nmse) << ',' << opt(r.nmse_db) << ',' << opt(r.runtime_ms) << ',' << r.iterations << ','
        << (r.converged ? (*r.converged ? "1" : "0") : "NA") << '\n';
  };
  for (const auto& r : result.trials) row(r);
  for (const auto& r : result.summary) row(r);
}

void write_csv(const std::filesystem::path& path, const SweepResult& result) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_csv(out, result);
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

double summary_db(const SweepResult& result, double value, const std::string& method, std::size_t horizon) {
  for (const auto& r : result.summary) {
    if (r.value == value && r.method == method && r.horizon == horizon && r.nmse_db) return *r.nmse_db;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace tsbli
