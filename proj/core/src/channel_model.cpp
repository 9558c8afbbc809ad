#include "tsbli/channel_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tsbli {

void SceneOptions::validate() const {
  if (num_paths < 1) throw ConfigError("scene needs at least one path");
  if (!(min_distance > 0)) throw ConfigError("minimum distance must be > 0");
  if (resolved_max_distance() < min_distance) throw ConfigError("maximum distance below minimum distance");
  if (speed < 0) throw ConfigError("speed must be >= 0");
  if (sns_fraction < 0 || sns_fraction > 1) throw ConfigError("sns_fraction must lie in [0, 1]");
}

std::mt19937_64 make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) {
  std::vector<std::uint32_t> words;
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto t : tags) push(t);
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

double slope_from_geometry(double cosine, double distance) { return (1.0 - cosine * cosine) / (2.0 * distance); }

Scene sample_scene(const SystemConfig& cfg, const SceneOptions& opts, std::uint64_t seed) {
  cfg.validate();
  opts.validate();
  auto rng = make_stream(seed, {0x5CE9E});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));

  const std::size_t n_an = cfg.num_antennas;
  const std::size_t min_len = std::max<std::size_t>(1, (n_an + 3) / 4);
  const double r_min = opts.min_distance;
  const double r_max = opts.resolved_max_distance();
  const double nu_max = cfg.max_doppler(opts.speed);

  std::vector<double> power(opts.num_paths);
  for (std::size_t l = 0; l < power.size(); ++l) power[l] = std::exp(-opts.power_decay * static_cast<double>(l));
  const double total = std::accumulate(power.begin(), power.end(), 0.0);

  Scene scene;
  scene.seed = seed;
  scene.paths.reserve(opts.num_paths);
  for (std::size_t l = 0; l < opts.num_paths; ++l) {
    const double u_cos = unit(rng);
    const double u_dist = unit(rng);
    const double u_delay = unit(rng);
    const double u_angle = unit(rng);
    const double g_re = normal(rng);
    const double g_im = normal(rng);
    const double u_sns = unit(rng);
    const double u_len = unit(rng);
    const double u_start = unit(rng);

    PathParams p;
    p.cosine = -1.0 + 2.0 * u_cos;
    p.distance = r_min + (r_max - r_min) * u_dist;
    p.slope = slope_from_geometry(p.cosine, p.distance);
    p.delay = 0.8 * cfg.cp_duration * u_delay;
    p.doppler = nu_max * std::cos(2.0 * std::numbers::pi * u_angle);
    p.gain = std::sqrt(power[l] / total) * cplx{g_re, g_im};
    p.visibility.assign(n_an, 1);
    if (u_sns < opts.sns_fraction) {
      const std::size_t span = n_an - min_len + 1;
      const std::size_t len = std::min(n_an, min_len + static_cast<std::size_t>(u_len * static_cast<double>(span)));
      const std::size_t start =
          std::min(n_an - len, static_cast<std::size_t>(u_start * static_cast<double>(n_an - len + 1)));
      std::fill(p.visibility.begin(), p.visibility.end(), 0);
      std::fill(p.visibility.begin() + static_cast<std::ptrdiff_t>(start),
                p.visibility.begin() + static_cast<std::ptrdiff_t>(start + len), 1);
    }
    scene.paths.push_back(std::move(p));
  }
  return scene;
}

double delay_offset(const PathParams& p, std::size_t antenna, const SystemConfig& cfg) {
  if (antenna >= cfg.num_antennas) throw std::out_of_range("antenna index out of range");
  const double nd = static_cast<double>(antenna) * cfg.element_spacing();
  return (-nd * p.cosine + nd * nd * p.slope) / kSpeedOfLight;
}

namespace {

Tensor sum_of_outer_products(const Scene& scene, const SystemConfig& cfg, std::size_t n_time,
                             const auto& temporal_vector) {
  const std::size_t n_an = cfg.num_antennas;
  const std::size_t n_sc = cfg.num_subcarriers;
  Tensor h({n_an, n_sc, n_time});
  auto out = h.data();
  for (const auto& p : scene.paths) {
    if (p.visibility.size() != n_an) throw ShapeError("path visibility length differs from N_an");
    CVector a = steer_beam(p.cosine, p.slope, cfg);
    for (std::size_t n = 0; n < n_an; ++n) a(n) *= static_cast<double>(p.visibility[n]);
    const CVector b = steer_delay(p.delay, cfg);
    const CVector c = temporal_vector(p.doppler);
    for (std::size_t t = 0; t < n_time; ++t) {
      const cplx gc = p.gain * c(t);
      for (std::size_t f = 0; f < n_sc; ++f) {
        const cplx gbc = gc * b(f);
        cplx* col = out.data() + n_an * (f + n_sc * t);
        for (std::size_t n = 0; n < n_an; ++n) col[n] += gbc * a(n);
      }
    }
  }
  return h;
}

}  // namespace

Tensor assemble_sft(const Scene& scene, const SystemConfig& cfg) {
  cfg.validate();
  return sum_of_outer_products(scene, cfg, cfg.num_symbols,
                               [&](double nu) { return steer_doppler(nu, cfg); });
}

Tensor ground_truth_prediction(const Scene& scene, const SystemConfig& cfg, std::size_t horizon) {
  cfg.validate();
  if (horizon < 1) throw ConfigError("prediction horizon must be >= 1");
  return sum_of_outer_products(scene, cfg, horizon,
                               [&](double nu) { return steer_doppler_pred(nu, horizon, cfg); });
}

Tensor observe(const Tensor& h, double noise_var, std::mt19937_64& rng) {
  if (noise_var < 0) throw ConfigError("noise variance must be >= 0");
  if (noise_var == 0) return h;
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5 * noise_var));
  Tensor y = h;
  for (auto& v : y.data()) {
    const double re = normal(rng);
    const double im = normal(rng);
    v += cplx{re, im};
  }
  return y;
}

double noise_variance_for_snr(const Tensor& h, double snr_db) {
  const double per_element = fro_norm_sq(h) / static_cast<double>(h.size());
  return per_element / std::pow(10.0, snr_db / 10.0);
}

double amplitude_validity_distance(const SystemConfig& cfg, double zeta) {
  if (!(zeta > 0 && zeta < 1)) throw ConfigError("zeta must lie in (0, 1)");
  return zeta * cfg.aperture() / (2.0 * std::sqrt(1.0 - zeta * zeta));
}

double phase_validity_distance(const SystemConfig& cfg) {
  return std::pow(cfg.aperture(), 4.0 / 3.0) / (2.0 * std::cbrt(cfg.wavelength()));
}

}  // namespace tsbli
