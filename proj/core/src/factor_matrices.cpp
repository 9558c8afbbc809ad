#include "tsbli/factor_matrices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tsbli {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr cplx kJ{0.0, 1.0};

double beam_phase(std::size_t n, double cosine, double slope, const SystemConfig& cfg) {
  const double d = cfg.element_spacing();
  const double nd = static_cast<double>(n) * d;
  return kTwoPi * nd * (cosine - nd * slope) / cfg.wavelength();
}

double uniform_step(const RVector& grid, double fallback_span) {
  if (grid.size() < 2) return fallback_span;
  return grid(1) - grid(0);
}

}  // namespace

CVector steer_beam(double cosine, double slope, const SystemConfig& cfg) {
  CVector a(static_cast<Eigen::Index>(cfg.num_antennas));
  for (std::size_t n = 0; n < cfg.num_antennas; ++n) a(n) = std::polar(1.0, beam_phase(n, cosine, slope, cfg));
  return a;
}

CVector steer_beam_dcosine(double cosine, double slope, const SystemConfig& cfg) {
  CVector a = steer_beam(cosine, slope, cfg);
  const double k = kTwoPi * cfg.element_spacing() / cfg.wavelength();
  for (Eigen::Index n = 0; n < a.size(); ++n) a(n) *= kJ * (k * static_cast<double>(n));
  return a;
}

CVector steer_beam_dslope(double cosine, double slope, const SystemConfig& cfg) {
  CVector a = steer_beam(cosine, slope, cfg);
  const double d = cfg.element_spacing();
  const double k = kTwoPi * d * d / cfg.wavelength();
  for (Eigen::Index n = 0; n < a.size(); ++n) {
    const double nn = static_cast<double>(n);
    a(n) *= -kJ * (k * nn * nn);
  }
  return a;
}

CVector steer_delay(double delay, const SystemConfig& cfg) {
  CVector b(static_cast<Eigen::Index>(cfg.num_subcarriers));
  const double df = cfg.pilot_subcarrier_spacing();
  for (std::size_t n = 0; n < cfg.num_subcarriers; ++n) {
    b(n) = std::polar(1.0, -kTwoPi * static_cast<double>(n) * df * delay);
  }
  return b;
}

CVector steer_delay_d(double delay, const SystemConfig& cfg) {
  CVector b = steer_delay(delay, cfg);
  const double df = cfg.pilot_subcarrier_spacing();
  for (Eigen::Index n = 0; n < b.size(); ++n) b(n) *= -kJ * (kTwoPi * static_cast<double>(n) * df);
  return b;
}

CVector steer_doppler(double doppler, const SystemConfig& cfg) {
  CVector c(static_cast<Eigen::Index>(cfg.num_symbols));
  const double dt = cfg.pilot_period();
  for (std::size_t n = 0; n < cfg.num_symbols; ++n) {
    c(n) = std::polar(1.0, kTwoPi * static_cast<double>(n) * dt * doppler);
  }
  return c;
}

CVector steer_doppler_d(double doppler, const SystemConfig& cfg) {
  CVector c = steer_doppler(doppler, cfg);
  const double dt = cfg.pilot_period();
  for (Eigen::Index n = 0; n < c.size(); ++n) c(n) *= kJ * (kTwoPi * static_cast<double>(n) * dt);
  return c;
}

CVector steer_doppler_pred(double doppler, double origin, std::size_t horizon, const SystemConfig& cfg) {
  CVector c(static_cast<Eigen::Index>(horizon));
  const double dt = cfg.symbol_period();
  for (std::size_t n = 1; n <= horizon; ++n) {
    c(static_cast<Eigen::Index>(n - 1)) = std::polar(1.0, kTwoPi * (origin + static_cast<double>(n) * dt) * doppler);
  }
  return c;
}

CVector steer_doppler_pred(double doppler, std::size_t horizon, const SystemConfig& cfg) {
  return steer_doppler_pred(doppler, cfg.prediction_origin(), horizon, cfg);
}

GridCounts GridCounts::defaults_for(const SystemConfig& cfg) {
  return {cfg.num_antennas, std::max<std::size_t>(1, cfg.num_subcarriers / 2), 2 * cfg.num_symbols};
}

double GridSpec::cosine_step() const { return uniform_step(cosine, 2.0); }
double GridSpec::delay_step() const {
  return uniform_step(delay, delay.size() ? std::max(std::abs(delay(0)), 1e-9) : 1e-9);
}
double GridSpec::doppler_step() const {
  return uniform_step(doppler, doppler.size() ? std::max(std::abs(doppler(0)), 1.0) : 1.0);
}

GridSpec make_grids(const SystemConfig& cfg, const GridCounts& counts, double max_doppler, double min_distance) {
  if (counts.beam < 1 || counts.delay < 1 || counts.doppler < 1) throw ConfigError("grid counts must be >= 1");
  if (!(min_distance > 0)) throw ConfigError("minimum distance must be > 0");
  if (max_doppler < 0) throw ConfigError("maximum Doppler must be >= 0");
  GridSpec g;
  g.cosine.resize(static_cast<Eigen::Index>(counts.beam));
  for (std::size_t k = 0; k < counts.beam; ++k) {
    g.cosine(k) = -1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(counts.beam);
  }
  g.delay.resize(static_cast<Eigen::Index>(counts.delay));
  for (std::size_t k = 0; k < counts.delay; ++k) {
    g.delay(k) = counts.delay == 1 ? 0.0 : cfg.cp_duration * static_cast<double>(k) / static_cast<double>(counts.delay - 1);
  }
  g.doppler.resize(static_cast<Eigen::Index>(counts.doppler));
  for (std::size_t k = 0; k < counts.doppler; ++k) {
    g.doppler(k) = counts.doppler == 1
                       ? 0.0
                       : -max_doppler + 2.0 * max_doppler * static_cast<double>(k) / static_cast<double>(counts.doppler - 1);
  }
  g.eta_max = 1.0 / (2.0 * min_distance);
  return g;
}

Perturbations Perturbations::zeros(const GridSpec& grids) {
  return {RVector::Zero(grids.cosine.size()), RVector::Zero(grids.delay.size()),
          RVector::Zero(grids.doppler.size()), RVector::Zero(grids.cosine.size())};
}

Perturbations clamp(Perturbations p, const GridSpec& grids) {
  const double hphi = 0.5 * grids.cosine_step();
  const double htau = 0.5 * grids.delay_step();
  const double hnu = 0.5 * grids.doppler_step();
  p.dphi = p.dphi.cwiseMax(-hphi).cwiseMin(hphi);
  p.dtau = p.dtau.cwiseMax(-htau).cwiseMin(htau);
  p.dnu = p.dnu.cwiseMax(-hnu).cwiseMin(hnu);
  p.eta = p.eta.cwiseMax(0.0).cwiseMin(grids.eta_max);
  return p;
}

CMatrix beam_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg) {
  CMatrix a(static_cast<Eigen::Index>(cfg.num_antennas), grids.cosine.size());
  for (Eigen::Index k = 0; k < a.cols(); ++k) a.col(k) = steer_beam(grids.cosine(k) + pert.dphi(k), pert.eta(k), cfg);
  return a;
}

CMatrix delay_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg) {
  CMatrix b(static_cast<Eigen::Index>(cfg.num_subcarriers), grids.delay.size());
  for (Eigen::Index k = 0; k < b.cols(); ++k) b.col(k) = steer_delay(grids.delay(k) + pert.dtau(k), cfg);
  return b;
}

CMatrix doppler_matrix(const GridSpec& grids, const Perturbations& pert, const SystemConfig& cfg) {
  CMatrix c(static_cast<Eigen::Index>(cfg.num_symbols), grids.doppler.size());
  for (Eigen::Index k = 0; k < c.cols(); ++k) c.col(k) = steer_doppler(grids.doppler(k) + pert.dnu(k), cfg);
  return c;
}

CMatrix prediction_doppler_matrix(const GridSpec& grids, const Perturbations& pert, std::size_t horizon,
                                  const SystemConfig& cfg) {
  CMatrix c(static_cast<Eigen::Index>(horizon), grids.doppler.size());
  for (Eigen::Index k = 0; k < c.cols(); ++k) {
    c.col(k) = steer_doppler_pred(grids.doppler(k) + pert.dnu(k), horizon, cfg);
  }
  return c;
}

FactorSet build_factors(const GridSpec& grids, const Perturbations& pert, const RMatrix& visibility,
                        const SystemConfig& cfg) {
  const auto nb = grids.cosine.size();
  if (pert.dphi.size() != nb || pert.eta.size() != nb || pert.dtau.size() != grids.delay.size() ||
      pert.dnu.size() != grids.doppler.size()) {
    throw ShapeError("perturbation lengths do not match the grids");
  }
  if (visibility.rows() != static_cast<Eigen::Index>(cfg.num_antennas) || visibility.cols() != nb) {
    throw ShapeError("visibility matrix must be N_an x K_be");
  }
  FactorSet f;
  f.A_ss = beam_matrix(grids, pert, cfg);
  f.A = f.A_ss.cwiseProduct(visibility.cast<cplx>());
  f.B = delay_matrix(grids, pert, cfg);
  f.C = doppler_matrix(grids, pert, cfg);

  f.dA_phi.resize(f.A.rows(), nb);
  f.dA_eta.resize(f.A.rows(), nb);
  for (Eigen::Index k = 0; k < nb; ++k) {
    const double phi = grids.cosine(k) + pert.dphi(k);
    f.dA_phi.col(k) = steer_beam_dcosine(phi, pert.eta(k), cfg).cwiseProduct(visibility.col(k).cast<cplx>());
    f.dA_eta.col(k) = steer_beam_dslope(phi, pert.eta(k), cfg).cwiseProduct(visibility.col(k).cast<cplx>());
  }
  f.dB.resize(f.B.rows(), f.B.cols());
  for (Eigen::Index k = 0; k < f.B.cols(); ++k) f.dB.col(k) = steer_delay_d(grids.delay(k) + pert.dtau(k), cfg);
  f.dC.resize(f.C.rows(), f.C.cols());
  for (Eigen::Index k = 0; k < f.C.cols(); ++k) f.dC.col(k) = steer_doppler_d(grids.doppler(k) + pert.dnu(k), cfg);
  return f;
}

}  // namespace tsbli
