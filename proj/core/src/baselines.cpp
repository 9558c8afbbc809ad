#include "tsbli/baselines.hpp"

#include "tsbli/factor_matrices.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>

namespace tsbli {

double nmse(const Tensor& estimate, const Tensor& truth) {
  if (estimate.shape() != truth.shape()) throw ShapeError("nmse operands differ in shape");
  const double ref = fro_norm_sq(truth);
  if (!(ref > 0)) throw std::invalid_argument("nmse reference has zero norm");
  return fro_norm_sq(subtract(estimate, truth)) / ref;
}

BaselineResult stale_csi(const Tensor& y, double noise_var, std::size_t horizon) {
  if (y.order() != 3) throw ShapeError("observation must be a 3-order tensor");
  if (noise_var < 0) throw std::invalid_argument("noise variance must be >= 0");
  BaselineResult r;
  r.method = "stale";
  if (horizon == 0) return r;
  const std::size_t n_an = y.dim(0), n_sc = y.dim(1), n_sym = y.dim(2);
  const double power = std::max(fro_norm_sq(y) / static_cast<double>(y.size()) - noise_var, 0.0);
  const double gain = power + noise_var > 0 ? power / (power + noise_var) : 0.0;
  r.prediction = Tensor({n_an, n_sc, horizon});
  const std::size_t slab = n_an * n_sc;
  const auto src = y.data().subspan((n_sym - 1) * slab, slab);
  auto dst = r.prediction.data();
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t i = 0; i < slab; ++i) dst[t * slab + i] = gain * src[i];
  }
  return r;
}

PoleFit fit_single_pole(std::span<const cplx> x) {
  PoleFit f;
  if (x.empty()) return f;
  cplx num{0.0, 0.0};
  double den = 0.0;
  for (std::size_t n = 0; n + 1 < x.size(); ++n) {
    num += x[n + 1] * std::conj(x[n]);
    den += std::norm(x[n]);
  }
  f.pole = den > 0 ? num / den : cplx{1.0, 0.0};
  if (den == 0) f.pole = {1.0, 0.0};
  cplx fit{0.0, 0.0};
  double energy = 0.0;
  cplx zn{1.0, 0.0};
  for (const auto& v : x) {
    fit += std::conj(zn) * v;
    energy += std::norm(zn);
    zn *= f.pole;
  }
  f.amplitude = energy > 0 ? fit / energy : cplx{0.0, 0.0};
  return f;
}

namespace {

cplx real_power(cplx z, double e) {
  const double r = std::abs(z);
  if (r == 0) return {0.0, 0.0};
  return std::polar(std::pow(r, e), std::arg(z) * e);
}

}  // namespace

BaselineResult omp_prony(const Tensor& y, const SystemConfig& cfg, const OmpPronyOptions& opts, std::size_t horizon) {
  cfg.validate();
  const Shape sft{cfg.num_antennas, cfg.num_subcarriers, cfg.num_symbols};
  if (y.shape() != sft) throw ShapeError("observation must be N_an x N_sc x N_sym");
  if (opts.sparsity < 1) throw std::invalid_argument("OMP sparsity must be >= 1");

  GridCounts counts = GridCounts::defaults_for(cfg);
  if (opts.beam_atoms) counts.beam = opts.beam_atoms;
  if (opts.delay_atoms) counts.delay = opts.delay_atoms;
  counts.doppler = 1;
  const GridSpec grids = make_grids(cfg, counts, 0.0, 1.0);
  const Perturbations zero = Perturbations::zeros(grids);
  const CMatrix A = beam_matrix(grids, zero, cfg);
  const CMatrix B = delay_matrix(grids, zero, cfg);

  const auto n_an = static_cast<Eigen::Index>(cfg.num_antennas);
  const auto n_sc = static_cast<Eigen::Index>(cfg.num_subcarriers);
  const auto n_sym = static_cast<Eigen::Index>(cfg.num_symbols);
  const Eigen::Index slab = n_an * n_sc;

  // Column s of Ymat is symbol s vectorized with antennas fastest.
  const Eigen::Map<const CMatrix> Ymat(y.data().data(), slab, n_sym);

  const std::size_t k_max = std::min<std::size_t>(opts.sparsity, static_cast<std::size_t>(A.cols() * B.cols()));
  std::vector<std::pair<Eigen::Index, Eigen::Index>> support;
  CMatrix Phi(slab, 0);
  CVector residual = Ymat.col(0);
  const CVector y0 = Ymat.col(0);
  for (std::size_t it = 0; it < k_max; ++it) {
    const Eigen::Map<const CMatrix> R(residual.data(), n_an, n_sc);
    const CMatrix corr = A.adjoint() * R * B.conjugate();
    Eigen::Index bi = 0, di = 0;
    corr.cwiseAbs2().maxCoeff(&bi, &di);
    if (std::find(support.begin(), support.end(), std::make_pair(bi, di)) != support.end()) break;
    support.emplace_back(bi, di);
    CVector atom(slab);
    for (Eigen::Index f = 0; f < n_sc; ++f) atom.segment(f * n_an, n_an) = A.col(bi) * B(f, di);
    Phi.conservativeResize(Eigen::NoChange, Phi.cols() + 1);
    Phi.col(Phi.cols() - 1) = atom;
    const CVector x = Phi.colPivHouseholderQr().solve(y0);
    residual = y0 - Phi * x;
    if (residual.squaredNorm() <= 1e-24 * std::max(y0.squaredNorm(), 1e-300)) break;
  }

  const CMatrix taps = Phi.colPivHouseholderQr().solve(Ymat);  // k x N_sym

  BaselineResult r;
  r.method = "omp_prony";
  r.fitted = Tensor(sft);
  Eigen::Map<CMatrix>(r.fitted.data().data(), slab, n_sym) = Phi * taps;
  if (horizon == 0) return r;

  const double origin = static_cast<double>(cfg.num_symbols - 1);
  const double step = 1.0 / static_cast<double>(cfg.pilot_symbol_interval);
  CMatrix future(taps.rows(), static_cast<Eigen::Index>(horizon));
  for (Eigen::Index k = 0; k < taps.rows(); ++k) {
    const CVector series = taps.row(k).transpose();
    PoleFit pf = fit_single_pole(std::span<const cplx>(series.data(), static_cast<std::size_t>(series.size())));
    if (std::abs(pf.pole) > opts.max_pole_modulus) pf.pole /= std::abs(pf.pole);
    for (std::size_t n = 1; n <= horizon; ++n) {
      future(k, static_cast<Eigen::Index>(n - 1)) =
          pf.amplitude * real_power(pf.pole, origin + static_cast<double>(n) * step);
    }
  }
  r.prediction = Tensor({cfg.num_antennas, cfg.num_subcarriers, horizon});
  Eigen::Map<CMatrix>(r.prediction.data().data(), slab, static_cast<Eigen::Index>(horizon)) = Phi * future;
  return r;
}

void score_baseline(BaselineResult& result, const Tensor& truth) {
  if (result.prediction.shape() != truth.shape()) throw ShapeError("prediction and truth differ in shape");
  const std::size_t slab = truth.dim(0) * truth.dim(1);
  result.nmse_per_horizon.clear();
  for (std::size_t t = 0; t < truth.dim(2); ++t) {
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < slab; ++i) {
      err += std::norm(result.prediction[t * slab + i] - truth[t * slab + i]);
      ref += std::norm(truth[t * slab + i]);
    }
    result.nmse_per_horizon.push_back(ref > 0 ? err / ref : 0.0);
  }
}

}  // namespace tsbli
