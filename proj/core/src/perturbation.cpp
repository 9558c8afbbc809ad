#include "tsbli/inference.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsbli {

namespace {

constexpr double kTrustTolerance = 1e-8;
constexpr std::size_t kMaxHalvings = 30;

/// Model term D diag(delta) F around residual R = target - D0 F:
/// J(delta) = ||R - D diag(delta) F||^2.
QuadraticModel assemble(const CMatrix& D, const CMatrix& F, const CMatrix& R, RVector origin) {
  QuadraticModel q;
  const CMatrix DD = D.adjoint() * D;
  const CMatrix FF = F * F.adjoint();
  q.Pi = DD.cwiseProduct(FF.conjugate()).real();
  const CMatrix DR = D.adjoint() * R;
  q.mu = F.conjugate().cwiseProduct(DR).rowwise().sum();
  q.origin = std::move(origin);
  return q;
}

CMatrix columns(const RVector& grid, const RVector& offset, CVector (*steer)(double, const SystemConfig&),
                const SystemConfig& cfg, Eigen::Index rows) {
  CMatrix m(rows, grid.size());
  for (Eigen::Index k = 0; k < grid.size(); ++k) m.col(k) = steer(grid(k) + offset(k), cfg);
  return m;
}

RVector origin_of(const RVector& current, ExpansionPoint at) {
  return at == ExpansionPoint::kPrevious ? current : RVector::Zero(current.size());
}

RVector stack(const RVector& a, const RVector& b) {
  RVector out(a.size() + b.size());
  out << a, b;
  return out;
}

double tau_objective(const InferenceState& s, const Perturbations& p, const GridSpec& grids, const SystemConfig& cfg) {
  const Tensor model = mode_product(mode_product(s.W, delay_matrix(grids, p, cfg), 1), doppler_matrix(grids, p, cfg), 2);
  return fro_norm_sq(subtract(s.H, model));
}

double beam_objective(const InferenceState& s, const Perturbations& p, const GridSpec& grids, const SystemConfig& cfg) {
  const CMatrix A = beam_matrix(grids, p, cfg).cwiseProduct(s.S.cast<cplx>());
  return fro_norm_sq(subtract(s.W, mode_product(s.G, A, 0)));
}

double condition_estimate(const RMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RMatrix> es(m, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev.size() == 0) return 1.0;
  const double lo = std::abs(ev.minCoeff());
  const double hi = std::abs(ev.maxCoeff());
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

RMatrix regularized(const RMatrix& pi) {
  const double dim = static_cast<double>(pi.rows());
  const double eps = dim > 0 ? 1e-8 * pi.trace() / dim : 0.0;
  RMatrix out = pi;
  out.diagonal().array() += eps > 0 ? eps : 1e-300;
  return out;
}

/// Applies `delta` from `origin`, halving until the objective does not grow.
template <typename Objective, typename Clamp>
RVector trusted_step(const RVector& origin, RVector delta, Objective&& objective, Clamp&& clamp_fn,
                     std::size_t& halvings, double& j_out) {
  const RVector start = clamp_fn(origin);
  const double j0 = objective(start);
  for (std::size_t h = 0; h <= kMaxHalvings; ++h) {
    const RVector cand = clamp_fn(RVector(origin + delta));
    const double j = objective(cand);
    if (j <= j0 + kTrustTolerance * std::abs(j0)) {
      j_out = j;
      return cand;
    }
    delta *= 0.5;
    ++halvings;
  }
  j_out = j0;
  return start;
}

}  // namespace

double objective_tau(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                     const SystemConfig& cfg, const RVector& dtau) {
  Perturbations p = hyper.pert;
  p.dtau = dtau;
  return tau_objective(state, p, grids, cfg);
}

double objective_nu(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                    const SystemConfig& cfg, const RVector& dnu) {
  Perturbations p = hyper.pert;
  p.dnu = dnu;
  return tau_objective(state, p, grids, cfg);
}

double objective_phi_eta(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                         const SystemConfig& cfg, const RVector& chi) {
  const auto k = grids.cosine.size();
  if (chi.size() != 2 * k) throw ShapeError("chi must hold 2 K_be entries");
  Perturbations p = hyper.pert;
  p.dphi = chi.head(k);
  p.eta = chi.tail(k);
  return beam_objective(state, p, grids, cfg);
}

QuadraticModel quadratic_tau(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                             const SystemConfig& cfg, ExpansionPoint at) {
  Perturbations p = hyper.pert;
  p.dtau = origin_of(hyper.pert.dtau, at);
  const CMatrix B0 = delay_matrix(grids, p, cfg);
  const CMatrix dB = columns(grids.delay, p.dtau, steer_delay_d, cfg, B0.rows());
  const CMatrix F = mode_matricize(mode_product(state.W, doppler_matrix(grids, p, cfg), 2), 1);
  const CMatrix R = mode_matricize(state.H, 1) - B0 * F;
  return assemble(dB, F, R, p.dtau);
}

QuadraticModel quadratic_nu(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                            const SystemConfig& cfg, ExpansionPoint at) {
  Perturbations p = hyper.pert;
  p.dnu = origin_of(hyper.pert.dnu, at);
  const CMatrix C0 = doppler_matrix(grids, p, cfg);
  const CMatrix dC = columns(grids.doppler, p.dnu, steer_doppler_d, cfg, C0.rows());
  const CMatrix F = mode_matricize(mode_product(state.W, delay_matrix(grids, p, cfg), 1), 2);
  const CMatrix R = mode_matricize(state.H, 2) - C0 * F;
  return assemble(dC, F, R, p.dnu);
}

QuadraticModel quadratic_phi_eta(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                                 const SystemConfig& cfg, ExpansionPoint at) {
  Perturbations p = hyper.pert;
  p.dphi = origin_of(hyper.pert.dphi, at);
  p.eta = origin_of(hyper.pert.eta, at);
  const FactorSet fs = build_factors(grids, p, state.S, cfg);
  const auto k = grids.cosine.size();
  CMatrix D(fs.A.rows(), 2 * k);
  D << fs.dA_phi, fs.dA_eta;
  const CMatrix G1 = mode_matricize(state.G, 0);
  CMatrix F(2 * k, G1.cols());
  F << G1, G1;
  const CMatrix R = mode_matricize(state.W, 0) - fs.A * G1;
  return assemble(D, F, R, stack(p.dphi, p.eta));
}

RVector solve_quadratic(const QuadraticModel& q) {
  if (q.Pi.rows() != q.Pi.cols() || q.Pi.rows() != q.mu.size()) throw ShapeError("quadratic model is not square");
  const RMatrix m = regularized(q.Pi);
  const RVector rhs = q.mu.real();
  Eigen::LDLT<RMatrix> ldlt(m);
  RVector x = ldlt.solve(rhs);
  if (ldlt.info() != Eigen::Success || !x.allFinite()) x = m.completeOrthogonalDecomposition().solve(rhs);
  if (!x.allFinite()) x.setZero();
  return x;
}

Perturbations m_step_perturbations(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                                   const SystemConfig& cfg, ExpansionPoint at, MStepReport* report) {
  MStepReport rep;
  Perturbations p = hyper.pert;
  Hyperparams h = hyper;

  auto track = [&rep](const QuadraticModel& q) {
    rep.max_condition = std::max(rep.max_condition, condition_estimate(regularized(q.Pi)));
  };

  {
    const auto q = quadratic_tau(state, h, grids, cfg, at);
    track(q);
    const CMatrix F = mode_matricize(mode_product(state.W, doppler_matrix(grids, p, cfg), 2), 1);
    const CMatrix H1 = mode_matricize(state.H, 1);
    auto obj = [&](const RVector& x) {
      return (H1 - columns(grids.delay, x, steer_delay, cfg, H1.rows()) * F).squaredNorm();
    };
    auto clamp_fn = [&](const RVector& x) {
      Perturbations c = p;
      c.dtau = x;
      return RVector(clamp(c, grids).dtau);
    };
    p.dtau = trusted_step(q.origin, solve_quadratic(q), obj, clamp_fn, rep.halvings, rep.J_tau);
    h.pert = p;
  }
  {
    const auto q = quadratic_nu(state, h, grids, cfg, at);
    track(q);
    const CMatrix F = mode_matricize(mode_product(state.W, delay_matrix(grids, p, cfg), 1), 2);
    const CMatrix H2 = mode_matricize(state.H, 2);
    auto obj = [&](const RVector& x) {
      return (H2 - columns(grids.doppler, x, steer_doppler, cfg, H2.rows()) * F).squaredNorm();
    };
    auto clamp_fn = [&](const RVector& x) {
      Perturbations c = p;
      c.dnu = x;
      return RVector(clamp(c, grids).dnu);
    };
    p.dnu = trusted_step(q.origin, solve_quadratic(q), obj, clamp_fn, rep.halvings, rep.J_nu);
    h.pert = p;
  }
  {
    const auto k = grids.cosine.size();
    const auto q = quadratic_phi_eta(state, h, grids, cfg, at);
    track(q);
    const CMatrix G1 = mode_matricize(state.G, 0);
    const CMatrix W0 = mode_matricize(state.W, 0);
    const CMatrix vis = state.S.cast<cplx>();
    auto obj = [&](const RVector& x) {
      CMatrix A(W0.rows(), k);
      for (Eigen::Index j = 0; j < k; ++j) A.col(j) = steer_beam(grids.cosine(j) + x(j), x(k + j), cfg);
      return (W0 - A.cwiseProduct(vis) * G1).squaredNorm();
    };
    auto clamp_fn = [&](const RVector& x) {
      Perturbations c = p;
      c.dphi = x.head(k);
      c.eta = x.tail(k);
      c = clamp(c, grids);
      return stack(c.dphi, c.eta);
    };
    const RVector chi = trusted_step(q.origin, solve_quadratic(q), obj, clamp_fn, rep.halvings, rep.J_phi_eta);
    p.dphi = chi.head(k);
    p.eta = chi.tail(k);
  }
  h.pert = p;
  rep.J_tau = objective_tau(state, h, grids, cfg, p.dtau);
  if (report) *report = rep;
  return p;
}

}  // namespace tsbli
