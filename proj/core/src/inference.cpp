#include "tsbli/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace tsbli {

namespace {

RealTensor floored(RealTensor x, double floor, std::size_t& hits) {
  for (auto& v : x.data()) {
    if (!(v >= floor)) {  // also catches NaN
      v = floor;
      ++hits;
    }
  }
  return x;
}

RealTensor reciprocal(const RealTensor& x, double floor) {
  return map(x, [floor](double v) { return 1.0 / std::max(v, floor); });
}

RMatrix reciprocal(const RMatrix& x, double floor) {
  return x.unaryExpr([floor](double v) { return 1.0 / std::max(v, floor); });
}

RMatrix floored(RMatrix x, double floor, std::size_t& hits) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!(x(i) >= floor)) {
      x(i) = floor;
      ++hits;
    }
  }
  return x;
}

/// (pri - post) / pri^2, written as two floored divisions.
RealTensor residual_variance(const RealTensor& pri, const RealTensor& post, double floor) {
  return zip(pri, post, [floor](double p, double q) {
    const double d = std::max(p, floor);
    return ((p - q) / d) / d;
  });
}

void emit(const TraceSink& t, int line, std::string_view label, const Tensor& x) {
  if (t) t(line, label, x);
}
void emit(const TraceSink& t, int line, std::string_view label, const RealTensor& x) {
  if (t) t(line, label, to_complex(x));
}
void emit(const TraceSink& t, int line, std::string_view label, const CMatrix& x) {
  if (t) t(line, label, matrix_as_tensor(x));
}
void emit(const TraceSink& t, int line, std::string_view label, const RMatrix& x) {
  if (t) t(line, label, to_complex(matrix_as_tensor(x)));
}

Tensor blend(const Tensor& a, const Tensor& b, double d) {
  return zip(a, b, [d](const cplx& x, const cplx& y) { return d * x + (1.0 - d) * y; });
}
RealTensor blend(const RealTensor& a, const RealTensor& b, double d) {
  return zip(a, b, [d](double x, double y) { return d * x + (1.0 - d) * y; });
}
template <typename M>
M blend(const M& a, const M& b, double d) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("damping operands differ in shape");
  return d * a + (1.0 - d) * b;
}

}  // namespace

void linear_module(InferenceState& s, const Tensor& y, double noise_var, const CMatrix& B, const CMatrix& C,
                   const EStepOptions& opts, const TraceSink& trace) {
  const double f = opts.variance_floor;
  const RMatrix B2 = B.cwiseAbs2();
  const RMatrix C2 = C.cwiseAbs2();

  s.E_H_pri = floored(mode_product(mode_product(s.E_W_post, B2, 1), C2, 2), f, s.floor_hits);
  emit(trace, 2, "E_H_pri", s.E_H_pri);

  s.H_pri = subtract(mode_product(mode_product(s.W, B, 1), C, 2), hadamard(s.H_res, s.E_H_pri));
  emit(trace, 3, "H_pri", s.H_pri);

  const double n2 = noise_var;
  const RealTensor total = map(s.E_H_pri, [n2](double e) { return e + n2; });
  s.H = divide(add(hadamard(y, s.E_H_pri), scale(s.H_pri, n2)), total, f);
  s.E_H_post = floored(divide(scale(s.E_H_pri, n2), total, f), f, s.floor_hits);
  emit(trace, 4, "H", s.H);
  emit(trace, 4, "E_H_post", s.E_H_post);

  s.E_H_res = floored(residual_variance(s.E_H_pri, s.E_H_post, f), f, s.floor_hits);
  emit(trace, 5, "E_H_res", s.E_H_res);

  s.H_res = divide(subtract(s.H, s.H_pri), s.E_H_pri, f);
  emit(trace, 6, "H_res", s.H_res);

  const RealTensor back = mode_product(mode_product(s.E_H_res, RMatrix(B2.transpose()), 1), RMatrix(C2.transpose()), 2);
  s.E_W_lik = floored(reciprocal(back, f), f, s.floor_hits);
  emit(trace, 7, "E_W_lik", s.E_W_lik);

  const Tensor proj = mode_product(mode_product(s.H_res, CMatrix(B.adjoint()), 1), CMatrix(C.adjoint()), 2);
  s.W_lik = add(s.W, hadamard(proj, s.E_W_lik));
  emit(trace, 8, "W_lik", s.W_lik);
}

void bilinear_module(InferenceState& s, const Hyperparams& hyper, const CMatrix& A_ss, const EStepOptions& opts,
                     const TraceSink& trace) {
  const double f = opts.variance_floor;
  const RMatrix A2 = s.A.cwiseAbs2();

  s.E_W_plug = floored(add(mode_product(s.E_G_post, A2, 0), mode_product(abs2(s.G), s.Sigma_A_post, 0)), f,
                       s.floor_hits);
  emit(trace, 9, "E_W_plug", s.E_W_plug);

  s.W_pri = subtract(mode_product(s.G, s.A, 0), hadamard(s.W_res, s.E_W_plug));
  emit(trace, 10, "W_pri", s.W_pri);

  s.E_W_pri = floored(add(s.E_W_plug, mode_product(s.E_G_post, s.Sigma_A_post, 0)), f, s.floor_hits);
  emit(trace, 11, "E_W_pri", s.E_W_pri);

  const RealTensor prec = add(reciprocal(s.E_W_pri, f), reciprocal(s.E_W_lik, f));
  s.E_W_post = floored(reciprocal(prec, f), f, s.floor_hits);
  const Tensor info = add(divide(s.W_pri, s.E_W_pri, f), divide(s.W_lik, s.E_W_lik, f));
  s.W = hadamard(info, s.E_W_post);
  emit(trace, 12, "W", s.W);
  emit(trace, 12, "E_W_post", s.E_W_post);

  s.E_W_res = floored(residual_variance(s.E_W_pri, s.E_W_post, f), f, s.floor_hits);
  emit(trace, 13, "E_W_res", s.E_W_res);

  s.W_res = divide(subtract(s.W, s.W_pri), s.E_W_pri, f);
  emit(trace, 14, "W_res", s.W_res);

  s.E_G_lik = floored(reciprocal(mode_product(s.E_W_res, RMatrix(A2.transpose()), 0), f), f, s.floor_hits);
  emit(trace, 15, "E_G_lik", s.E_G_lik);

  const RealTensor onsager = mode_product(s.E_W_res, RMatrix(s.Sigma_A_post.transpose()), 0);
  const Tensor proj = mode_product(s.W_res, CMatrix(s.A.adjoint()), 0);
  const RealTensor self = zip(s.E_G_lik, onsager, [](double e, double o) { return 1.0 - e * o; });
  s.G_lik = add(hadamard(s.G, self), hadamard(proj, s.E_G_lik));
  emit(trace, 16, "G_lik", s.G_lik);

  auto post = bg_posterior(hyper.bg, s.G_lik, s.E_G_lik);
  post.variance = floored(std::move(post.variance), f, s.floor_hits);
  emit(trace, 17, "G", post.mean);
  emit(trace, 17, "E_G_post", post.variance);

  if (opts.detect_sns) {
    const Tensor& g_ref = opts.sequential_g ? post.mean : s.G;
    const RealTensor& e_ref = opts.sequential_g ? post.variance : s.E_G_post;

    s.Sigma_A_lik = floored(reciprocal(contract_except(s.E_W_res, abs2(g_ref), 0), f), f, s.floor_hits);
    emit(trace, 18, "Sigma_A_lik", s.Sigma_A_lik);

    const RMatrix var_term = contract_except(s.E_W_res, e_ref, 0);
    const CMatrix mean_term = contract_except(s.W_res, conj(g_ref), 0);
    s.A_lik = s.A - s.A.cwiseProduct(s.Sigma_A_lik.cwiseProduct(var_term).cast<cplx>()) +
              mean_term.cwiseProduct(s.Sigma_A_lik.cast<cplx>());
    emit(trace, 19, "A_lik", s.A_lik);

    if (hyper.sns.gamma.rows() != s.A.rows() || hyper.sns.gamma.cols() != s.A.cols()) {
      throw ShapeError("visibility logits must be N_an x K_be");
    }
    for (Eigen::Index i = 0; i < s.A.size(); ++i) {
      const auto m = sns_posterior(s.A_lik(i), s.Sigma_A_lik(i), A_ss(i), hyper.sns.gamma(i));
      s.S(i) = m.prob;
      s.A(i) = m.mean;
      s.Sigma_A_post(i) = m.variance;
    }
    emit(trace, 20, "S", s.S);
    emit(trace, 20, "A", s.A);
    emit(trace, 20, "Sigma_A_post", s.Sigma_A_post);
  }

  s.G = std::move(post.mean);
  s.E_G_post = std::move(post.variance);
  s.G_support = std::move(post.support);
}

InferenceState damp_state(const InferenceState& c, const InferenceState& o, double d) {
  if (!(d >= 0 && d <= 1)) throw std::invalid_argument("damping must lie in [0, 1]");
  if (d == 1.0) return c;
  if (d == 0.0) return o;
  InferenceState s;
  s.H = blend(c.H, o.H, d);
  s.E_H_post = blend(c.E_H_post, o.E_H_post, d);
  s.H_pri = blend(c.H_pri, o.H_pri, d);
  s.E_H_pri = blend(c.E_H_pri, o.E_H_pri, d);
  s.H_res = blend(c.H_res, o.H_res, d);
  s.E_H_res = blend(c.E_H_res, o.E_H_res, d);
  s.W_lik = blend(c.W_lik, o.W_lik, d);
  s.E_W_lik = blend(c.E_W_lik, o.E_W_lik, d);
  s.W = blend(c.W, o.W, d);
  s.E_W_post = blend(c.E_W_post, o.E_W_post, d);
  s.E_W_plug = blend(c.E_W_plug, o.E_W_plug, d);
  s.W_pri = blend(c.W_pri, o.W_pri, d);
  s.E_W_pri = blend(c.E_W_pri, o.E_W_pri, d);
  s.W_res = blend(c.W_res, o.W_res, d);
  s.E_W_res = blend(c.E_W_res, o.E_W_res, d);
  s.G_lik = blend(c.G_lik, o.G_lik, d);
  s.E_G_lik = blend(c.E_G_lik, o.E_G_lik, d);
  s.G = blend(c.G, o.G, d);
  s.E_G_post = blend(c.E_G_post, o.E_G_post, d);
  s.G_support = blend(c.G_support, o.G_support, d);
  s.A_lik = blend(c.A_lik, o.A_lik, d);
  s.Sigma_A_lik = blend(c.Sigma_A_lik, o.Sigma_A_lik, d);
  s.A = blend(c.A, o.A, d);
  s.Sigma_A_post = blend(c.Sigma_A_post, o.Sigma_A_post, d);
  s.S = blend(c.S, o.S, d);
  s.scale = c.scale;
  s.floor_hits = c.floor_hits;
  return s;
}

InferenceState e_step(const InferenceState& state, const Tensor& y, const Hyperparams& hyper, const GridSpec& grids,
                      const SystemConfig& cfg, std::size_t inner_iterations, double damp, const EStepOptions& opts,
                      const TraceSink& trace) {
  if (inner_iterations < 1) throw std::invalid_argument("e_step needs at least one inner iteration");
  const CMatrix A_ss = beam_matrix(grids, hyper.pert, cfg);
  const CMatrix B = delay_matrix(grids, hyper.pert, cfg);
  const CMatrix C = doppler_matrix(grids, hyper.pert, cfg);
  InferenceState cur = state;
  for (std::size_t t = 0; t < inner_iterations; ++t) {
    InferenceState cand = cur;
    linear_module(cand, y, hyper.noise_var, B, C, opts, trace);
    bilinear_module(cand, hyper, A_ss, opts, trace);
    cur = damp_state(cand, cur, damp);
  }
  return cur;
}

PriorUpdate m_step_priors(const InferenceState& state, const Hyperparams& hyper, GammaRule rule) {
  return {update_bg(hyper.bg, state.G_lik, state.E_G_lik, state.G, state.E_G_post, kSparsityFloor,
                    hyper.variance_cap),
          SnsPrior{update_gamma(state.S, rule)}};
}

std::pair<InferenceState, Hyperparams> initialize(const Tensor& y, double noise_var, const GridSpec& grids,
                                                  const SystemConfig& cfg) {
  if (noise_var < 0) throw std::invalid_argument("noise variance must be >= 0");
  const Shape sft{cfg.num_antennas, cfg.num_subcarriers, cfg.num_symbols};
  if (y.shape() != sft) throw ShapeError("observation must be N_an x N_sc x N_sym, got " + shape_to_string(y.shape()));

  const double n = static_cast<double>(y.size());
  const double power = fro_norm_sq(y) / n;
  const double amp = power > 0 ? std::sqrt(power) : 1.0;
  const Tensor yn = scale(y, 1.0 / amp);
  const double s2 = noise_var / (amp * amp);
  const double p = std::max(fro_norm_sq(yn) / n - s2, 1e-3);

  const Shape bdd = grids.bdd_shape();
  const double k = static_cast<double>(shape_numel(bdd));
  const double m0 = 0.1;
  const double v0 = p / (m0 * k);

  Hyperparams h;
  h.pert = Perturbations::zeros(grids);
  h.bg = {RealTensor(bdd, m0), RealTensor(bdd, v0)};
  h.sns.gamma = RMatrix::Constant(static_cast<Eigen::Index>(cfg.num_antennas), grids.cosine.size(), 0.5);
  h.noise_var = s2;
  h.variance_cap = p;

  const CMatrix A_ss = beam_matrix(grids, h.pert, cfg);
  const CMatrix B = delay_matrix(grids, h.pert, cfg);
  const CMatrix C = doppler_matrix(grids, h.pert, cfg);

  InferenceState s;
  s.scale = amp;
  // Fully visible start: with S = 0.5 the factor variance equals |A|^2 and
  // the Onsager term in G_lik cancels G exactly.
  s.S = RMatrix::Ones(A_ss.rows(), A_ss.cols());
  s.A = A_ss;
  s.Sigma_A_post = RMatrix::Zero(A_ss.rows(), A_ss.cols());
  s.A_lik = s.A;
  s.Sigma_A_lik = RMatrix::Ones(A_ss.rows(), A_ss.cols());

  s.G = Tensor(bdd);
  s.E_G_post = RealTensor(bdd, v0);
  s.G_support = RealTensor(bdd, m0);
  s.G_lik = Tensor(bdd);
  s.E_G_lik = RealTensor(bdd, v0);

  s.W = scale(mode_product(mode_product(yn, CMatrix(B.adjoint()), 1), CMatrix(C.adjoint()), 2),
              1.0 / static_cast<double>(cfg.num_subcarriers * cfg.num_symbols));
  const Shape sdd = s.W.shape();
  s.E_W_plug = mode_product(s.E_G_post, RMatrix(s.A.cwiseAbs2()), 0);
  s.E_W_pri = add(s.E_W_plug, mode_product(s.E_G_post, s.Sigma_A_post, 0));
  s.E_W_post = s.E_W_pri;
  s.W_pri = Tensor(sdd);
  s.W_res = Tensor(sdd);
  s.E_W_res = RealTensor(sdd, 0.0);
  s.W_lik = s.W;
  s.E_W_lik = s.E_W_post;

  s.H = yn;
  s.E_H_post = RealTensor(sft, std::max(s2, kDefaultDivisionFloor));
  s.H_pri = mode_product(mode_product(s.W, B, 1), C, 2);
  s.E_H_pri = mode_product(mode_product(s.E_W_post, RMatrix(B.cwiseAbs2()), 1), RMatrix(C.cwiseAbs2()), 2);
  s.H_res = Tensor(sft);
  s.E_H_res = RealTensor(sft, 0.0);
  return {std::move(s), std::move(h)};
}

namespace {

Tensor tucker(const InferenceState& s, const Hyperparams& h, const GridSpec& grids, const SystemConfig& cfg,
              const CMatrix& temporal) {
  const CMatrix A = beam_matrix(grids, h.pert, cfg).cwiseProduct(s.S.cast<cplx>());
  const CModeFactor factors[] = {{A, 0}, {delay_matrix(grids, h.pert, cfg), 1}, {temporal, 2}};
  return multi_mode_product(s.G, factors, true);
}

}  // namespace

Tensor reconstruct(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                   const SystemConfig& cfg) {
  return scale(tucker(state, hyper, grids, cfg, doppler_matrix(grids, hyper.pert, cfg)), state.scale);
}

Tensor predict(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids, const SystemConfig& cfg,
               std::size_t horizon) {
  if (horizon == 0) return Tensor{};
  return scale(tucker(state, hyper, grids, cfg, prediction_doppler_matrix(grids, hyper.pert, horizon, cfg)),
               state.scale);
}

EmResult em_loop(const Tensor& y, double noise_var, const GridSpec& grids, const SystemConfig& cfg,
                 const InferenceOptions& opts, const NmseProbe& probe, const TraceSink& trace) {
  if (!(opts.damping >= 0 && opts.damping <= 1)) throw std::invalid_argument("damping must lie in [0, 1]");
  if (opts.inner_iterations < 1) throw std::invalid_argument("inner iteration count must be >= 1");
  auto [state, hyper] = initialize(y, noise_var, grids, cfg);
  const Tensor yn = scale(y, 1.0 / state.scale);
  if (!opts.cap_prior_variance) hyper.variance_cap = std::numeric_limits<double>::infinity();

  EmResult res;
  Tensor prev = tucker(state, hyper, grids, cfg, doppler_matrix(grids, hyper.pert, cfg));
  const double energy = std::max(fro_norm_sq(yn), kDefaultDivisionFloor);
  double best_misfit = fro_norm_sq(subtract(yn, prev)) / energy;
  InferenceState best_state = state;
  Hyperparams best_hyper = hyper;
  for (std::size_t t = 1; t <= opts.outer_iterations; ++t) {
    const bool warm = t > opts.warmup;
    EStepOptions eo = opts.estep;
    eo.detect_sns = eo.detect_sns && warm;
    state = e_step(state, yn, hyper, grids, cfg, opts.inner_iterations, opts.damping, eo, trace);

    IterationRecord rec;
    rec.iteration = t;
    rec.inner = opts.inner_iterations;
    if (opts.learn_perturbations && warm) {
      MStepReport rep;
      for (std::size_t k = 0; k < opts.perturbation_sweeps; ++k) {
        hyper.pert = m_step_perturbations(state, hyper, grids, cfg, opts.expansion, &rep);
      }
      rec.J_tau = rep.J_tau;
      rec.J_nu = rep.J_nu;
      rec.J_phi_eta = rep.J_phi_eta;
    } else {
      rec.J_tau = objective_tau(state, hyper, grids, cfg, hyper.pert.dtau);
      rec.J_nu = objective_nu(state, hyper, grids, cfg, hyper.pert.dnu);
      RVector chi(2 * hyper.pert.dphi.size());
      chi << hyper.pert.dphi, hyper.pert.eta;
      rec.J_phi_eta = objective_phi_eta(state, hyper, grids, cfg, chi);
    }
    if (opts.learn_priors) {
      auto pu = m_step_priors(state, hyper, opts.gamma_rule);
      hyper.bg = std::move(pu.bg);
      if (warm && eo.detect_sns) hyper.sns = std::move(pu.sns);
    }
    const CMatrix A_ss = beam_matrix(grids, hyper.pert, cfg);
    state.A = A_ss.cwiseProduct(state.S.cast<cplx>());
    state.Sigma_A_post = A_ss.cwiseAbs2().cwiseProduct(state.S.cwiseProduct((1.0 - state.S.array()).matrix()));

    Tensor cur = tucker(state, hyper, grids, cfg, doppler_matrix(grids, hyper.pert, cfg));
    const double denom = std::max(fro_norm(cur), kDefaultDivisionFloor);
    rec.relative_change = fro_norm(subtract(cur, prev)) / denom;
    rec.misfit = fro_norm_sq(subtract(yn, cur)) / energy;
    prev = std::move(cur);
    rec.floor_hits = state.floor_hits;
    if (probe) rec.nmse = probe(state, hyper);
    res.diagnostics.push_back(rec);
    res.iterations = t;
    if (rec.relative_change < opts.tolerance) {
      res.converged = true;
      break;
    }
    if (rec.misfit < best_misfit) {
      best_misfit = rec.misfit;
      best_state = state;
      best_hyper = hyper;
      res.selected = t;
    }
  }
  if (res.converged) {
    res.selected = res.iterations;
    res.state = std::move(state);
    res.hyper = std::move(hyper);
  } else {
    res.state = std::move(best_state);
    res.hyper = std::move(best_hyper);
  }
  return res;
}

void write_diagnostics_csv(std::ostream& out, const std::vector<IterationRecord>& records) {
  out << "iteration,inner,nmse,nmse_db,floor_hits,J_tau,J_nu,J_phi_eta,relative_change,misfit\n";
  const auto old_prec = out.precision(17);
  for (const auto& r : records) {
    out << r.iteration << ',' << r.inner << ',';
    if (r.nmse) {
      out << *r.nmse << ',' << 10.0 * std::log10(std::max(*r.nmse, 1e-300));
    } else {
      out << "NA,NA";
    }
    out << ',' << r.floor_hits << ',' << r.J_tau << ',' << r.J_nu << ',' << r.J_phi_eta << ',' << r.relative_change
        << ',' << r.misfit << '\n';
  }
  out.precision(old_prec);
}

}  // namespace tsbli
