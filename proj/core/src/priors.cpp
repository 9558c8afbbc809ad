#include "tsbli/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsbli {

namespace {

void check_variances(double v, double e) {
  if (!(v > 0)) throw std::invalid_argument("prior variance must be > 0");
  if (!(e > 0)) throw std::invalid_argument("likelihood variance must be > 0");
}

void check_probability(double m) {
  if (!(m >= 0 && m <= 1)) throw std::invalid_argument("sparsity probability must lie in [0, 1]");
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

double bg_log_evidence_ratio(double m, double v, cplx g_lik, double e_lik) {
  check_variances(v, e_lik);
  check_probability(m);
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (m == 0) return -inf;
  if (m == 1) return inf;
  const double g2 = std::norm(g_lik);
  const double llr = -std::log1p(v / e_lik) + g2 * v / (e_lik * (v + e_lik));
  return std::log(m) - std::log1p(-m) + llr;
}

BgMoments bg_posterior(double m, double v, cplx g_lik, double e_lik) {
  const double lr = bg_log_evidence_ratio(m, v, g_lik, e_lik);
  BgMoments out;
  out.support = sigmoid(lr);
  const cplx cond_mean = (v / (v + e_lik)) * g_lik;
  const double cond_var = v * e_lik / (v + e_lik);
  out.mean = out.support * cond_mean;
  out.variance = out.support * cond_var + out.support * (1.0 - out.support) * std::norm(cond_mean);
  return out;
}

SnsMoments sns_posterior(cplx a_lik, double sigma_lik, cplx a_ss, double gamma) {
  if (!(sigma_lik > 0)) throw std::invalid_argument("likelihood variance must be > 0");
  const double evidence = (2.0 * std::real(std::conj(a_lik) * a_ss) - std::norm(a_ss)) / sigma_lik;
  SnsMoments out;
  out.prob = sigmoid(gamma + evidence);
  out.mean = a_ss * out.prob;
  out.variance = std::norm(a_ss) * out.prob * (1.0 - out.prob);
  return out;
}

double update_gamma(double s, GammaRule rule, double eps) {
  switch (rule) {
    case GammaRule::kRatio:
      return s / (1.0 + s);
    case GammaRule::kLogit: {
      const double c = std::clamp(s, eps, 1.0 - eps);
      return std::log(c) - std::log1p(-c);
    }
  }
  return 0.0;
}

RMatrix update_gamma(const RMatrix& s, GammaRule rule, double eps) {
  return s.unaryExpr([&](double x) { return update_gamma(x, rule, eps); });
}

BgUpdate update_bg(double m, double v, cplx g_lik, double e_lik, cplx g_post, double e_post, double eps_m,
                   double v_max) {
  if (e_post < 0) throw std::invalid_argument("posterior variance must be >= 0");
  const double m_new = sigmoid(bg_log_evidence_ratio(m, v, g_lik, e_lik));
  BgUpdate out;
  out.v = std::max(std::min((e_post + std::norm(g_post)) / std::max(m_new, eps_m), v_max), kDefaultDivisionFloor);
  out.m = std::clamp(m_new, eps_m, 1.0 - eps_m);
  return out;
}

BgTensorMoments bg_posterior(const BgPrior& prior, const Tensor& g_lik, const RealTensor& e_lik) {
  const Shape& shape = g_lik.shape();
  if (prior.M.shape() != shape || prior.V.shape() != shape || e_lik.shape() != shape) {
    throw ShapeError("bg_posterior operands must share one shape");
  }
  BgTensorMoments out{Tensor(shape), RealTensor(shape), RealTensor(shape)};
  for (std::size_t i = 0; i < g_lik.size(); ++i) {
    const auto r = bg_posterior(prior.M[i], prior.V[i], g_lik[i], e_lik[i]);
    out.mean[i] = r.mean;
    out.variance[i] = r.variance;
    out.support[i] = r.support;
  }
  return out;
}

BgPrior update_bg(const BgPrior& prior, const Tensor& g_lik, const RealTensor& e_lik, const Tensor& g_post,
                  const RealTensor& e_post, double eps_m, double v_max) {
  const Shape& shape = g_lik.shape();
  if (prior.M.shape() != shape || prior.V.shape() != shape || e_lik.shape() != shape ||
      g_post.shape() != shape || e_post.shape() != shape) {
    throw ShapeError("update_bg operands must share one shape");
  }
  BgPrior out{RealTensor(shape), RealTensor(shape)};
  for (std::size_t i = 0; i < g_lik.size(); ++i) {
    const auto r = update_bg(prior.M[i], prior.V[i], g_lik[i], e_lik[i], g_post[i], e_post[i], eps_m, v_max);
    out.M[i] = r.m;
    out.V[i] = r.v;
  }
  return out;
}

}  // namespace tsbli
