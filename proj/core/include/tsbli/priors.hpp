#pragma once

// Element-wise posteriors under the Bernoulli-Gaussian core prior and the
// Bernoulli visibility prior, and the EM update rules of their parameters.

#include "tsbli/tensor.hpp"

#include <limits>

namespace tsbli {

inline constexpr double kSparsityFloor = 1e-6;

/// Bernoulli-Gaussian core prior: entry k is CN(0, V_k) with probability M_k
/// and exactly zero otherwise.
struct BgPrior {
  RealTensor M;
  RealTensor V;
};

/// Visibility prior P(S) ~ exp(<Gamma, S>) with S binary.
struct SnsPrior {
  RMatrix gamma;
};

struct BgMoments {
  cplx mean{0.0, 0.0};
  double variance = 0.0;
  double support = 0.0;  // posterior P(entry active)
};

/// Moments of BG(m, 0, v) * CN(g_lik, e_lik). Throws on v <= 0, e_lik <= 0 or
/// m outside [0, 1].
BgMoments bg_posterior(double m, double v, cplx g_lik, double e_lik);

/// log of the active/inactive evidence ratio, log[m N(g;0,v+e) / ((1-m) N(g;0,e))].
double bg_log_evidence_ratio(double m, double v, cplx g_lik, double e_lik);

struct SnsMoments {
  double prob = 0.0;        // posterior P(S = 1)
  cplx mean{0.0, 0.0};      // a_ss * prob
  double variance = 0.0;    // |a_ss|^2 prob (1 - prob)
};

/// Exact posterior of binary S given a_lik = a_ss S + CN(0, sigma_lik).
SnsMoments sns_posterior(cplx a_lik, double sigma_lik, cplx a_ss, double gamma);

enum class GammaRule {
  kRatio,  // S / (1 + S)
  kLogit,  // ln(S / (1 - S)), S clamped to [eps, 1 - eps]
};

double update_gamma(double s, GammaRule rule = GammaRule::kRatio, double eps = kSparsityFloor);
RMatrix update_gamma(const RMatrix& s, GammaRule rule = GammaRule::kRatio, double eps = kSparsityFloor);

struct BgUpdate {
  double m = 0.0;
  double v = 0.0;
};

/// M' = R / (1 + R) with R the evidence ratio; V' = (e_post + |g_post|^2) / max(M', eps_m).
/// V' is floored at kDefaultDivisionFloor and capped at v_max, which is the
/// constrained maximiser under V <= v_max because the objective is unimodal in V.
/// The returned M' is clamped to [eps_m, 1 - eps_m] so later evidence ratios
/// stay finite.
BgUpdate update_bg(double m, double v, cplx g_lik, double e_lik, cplx g_post, double e_post,
                   double eps_m = kSparsityFloor, double v_max = std::numeric_limits<double>::infinity());

struct BgTensorMoments {
  Tensor mean;
  RealTensor variance;
  RealTensor support;
};

BgTensorMoments bg_posterior(const BgPrior& prior, const Tensor& g_lik, const RealTensor& e_lik);

BgPrior update_bg(const BgPrior& prior, const Tensor& g_lik, const RealTensor& e_lik, const Tensor& g_post,
                  const RealTensor& e_post, double eps_m = kSparsityFloor,
                  double v_max = std::numeric_limits<double>::infinity());

double sigmoid(double x);

}  // namespace tsbli
