#pragma once

// Bi-layer message passing (linear GAMP over the frequency/temporal factors,
// BiGAMP over the spatial factor, visibility detection), EM hyperparameter
// learning and Doppler-domain extrapolation.
//
// Shapes: SFT tensors are N_an x N_sc x N_sym, SDD tensors N_an x K_de x K_do
// and BDD tensors K_be x K_de x K_do. Spatial factor quantities (A, S and
// their variances) are N_an x K_be.

#include "tsbli/factor_matrices.hpp"
#include "tsbli/priors.hpp"
#include "tsbli/system_config.hpp"
#include "tsbli/tensor.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace tsbli {

struct Hyperparams {
  Perturbations pert;
  BgPrior bg;
  SnsPrior sns;
  double noise_var = 0.0;
  /// Upper bound on V: the signal power per observed entry in internal units.
  double variance_cap = std::numeric_limits<double>::infinity();
};

struct InferenceState {
  // Linear module
  Tensor H;
  RealTensor E_H_post;
  Tensor H_pri;
  RealTensor E_H_pri;
  Tensor H_res;
  RealTensor E_H_res;
  Tensor W_lik;
  RealTensor E_W_lik;
  // Bilinear module
  Tensor W;
  RealTensor E_W_post;
  RealTensor E_W_plug;
  Tensor W_pri;
  RealTensor E_W_pri;
  Tensor W_res;
  RealTensor E_W_res;
  Tensor G_lik;
  RealTensor E_G_lik;
  Tensor G;
  RealTensor E_G_post;
  RealTensor G_support;
  // Spatial factor and visibility
  CMatrix A_lik;
  RMatrix Sigma_A_lik;
  CMatrix A;
  RMatrix Sigma_A_post;
  RMatrix S;

  /// Amplitude of the observation relative to the internal unit-power scale.
  double scale = 1.0;
  /// Number of variance entries raised to the floor since construction.
  std::size_t floor_hits = 0;
};

/// Receives every E-step intermediate in execution order: the step id of
/// the update (1-20, see linear_module and bilinear_module), a label naming the quantity and its value (real
/// tensors are promoted to complex, matrices to 2-order tensors).
using TraceSink = std::function<void(int line, std::string_view label, const Tensor& value)>;

struct EStepOptions {
  double variance_floor = kDefaultDivisionFloor;
  /// Steps 18-19 read the fresh step-17 result. When cleared they read the
  /// BDD posterior from before step 17 (parallel BiGAMP ordering).
  bool sequential_g = true;
  /// When cleared, steps 18-20 are skipped and S stays fixed.
  bool detect_sns = true;
};

/// E-step ids 2-8.
void linear_module(InferenceState& state, const Tensor& y, double noise_var, const CMatrix& B, const CMatrix& C,
                   const EStepOptions& opts = {}, const TraceSink& trace = {});

/// E-step ids 9-20. `A_ss` is the stationary spatial factor at the current
/// perturbations.
void bilinear_module(InferenceState& state, const Hyperparams& hyper, const CMatrix& A_ss,
                     const EStepOptions& opts = {}, const TraceSink& trace = {});

/// x <- damp * candidate + (1 - damp) * old for every tensor in the state.
InferenceState damp_state(const InferenceState& candidate, const InferenceState& old, double damp);

/// T_E iterations of linear_module + bilinear_module, each followed by damping.
InferenceState e_step(const InferenceState& state, const Tensor& y, const Hyperparams& hyper, const GridSpec& grids,
                      const SystemConfig& cfg, std::size_t inner_iterations, double damp,
                      const EStepOptions& opts = {}, const TraceSink& trace = {});

// ---------------------------------------------------------------------------
// M-step

enum class ExpansionPoint {
  kPrevious,  // Taylor expansion around the current estimate
  kZero,      // around the raw grid (zero perturbation, zero slope)
};

/// J(origin + delta) ~ delta^T Pi delta - 2 Re{mu}^T delta + const.
struct QuadraticModel {
  RMatrix Pi;
  CVector mu;
  RVector origin;
};

/// Residual energies of the linear and bilinear mixing stages as functions of
/// one perturbation family, all others held at `hyper`.
double objective_tau(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                     const SystemConfig& cfg, const RVector& dtau);
double objective_nu(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                    const SystemConfig& cfg, const RVector& dnu);
/// `chi` stacks the cosine offsets above the slopes.
double objective_phi_eta(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                         const SystemConfig& cfg, const RVector& chi);

QuadraticModel quadratic_tau(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                             const SystemConfig& cfg, ExpansionPoint at);
QuadraticModel quadratic_nu(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                            const SystemConfig& cfg, ExpansionPoint at);
QuadraticModel quadratic_phi_eta(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                                 const SystemConfig& cfg, ExpansionPoint at);

/// Minimizer step of the quadratic model: (Pi + eps I) delta = Re{mu} with
/// eps = 1e-8 trace(Pi) / dim.
RVector solve_quadratic(const QuadraticModel& q);

struct MStepReport {
  double J_tau = 0.0;      // objective values at the returned point
  double J_nu = 0.0;
  double J_phi_eta = 0.0;
  std::size_t halvings = 0;
  double max_condition = 0.0;  // largest estimated condition number of Pi + eps I
};

/// Delay, then Doppler, then (cosine, slope). Each step is clamped and
/// halved until the true objective does not exceed its value at the
/// expansion point by more than 1e-8 relative.
Perturbations m_step_perturbations(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                                   const SystemConfig& cfg, ExpansionPoint at = ExpansionPoint::kPrevious,
                                   MStepReport* report = nullptr);

struct PriorUpdate {
  BgPrior bg;
  SnsPrior sns;
};

PriorUpdate m_step_priors(const InferenceState& state, const Hyperparams& hyper, GammaRule rule = GammaRule::kRatio);

// ---------------------------------------------------------------------------
// EM loop and prediction

struct InferenceOptions {
  std::size_t outer_iterations = 30;  // T_M
  std::size_t inner_iterations = 1;   // T_E
  double damping = 0.3;
  double tolerance = 1e-6;            // relative change of H between outer iterations
  GammaRule gamma_rule = GammaRule::kRatio;
  ExpansionPoint expansion = ExpansionPoint::kPrevious;
  bool learn_perturbations = true;
  /// Successive Taylor-expansion solves per M-step, each around the last result.
  std::size_t perturbation_sweeps = 1;
  bool learn_priors = true;
  /// Caps the learned V at the signal power; cleared, V is unbounded.
  bool cap_prior_variance = true;
  /// Outer iterations before the perturbation and visibility updates start.
  std::size_t warmup = 2;
  EStepOptions estep;
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t inner = 0;
  std::optional<double> nmse;
  std::size_t floor_hits = 0;
  double J_tau = 0.0;
  double J_nu = 0.0;
  double J_phi_eta = 0.0;
  double relative_change = 0.0;
  /// ||Y - G x_1 A x_2 B x_3 C||^2 / ||Y||^2 after the M-step.
  double misfit = 0.0;
};

struct EmResult {
  InferenceState state;
  Hyperparams hyper;
  std::vector<IterationRecord> diagnostics;
  std::size_t iterations = 0;
  bool converged = false;
  /// Outer iteration whose state is returned: the last one on convergence,
  /// otherwise the one with the smallest misfit (0 is the initial state).
  std::size_t selected = 0;
};

/// Evaluated after every outer iteration; its value fills IterationRecord::nmse.
using NmseProbe = std::function<double(const InferenceState&, const Hyperparams&)>;

/// Initial state and hyperparameters. The observation is rescaled to unit
/// average power internally; `state.scale` records the factor.
std::pair<InferenceState, Hyperparams> initialize(const Tensor& y, double noise_var, const GridSpec& grids,
                                                  const SystemConfig& cfg);

EmResult em_loop(const Tensor& y, double noise_var, const GridSpec& grids, const SystemConfig& cfg,
                 const InferenceOptions& opts = {}, const NmseProbe& probe = {}, const TraceSink& trace = {});

/// G x_1 (A_ss .* S) x_2 B x_3 C~, in the units of the observation. Returns an
/// empty tensor for horizon 0.
Tensor predict(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids, const SystemConfig& cfg,
               std::size_t horizon);

/// In-frame Tucker reconstruction G x_1 (A_ss .* S) x_2 B x_3 C, observation units.
Tensor reconstruct(const InferenceState& state, const Hyperparams& hyper, const GridSpec& grids,
                   const SystemConfig& cfg);

void write_diagnostics_csv(std::ostream& out, const std::vector<IterationRecord>& records);

}  // namespace tsbli
