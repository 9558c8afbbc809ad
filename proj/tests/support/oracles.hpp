#pragma once

// Independent reference implementations used as test oracles. Everything here
// is written with explicit index loops over the canonical layout and never
// calls the matricization or mode-product code under test.

#include "tsbli/factor_matrices.hpp"
#include "tsbli/inference.hpp"
#include "tsbli/tensor.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using tsbli::CMatrix;
using tsbli::cplx;
using tsbli::RealTensor;
using tsbli::RMatrix;
using tsbli::Shape;
using tsbli::Tensor;

std::mt19937_64 rng(std::uint64_t seed);

Tensor random_tensor(const Shape& shape, std::mt19937_64& g);
/// Entries uniform on [lo, hi].
RealTensor random_positive(const Shape& shape, std::mt19937_64& g, double lo = 0.5, double hi = 2.0);
CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& g);
Shape random_shape(std::size_t order, std::size_t max_dim, std::mt19937_64& g);

/// Multi-index of a flat offset, first index fastest.
std::vector<std::size_t> unravel(std::size_t flat, const Shape& shape);

cplx inner(const Tensor& x, const Tensor& y);
/// Columns enumerate mode-d fibers, remaining indices ascending with the
/// lowest remaining mode fastest.
CMatrix matricize(const Tensor& x, std::size_t mode);
Tensor mode_product(const Tensor& x, const CMatrix& u, std::size_t mode);
CMatrix contract_except(const Tensor& x, const Tensor& y, std::size_t mode);

/// Largest |a - b| / max|b|.
double rel_diff(const CMatrix& a, const CMatrix& b);
double rel_diff(const Tensor& a, const Tensor& b);

/// Outputs of one linear + bilinear pass keyed by (line, label), computed
/// entry by entry. Matrices are stored as 2-order tensors.
using Trace = std::map<std::pair<int, std::string>, Tensor>;

/// Element-wise transcription of E-step ids 2-20 with no variance floors. `A_ss`
/// is the unmasked spatial factor.
Trace naive_estep(const tsbli::InferenceState& s, const Tensor& y, double noise_var, const CMatrix& A_ss,
                  const CMatrix& B, const CMatrix& C, const tsbli::Hyperparams& hyper);

/// A state with every mean random and every variance in [0.5, 2], shaped for
/// the given sizes. S lies in (0.1, 0.9) and A = A_ss .* S.
tsbli::InferenceState random_state(std::size_t n_an, std::size_t n_sc, std::size_t n_sym, std::size_t k_be,
                                   std::size_t k_de, std::size_t k_do, const CMatrix& A_ss, std::mt19937_64& g);

/// Posterior support, mean and variance of BG(m, 0, v) x CN(g_lik, e) by
/// trapezoidal quadrature of the continuous part plus the atom at zero.
struct BgReference {
  double support = 0.0;
  cplx mean{0.0, 0.0};
  double variance = 0.0;
};
BgReference bg_quadrature(double m, double v, cplx g_lik, double e);

/// P(S = 1) by enumerating S in {0, 1} under prior weight exp(gamma S).
double sns_enumeration(cplx a_lik, double sigma, cplx a_ss, double gamma);

/// Central differences of `J` at `x` with per-coordinate steps `h`.
tsbli::RVector fd_gradient(const std::function<double(const tsbli::RVector&)>& J, const tsbli::RVector& x,
                           const tsbli::RVector& h);
/// Second central differences (diagonal of the Hessian).
tsbli::RVector fd_curvature(const std::function<double(const tsbli::RVector&)>& J, const tsbli::RVector& x,
                            const tsbli::RVector& h);

/// Random perturbation-learning problem on the small system with default
/// grids: perturbations inside the clamp box and a random state. With
/// `zero_residual` set, W and H are replaced by the noiseless model so that
/// every stage residual vanishes.
struct MStepProblem {
  tsbli::SystemConfig cfg;
  tsbli::GridSpec grids;
  tsbli::Hyperparams hyper;
  tsbli::InferenceState state;
};
MStepProblem mstep_problem(std::uint64_t seed, bool zero_residual);

/// Small system with N_an = 8, N_sc = 8, N_sym = 4.
tsbli::SystemConfig small_system();

}  // namespace oracle
