#include "oracles.hpp"
#include "tsbli/inference.hpp"

#include <doctest.h>

#include <functional>

using namespace tsbli;

namespace {

using Setup = oracle::MStepProblem;

using Objective = std::function<double(const RVector&)>;

double rel(const RVector& a, const RVector& b) { return (a - b).cwiseAbs().maxCoeff() / b.cwiseAbs().maxCoeff(); }

struct Family {
  const char* name;
  std::function<QuadraticModel(const Setup&)> model;
  std::function<Objective(const Setup&)> objective;
  std::function<RVector(const Setup&)> steps;
};

std::vector<Family> families() {
  return {
      {"delay",
       [](const Setup& s) { return quadratic_tau(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const Setup& s) -> Objective {
         return [&s](const RVector& x) { return objective_tau(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const Setup& s) { return RVector(RVector::Constant(s.grids.delay.size(), 1e-4 * s.grids.delay_step())); }},
      {"doppler",
       [](const Setup& s) { return quadratic_nu(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const Setup& s) -> Objective {
         return [&s](const RVector& x) { return objective_nu(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const Setup& s) {
         return RVector(RVector::Constant(s.grids.doppler.size(), 1e-4 * s.grids.doppler_step()));
       }},
      {"beam",
       [](const Setup& s) { return quadratic_phi_eta(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const Setup& s) -> Objective {
         return [&s](const RVector& x) { return objective_phi_eta(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const Setup& s) { return RVector(RVector::Constant(2 * s.grids.cosine.size(), 1e-6)); }},
  };
}

}  // namespace

TEST_SUITE("mstep") {
  TEST_CASE("linear term is minus half the objective gradient") {
    const Setup s = oracle::mstep_problem(70, false);
    for (const auto& fam : families()) {
      CAPTURE(fam.name);
      const QuadraticModel q = fam.model(s);
      const RVector fd = oracle::fd_gradient(fam.objective(s), q.origin, fam.steps(s));
      CHECK(rel(fd, RVector(-2.0 * q.mu.real())) <= 1e-5);
    }
  }

  TEST_CASE("quadratic term is half the Hessian at a zero-residual point") {
    const Setup s = oracle::mstep_problem(71, true);
    for (const auto& fam : families()) {
      CAPTURE(fam.name);
      const QuadraticModel q = fam.model(s);
      CHECK(q.mu.cwiseAbs().maxCoeff() <= 1e-9 * q.Pi.cwiseAbs().maxCoeff());
      RVector h = fam.steps(s);
      h *= 10.0;
      const RVector fd = oracle::fd_curvature(fam.objective(s), q.origin, h);
      CHECK(rel(fd, RVector(2.0 * q.Pi.diagonal())) <= 1e-4);
      CHECK(solve_quadratic(q).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }

  TEST_CASE("expansion at zero uses the raw grid") {
    const Setup s = oracle::mstep_problem(72, false);
    const QuadraticModel q = quadratic_tau(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kZero);
    CHECK(q.origin.isZero());
    const QuadraticModel b = quadratic_phi_eta(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kZero);
    CHECK(b.origin.size() == 2 * s.grids.cosine.size());
    CHECK(b.origin.isZero());
  }

  TEST_CASE("solve_quadratic") {
    QuadraticModel q;
    q.Pi = RMatrix::Identity(3, 3);
    q.mu = CVector(3);
    q.mu << cplx{1.0, 5.0}, cplx{-2.0, 0.0}, cplx{0.5, -1.0};
    const RVector x = solve_quadratic(q);
    CHECK(rel(x, q.mu.real()) <= 1e-7);

    q.Pi = RMatrix::Zero(2, 2);
    q.mu = CVector::Zero(2);
    CHECK(solve_quadratic(q).isZero());

    q.mu = CVector::Zero(3);
    CHECK_THROWS_AS(solve_quadratic(q), ShapeError);
  }

  TEST_CASE("accepted steps never raise the objective") {
    for (std::uint64_t seed : {73u, 74u, 75u, 76u}) {
      const Setup s = oracle::mstep_problem(seed, false);
      MStepReport rep;
      const Perturbations p = m_step_perturbations(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious, &rep);

      const double t0 = objective_tau(s.state, s.hyper, s.grids, s.cfg, s.hyper.pert.dtau);
      CHECK(objective_tau(s.state, s.hyper, s.grids, s.cfg, p.dtau) <= t0 * (1 + 1e-8));

      Hyperparams after_tau = s.hyper;
      after_tau.pert.dtau = p.dtau;
      const double n0 = objective_nu(s.state, after_tau, s.grids, s.cfg, s.hyper.pert.dnu);
      CHECK(objective_nu(s.state, after_tau, s.grids, s.cfg, p.dnu) <= n0 * (1 + 1e-8));

      RVector chi0(2 * s.grids.cosine.size()), chi1(chi0.size());
      chi0 << s.hyper.pert.dphi, s.hyper.pert.eta;
      chi1 << p.dphi, p.eta;
      const double b0 = objective_phi_eta(s.state, s.hyper, s.grids, s.cfg, chi0);
      CHECK(objective_phi_eta(s.state, s.hyper, s.grids, s.cfg, chi1) <= b0 * (1 + 1e-8));
      CHECK(rep.J_phi_eta == doctest::Approx(objective_phi_eta(s.state, s.hyper, s.grids, s.cfg, chi1)));

      const Perturbations c = clamp(p, s.grids);
      CHECK(c.dtau == p.dtau);
      CHECK(c.dnu == p.dnu);
      CHECK(c.dphi == p.dphi);
      CHECK(c.eta == p.eta);
    }
  }

  TEST_CASE("a zero-residual state is a fixed point") {
    const Setup s = oracle::mstep_problem(77, true);
    const Perturbations p = m_step_perturbations(s.state, s.hyper, s.grids, s.cfg);
    CHECK((p.dtau - s.hyper.pert.dtau).cwiseAbs().maxCoeff() <= 1e-6 * s.grids.delay_step());
    CHECK((p.dnu - s.hyper.pert.dnu).cwiseAbs().maxCoeff() <= 1e-6 * s.grids.doppler_step());
    CHECK((p.dphi - s.hyper.pert.dphi).cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("prior update delegates to the closed forms") {
    const Setup s = oracle::mstep_problem(78, false);
    Hyperparams h = s.hyper;
    auto g = oracle::rng(79);
    const Shape bdd = s.grids.bdd_shape();
    h.bg = {oracle::random_positive(bdd, g, 0.05, 0.95), oracle::random_positive(bdd, g)};
    h.sns.gamma = RMatrix::Zero(8, static_cast<Eigen::Index>(bdd[0]));
    h.variance_cap = std::numeric_limits<double>::infinity();
    InferenceState st = s.state;
    st.G_lik = oracle::random_tensor(bdd, g);
    st.E_G_lik = oracle::random_positive(bdd, g);
    const PriorUpdate up = m_step_priors(st, h);
    const BgPrior direct = update_bg(h.bg, st.G_lik, st.E_G_lik, st.G, st.E_G_post);
    CHECK(up.bg.M == direct.M);
    CHECK(up.bg.V == direct.V);
    CHECK((up.sns.gamma - update_gamma(st.S)).norm() == 0.0);
  }
}
