// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Statistical criteria run the desk profile.

#include "oracles.hpp"
#include "tsbli/baselines.hpp"
#include "tsbli/channel_model.hpp"
#include "tsbli/experiment.hpp"
#include "tsbli/priors.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace tsbli;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// 1 -------------------------------------------------------------------------

Verdict tensor_oracles() {
  const auto t0 = Clock::now();
  auto g = oracle::rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t order = 1 + static_cast<std::size_t>(trial % 4);
    const Shape s = oracle::random_shape(order, 5, g);
    const Tensor x = oracle::random_tensor(s, g);
    const Tensor y = oracle::random_tensor(s, g);
    const std::size_t d = static_cast<std::size_t>(trial / 4) % order;
    const CMatrix u = oracle::random_matrix(4, static_cast<Eigen::Index>(s[d]), g);
    worst = std::max(worst, oracle::rel_diff(mode_product(x, u, d), oracle::mode_product(x, u, d)));
    worst = std::max(worst, oracle::rel_diff(contract_except(x, y, d), oracle::contract_except(x, y, d)));
    const cplx ref = oracle::inner(x, y);
    worst = std::max(worst, std::abs(inner(x, y) - ref) / std::abs(ref));

    std::vector<CModeFactor> factors;
    std::vector<std::size_t> order_idx;
    for (std::size_t m = 0; m < order; ++m) {
      factors.push_back({oracle::random_matrix(1 + static_cast<Eigen::Index>(m + trial) % 4,
                                               static_cast<Eigen::Index>(s[m]), g),
                         m});
      order_idx.push_back(m);
    }
    Tensor seq = x;
    for (const auto& f : factors) seq = oracle::mode_product(seq, f.matrix, f.mode);
    worst = std::max(worst, oracle::rel_diff(multi_mode_product(x, factors, true), seq));
    worst = std::max(worst, oracle::rel_diff(multi_mode_product(x, factors, false), seq));
    std::rotate(order_idx.begin(), order_idx.begin() + static_cast<std::ptrdiff_t>(trial % order), order_idx.end());
    worst = std::max(worst, oracle::rel_diff(multi_mode_product_ordered(x, factors, order_idx), seq));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 10.0,
          "200 instances, worst relative error " + fmt("%.2e", worst) + ", " + fmt("%.2f", secs) + " s"};
}

// 2 -------------------------------------------------------------------------

Verdict tucker_degeneracy() {
  SystemConfig c;
  c.num_antennas = 32;
  c.num_subcarriers = 32;
  c.num_symbols = 10;
  SceneOptions o;
  const GridSpec grids = make_grids(c, GridCounts{32, 16, 20}, c.max_doppler(o.speed), o.min_distance);
  auto g = oracle::rng(1002);
  std::uniform_int_distribution<Eigen::Index> pick_de(0, grids.delay.size() - 1);
  std::uniform_int_distribution<Eigen::Index> pick_do(0, grids.doppler.size() - 1);

  double worst_nf = 0.0, worst_ff = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    o.sns_fraction = 1.0;
    const Scene drawn = sample_scene(c, o, 2000 + static_cast<std::uint64_t>(trial));
    std::vector<Eigen::Index> beams(static_cast<std::size_t>(grids.cosine.size()));
    for (std::size_t i = 0; i < beams.size(); ++i) beams[i] = static_cast<Eigen::Index>(i);
    std::shuffle(beams.begin(), beams.end(), g);

    Scene nf = drawn;
    Perturbations p = Perturbations::zeros(grids);
    RMatrix vis = RMatrix::Ones(32, grids.cosine.size());
    Tensor core(grids.bdd_shape());
    for (std::size_t l = 0; l < nf.size(); ++l) {
      auto& path = nf.paths[l];
      const Eigen::Index kb = beams[l], kd = pick_de(g), kt = pick_do(g);
      path.cosine = grids.cosine(kb);
      path.delay = grids.delay(kd);
      path.doppler = grids.doppler(kt);
      path.slope = slope_from_geometry(path.cosine, path.distance);
      p.eta(kb) = path.slope;
      for (std::size_t n = 0; n < 32; ++n) vis(static_cast<Eigen::Index>(n), kb) = path.visibility[n];
      core(static_cast<std::size_t>(kb), static_cast<std::size_t>(kd), static_cast<std::size_t>(kt)) += path.gain;
    }
    const FactorSet f = build_factors(grids, p, vis, c);
    const std::array<CModeFactor, 3> fac = {CModeFactor{f.A, 0}, CModeFactor{f.B, 1}, CModeFactor{f.C, 2}};
    worst_nf = std::max(worst_nf, oracle::rel_diff(multi_mode_product(core, fac, true), assemble_sft(nf, c)));

    // Far field and full visibility: the stationary factor alone.
    Scene ff = nf;
    for (auto& path : ff.paths) {
      path.slope = 0.0;
      std::fill(path.visibility.begin(), path.visibility.end(), 1);
    }
    CMatrix A(32, grids.cosine.size());
    for (Eigen::Index k = 0; k < A.cols(); ++k) A.col(k) = steer_beam(grids.cosine(k), 0.0, c);
    const std::array<CModeFactor, 3> ffac = {CModeFactor{A, 0}, CModeFactor{f.B, 1}, CModeFactor{f.C, 2}};
    worst_ff = std::max(worst_ff, oracle::rel_diff(multi_mode_product(core, ffac, true), assemble_sft(ff, c)));
  }
  const double worst = std::max(worst_nf, worst_ff);
  return {worst <= 1e-10, "20 on-grid scenes, near-field/SnS " + fmt("%.2e", worst_nf) + ", far-field stationary " +
                              fmt("%.2e", worst_ff)};
}

// 3 -------------------------------------------------------------------------

Verdict posterior_oracles() {
  auto g = oracle::rng(1003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 1.0);
  double worst_bg = 0.0, worst_sns = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double m = 0.02 + 0.96 * u(g);
    const double v = 0.1 + 2.9 * u(g);
    const double e = 0.01 + 2.0 * u(g);
    const double sd = std::sqrt((v + e) / 2.0);
    const cplx gl{sd * nd(g), sd * nd(g)};
    const BgMoments got = bg_posterior(m, v, gl, e);
    const auto ref = oracle::bg_quadrature(m, v, gl, e);
    worst_bg = std::max({worst_bg, std::abs(got.mean - ref.mean), std::abs(got.variance - ref.variance),
                         std::abs(got.support - ref.support)});

    const cplx a_ss = std::polar(1.0, 6.283185307179586 * u(g));
    const double sigma = 0.05 + 2.0 * u(g);
    const cplx a_lik = a_ss * (u(g) < 0.5 ? 1.0 : 0.0) + cplx{0.3 * nd(g), 0.3 * nd(g)};
    const double gamma = 4.0 * u(g) - 2.0;
    worst_sns = std::max(worst_sns, std::abs(sns_posterior(a_lik, sigma, a_ss, gamma).prob -
                                             oracle::sns_enumeration(a_lik, sigma, a_ss, gamma)));
  }
  return {worst_bg <= 1e-6 && worst_sns <= 1e-12, "100 draws, BG vs quadrature " + fmt("%.2e", worst_bg) +
                                                      ", SnS vs enumeration " + fmt("%.2e", worst_sns)};
}

// 4 -------------------------------------------------------------------------

using Objective = std::function<double(const RVector&)>;

struct Family {
  const char* name;
  std::function<QuadraticModel(const oracle::MStepProblem&)> model;
  std::function<Objective(const oracle::MStepProblem&)> objective;
  std::function<double(const oracle::MStepProblem&)> step;
};

std::vector<Family> families() {
  using P = oracle::MStepProblem;
  return {
      {"tau", [](const P& s) { return quadratic_tau(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const P& s) -> Objective {
         return [&s](const RVector& x) { return objective_tau(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const P& s) { return 1e-4 * s.grids.delay_step(); }},
      {"nu", [](const P& s) { return quadratic_nu(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const P& s) -> Objective {
         return [&s](const RVector& x) { return objective_nu(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const P& s) { return 1e-4 * s.grids.doppler_step(); }},
      {"phi_eta",
       [](const P& s) { return quadratic_phi_eta(s.state, s.hyper, s.grids, s.cfg, ExpansionPoint::kPrevious); },
       [](const P& s) -> Objective {
         return [&s](const RVector& x) { return objective_phi_eta(s.state, s.hyper, s.grids, s.cfg, x); };
       },
       [](const P&) { return 1e-6; }},
  };
}

/// Full finite-difference Hessian with mixed central differences.
RMatrix fd_hessian(const Objective& J, const RVector& x, double h) {
  const Eigen::Index n = x.size();
  RMatrix H(n, n);
  const double j0 = J(x);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a; b < n; ++b) {
      auto at = [&](double sa, double sb) {
        RVector y = x;
        y(a) += sa * h;
        y(b) += sb * h;
        return J(y);
      };
      if (a == b) {
        H(a, a) = (at(0.5, 0.5) + at(-0.5, -0.5) - 2 * j0) / (h * h);
      } else {
        H(a, b) = H(b, a) = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4 * h * h);
      }
    }
  }
  return H;
}

Verdict mstep_calculus() {
  double worst_grad = 0.0, worst_hess = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto rnd = oracle::mstep_problem(1100 + seed, false);
    const auto zero = oracle::mstep_problem(1200 + seed, true);
    for (const auto& fam : families()) {
      const QuadraticModel q = fam.model(rnd);
      const RVector h = RVector::Constant(q.origin.size(), fam.step(rnd));
      const RVector fd = oracle::fd_gradient(fam.objective(rnd), q.origin, h);
      const RVector an = -2.0 * q.mu.real();
      worst_grad = std::max(worst_grad, (fd - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff());

      const QuadraticModel z = fam.model(zero);
      const RMatrix H = fd_hessian(fam.objective(zero), z.origin, 10.0 * fam.step(zero));
      const RMatrix ref = 2.0 * z.Pi;
      worst_hess = std::max(worst_hess, (H - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
    }
  }
  return {worst_grad <= 1e-4 && worst_hess <= 1e-3,
          "N_an = K_be = 8, gradient vs -2Re{mu} " + fmt("%.2e", worst_grad) +
              ", Hessian vs 2 Pi at zero-residual states " + fmt("%.2e", worst_hess)};
}

// 5 -------------------------------------------------------------------------

struct Recovery {
  double prediction_db = 0.0;
  double in_frame_db = 0.0;
};

/// Noiseless far-field fully visible unit path on the given grid, 20 outer
/// iterations, prediction over one pilot interval.
Recovery recover_single_path(const GridCounts& counts) {
  const SystemConfig c = oracle::small_system();
  SceneOptions o;
  const GridSpec grids = make_grids(c, counts, c.max_doppler(o.speed), o.min_distance);
  PathParams p;
  p.gain = cplx{0.6, 0.8};
  p.cosine = grids.cosine(3);
  p.distance = 1e9;
  p.slope = 0.0;
  p.delay = grids.delay(1);
  p.doppler = grids.doppler(grids.doppler.size() / 2 + 1);
  p.visibility.assign(c.num_antennas, 1);
  Scene s;
  s.paths = {p};
  const Tensor y = assemble_sft(s, c);
  InferenceOptions opts;
  opts.outer_iterations = 20;
  const EmResult r = em_loop(y, 0.0, grids, c, opts);
  const std::size_t horizon = c.pilot_symbol_interval;
  const double pred = nmse(predict(r.state, r.hyper, grids, c, horizon), ground_truth_prediction(s, c, horizon));
  return {10.0 * std::log10(pred), 10.0 * std::log10(nmse(reconstruct(r.state, r.hyper, grids, c), y))};
}

Verdict small_recovery() {
  const auto t0 = Clock::now();
  const SystemConfig c = oracle::small_system();
  const Recovery r = recover_single_path(GridCounts::defaults_for(c));
  const double secs = seconds_since(t0);
  // Informational only: the same path with the Doppler grid at N_sym points.
  GridCounts coarse = GridCounts::defaults_for(c);
  coarse.doppler = c.num_symbols;
  const Recovery alt = recover_single_path(coarse);
  return {r.prediction_db < -40.0 && secs < 5.0,
          "8x8x4 noiseless on-grid path, default grids: prediction " + fmt("%.1f", r.prediction_db) + " dB (in-frame " +
              fmt("%.1f", r.in_frame_db) + " dB), " + fmt("%.2f", secs) + " s; with K_do = N_sym: " +
              fmt("%.1f", alt.prediction_db) + " dB"};
}

// 6 -------------------------------------------------------------------------

Verdict convergence_envelope() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = desk_profile();
  cfg.snr_db = 10.0;
  cfg.methods = {"tsbli"};
  cfg.axis = SweepAxis::kIterations;
  cfg.values = {30.0, 100.0};
  const SweepResult r = run_sweep(cfg);
  bool ok = true;
  std::string detail;
  for (std::size_t h : cfg.horizons) {
    const double a = summary_db(r, 30.0, "tsbli", h);
    const double b = summary_db(r, 100.0, "tsbli", h);
    ok = ok && std::abs(a - b) <= 0.5;
    detail += "n_cp=" + std::to_string(h) + ": " + fmt("%.2f", a) + " vs " + fmt("%.2f", b) + " dB; ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 600.0;
  return {ok, "desk, 20 trials, 30 vs 100 iterations, " + detail + fmt("%.0f", secs) + " s"};
}

// 7 -------------------------------------------------------------------------

Verdict ordering() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg = desk_profile();
  cfg.axis = SweepAxis::kSnr;
  cfg.values = {0.0, 10.0, 20.0};
  ExperimentConfig sns = cfg;
  sns.scene.sns_fraction = 1.0;
  const SweepResult plain = run_sweep(cfg);
  const SweepResult blocked = run_sweep(sns);

  std::vector<std::string> failures;
  auto note = [&failures](const std::string& s) { failures.push_back(s); };
  const std::array<std::pair<const char*, const SweepResult*>, 2> runs = {{{"no-SnS", &plain}, {"SnS", &blocked}}};

  // (a)
  for (const auto& [tag, res] : runs) {
    for (std::size_t h : cfg.horizons) {
      const double t = summary_db(*res, 10.0, "tsbli", h);
      for (const char* m : {"stale", "omp_prony"}) {
        if (!(t < summary_db(*res, 10.0, m, h))) {
          note(std::string("(a) ") + tag + " n_cp=" + std::to_string(h) + " tsbli " + fmt("%.2f", t) + " vs " + m +
               " " + fmt("%.2f", summary_db(*res, 10.0, m, h)));
        }
      }
    }
  }
  for (const auto& [tag, res] : runs) {
    for (const auto& m : kAllMethods) {
      // (b)
      for (std::size_t h : cfg.horizons) {
        for (std::size_t i = 1; i < cfg.values.size(); ++i) {
          const double lo = summary_db(*res, cfg.values[i - 1], m, h);
          const double hi = summary_db(*res, cfg.values[i], m, h);
          if (hi > lo) {
            note("(b) " + std::string(tag) + " " + m + " n_cp=" + std::to_string(h) + " " + fmt("%.2f", lo) + " -> " +
                 fmt("%.2f", hi));
          }
        }
      }
      // (c)
      for (double v : cfg.values) {
        for (std::size_t i = 1; i < cfg.horizons.size(); ++i) {
          const double a = summary_db(*res, v, m, cfg.horizons[i - 1]);
          const double b = summary_db(*res, v, m, cfg.horizons[i]);
          if (b < a - 0.3) {
            note("(c) " + std::string(tag) + " " + m + " SNR=" + fmt("%g", v) + " " + fmt("%.2f", a) + " -> " +
                 fmt("%.2f", b));
          }
        }
      }
    }
  }
  // (d)
  std::string d_table;
  for (const auto& m : kAllMethods) {
    for (double v : cfg.values) {
      for (std::size_t h : cfg.horizons) {
        const double with = summary_db(blocked, v, m, h);
        const double without = summary_db(plain, v, m, h);
        if (with < without) {
          note("(d) " + m + " SNR=" + fmt("%g", v) + " n_cp=" + std::to_string(h) + " SnS " + fmt("%.2f", with) +
               " < no-SnS " + fmt("%.2f", without));
        }
      }
    }
    d_table += m + " " + fmt("%.2f", summary_db(blocked, 10.0, m, 1)) + "/" +
               fmt("%.2f", summary_db(plain, 10.0, m, 1)) + " ";
  }

  std::string detail = "desk, 20 paired trials x SNR {0,10,20} x SnS {0,1}; at 10 dB n_cp=1 SnS/no-SnS dB: " + d_table +
                       "; " + fmt("%.0f", seconds_since(t0)) + " s";
  for (const auto& f : failures) detail += "\n      " + f;
  return {failures.empty(), detail};
}

// 8 -------------------------------------------------------------------------

Verdict determinism() {
  ExperimentConfig cfg = desk_profile();
  cfg.system = oracle::small_system();
  cfg.scene.num_paths = 2;
  cfg.grids = GridCounts{0, 0, 0};
  cfg.inference.outer_iterations = 10;
  cfg.values = {0.0, 20.0};
  cfg.trials = 4;
  auto text = [](const ExperimentConfig& c) {
    std::ostringstream out;
    write_csv(out, run_sweep(c));
    return out.str();
  };
  const std::string a = text(cfg);
  const std::string b = text(cfg);
  ExperimentConfig serial = cfg;
  serial.workers = 1;
  const std::string c = text(serial);
  return {a == b && a == c && !a.empty(),
          std::to_string(a.size()) + " bytes, repeated run " + (a == b ? "identical" : "DIFFERS") +
              ", single worker " + (a == c ? "identical" : "DIFFERS")};
}

// 9 -------------------------------------------------------------------------

Verdict mode_order() {
  // SFT -> BDD on desk shapes: adjoint factors of A (32x32), B (32x16), C (10x20).
  const Shape sft{32, 32, 10};
  auto g = oracle::rng(1009);
  const Tensor y = oracle::random_tensor(sft, g);
  const std::array<CModeFactor, 3> f = {CModeFactor{oracle::random_matrix(32, 32, g), 0},
                                        CModeFactor{oracle::random_matrix(16, 32, g), 1},
                                        CModeFactor{oracle::random_matrix(20, 10, g), 2}};
  auto measure = [&](const std::array<std::size_t, 3>& order) {
    Tensor x = y;
    std::size_t largest = 0;
    for (std::size_t i : order) {
      x = mode_product(x, f[i].matrix, f[i].mode);
      largest = std::max(largest, x.size());
    }
    return largest;
  };
  const std::array<std::size_t, 3> prescribed = {1, 0, 2};  // delay, beam, Doppler
  const std::size_t mine = measure(prescribed);
  bool ok = true;
  std::string detail;
  std::array<std::size_t, 3> order = {0, 1, 2};
  do {
    const std::size_t other = measure(order);
    ok = ok && mine <= other;
    detail += std::to_string(order[0]) + std::to_string(order[1]) + std::to_string(order[2]) + ":" +
              std::to_string(other) + " ";
  } while (std::next_permutation(order.begin(), order.end()));

  const std::array<std::pair<std::size_t, std::size_t>, 3> dims = {{{32, 32}, {16, 32}, {20, 10}}};
  const std::array<std::size_t, 3> modes = {0, 1, 2};
  const auto chosen = ascending_size_order(sft, dims, modes);
  const bool library_matches = std::equal(chosen.begin(), chosen.end(), prescribed.begin());
  ok = ok && library_matches && largest_intermediate(sft, dims, modes, prescribed) == mine;
  return {ok, "delay-beam-Doppler peak " + std::to_string(mine) + " elements; all orders (mode indices): " + detail +
                  "; library order " + (library_matches ? "matches" : "DIFFERS")};
}

}  // namespace

int main() {
  const std::array<std::pair<const char*, std::function<Verdict()>>, 9> criteria = {{
      {"tensor oracle equivalence", tensor_oracles},
      {"Tucker degeneracy", tucker_degeneracy},
      {"posterior oracles", posterior_oracles},
      {"M-step calculus", mstep_calculus},
      {"small-instance exact recovery", small_recovery},
      {"convergence envelope", convergence_envelope},
      {"ordering properties", ordering},
      {"determinism", determinism},
      {"mode-order complexity", mode_order},
  }};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("[%s] criterion %zu (%s): %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
