#include "tsbli/channel_model.hpp"
#include "tsbli/factor_matrices.hpp"
#include "tsbli/inference.hpp"
#include "tsbli/tensor.hpp"

#include <benchmark/benchmark.h>

#include <array>
#include <random>

namespace {

using namespace tsbli;

Tensor random_tensor(const Shape& shape, std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor t(shape);
  for (auto& v : t.data()) v = {n(g), n(g)};
  return t;
}

CMatrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& g) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = {n(g), n(g)};
  return m;
}

SystemConfig desk() {
  SystemConfig c;
  c.num_antennas = 32;
  c.num_subcarriers = 32;
  c.num_symbols = 10;
  return c;
}

void BM_ModeProduct(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto mode = static_cast<std::size_t>(state.range(1));
  std::mt19937_64 g(1);
  const Tensor x = random_tensor({n, n, n}, g);
  const CMatrix u = random_matrix(static_cast<Eigen::Index>(n / 2), static_cast<Eigen::Index>(n), g);
  for (auto _ : state) benchmark::DoNotOptimize(mode_product(x, u, mode));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.size()));
}
BENCHMARK(BM_ModeProduct)->ArgsProduct({{16, 32, 64}, {0, 1, 2}});

// Full BDD -> SFT synthesis on desk shapes under each of the six mode orders.
void BM_ModeOrder(benchmark::State& state) {
  static constexpr std::array<std::array<std::size_t, 3>, 6> kOrders = {
      {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
  const auto& order = kOrders[static_cast<std::size_t>(state.range(0))];
  std::mt19937_64 g(2);
  const Tensor core = random_tensor({32, 16, 20}, g);
  const std::array<CModeFactor, 3> f = {CModeFactor{random_matrix(32, 32, g), 0},
                                        CModeFactor{random_matrix(32, 16, g), 1},
                                        CModeFactor{random_matrix(10, 20, g), 2}};
  for (auto _ : state) benchmark::DoNotOptimize(multi_mode_product_ordered(core, f, order));
  state.SetLabel(std::to_string(order[0]) + std::to_string(order[1]) + std::to_string(order[2]));
}
BENCHMARK(BM_ModeOrder)->DenseRange(0, 5);

void BM_EStepIteration(benchmark::State& state) {
  const SystemConfig cfg = desk();
  SceneOptions o;
  const Scene scene = sample_scene(cfg, o, 3);
  const Tensor h = assemble_sft(scene, cfg);
  const double nv = noise_variance_for_snr(h, 10.0);
  auto rng = make_stream(3, {1});
  const Tensor y = observe(h, nv, rng);
  const GridSpec grids = make_grids(cfg, GridCounts{32, 16, 20}, cfg.max_doppler(o.speed), o.min_distance);
  const auto [s0, hyper] = initialize(y, nv, grids, cfg);
  const Tensor yn = scale(y, 1.0 / s0.scale);
  for (auto _ : state) benchmark::DoNotOptimize(e_step(s0, yn, hyper, grids, cfg, 1, 0.3));
}
BENCHMARK(BM_EStepIteration)->Unit(benchmark::kMillisecond);

void BM_MStep(benchmark::State& state) {
  const SystemConfig cfg = desk();
  SceneOptions o;
  const Tensor h = assemble_sft(sample_scene(cfg, o, 4), cfg);
  const GridSpec grids = make_grids(cfg, GridCounts{32, 16, 20}, cfg.max_doppler(o.speed), o.min_distance);
  const auto [s0, hyper] = initialize(h, 0.0, grids, cfg);
  const InferenceState s = e_step(s0, scale(h, 1.0 / s0.scale), hyper, grids, cfg, 1, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(m_step_perturbations(s, hyper, grids, cfg));
}
BENCHMARK(BM_MStep)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
