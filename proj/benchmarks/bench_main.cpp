#include <benchmark/benchmark.h>

#include "cmbf/central.hpp"
#include "cmbf/cvar.hpp"
#include "cmbf/sadmm.hpp"

namespace {

using namespace cmbf;

std::vector<double> synthetic_costs(std::size_t n) {
  Rng rng(99);
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() * 3.0 + 1.0;
  return v;
}

void BM_EmpiricalCvar(benchmark::State& state) {
  const auto costs = synthetic_costs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(empirical_cvar(costs, 0.9));
}
BENCHMARK(BM_EmpiricalCvar)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_EmpiricalVar(benchmark::State& state) {
  const auto costs = synthetic_costs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(empirical_var(costs, 0.9));
}
BENCHMARK(BM_EmpiricalVar)->Arg(10000);

ScenarioConfig bench_scenario(int cells, int antennas, int users) {
  ScenarioConfig cfg;
  cfg.num_cells = cells;
  cfg.num_antennas = antennas;
  cfg.users_per_cell = users;
  cfg.seed = 7;
  return cfg;
}

SampleDatabase test_db(const ScenarioConfig& cfg) {
  Rng rng(5);
  return sample_states(cfg, rng, 16);
}

void BM_SumPowerSdp(benchmark::State& state) {
  const auto cfg = bench_scenario(static_cast<int>(state.range(0)),
                                  static_cast<int>(state.range(1)),
                                  static_cast<int>(state.range(2)));
  Rng rng(cfg.seed);
  auto model = make_channels(cfg, rng);
  auto db = test_db(cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(central::solve_no_res_baseline(model, db));
}
BENCHMARK(BM_SumPowerSdp)->Args({2, 2, 1})->Args({2, 4, 2})->Args({4, 8, 4});

void BM_AdmmSubproblem(benchmark::State& state) {
  const auto cfg = bench_scenario(4, static_cast<int>(state.range(0)), 4);
  Rng rng(cfg.seed);
  auto model = make_channels(cfg, rng);
  auto layout = sadmm::build_layout(cfg.num_cells, cfg.users_per_cell);
  sadmm::AgentState agent;
  agent.q = Eigen::VectorXd::Zero(layout.private_dim());
  agent.lambda = Eigen::VectorXd::Zero(layout.private_dim());
  const Eigen::VectorXd qbar = Eigen::VectorXd::Zero(layout.public_dim());
  for (auto _ : state)
    benchmark::DoNotOptimize(sadmm::local_primal_update(
        agent, layout, model, 0, qbar, 1.0, 1.0, 0.1));
}
BENCHMARK(BM_AdmmSubproblem)->Arg(4)->Arg(8);

}  // namespace

BENCHMARK_MAIN();
