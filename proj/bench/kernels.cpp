// Serial vs OpenMP paths of the two hot kernels.

#include <benchmark/benchmark.h>

#include <numeric>

#include "posg/beliefs/particles.hpp"
#include "posg/scenarios/scenarios.hpp"
#include "posg/solver/solver.hpp"

namespace {

using namespace posg;

struct Fixture {
  std::unique_ptr<Game> game;
  ParticleSet particles;
  JointPolicy theta;

  explicit Fixture(const char* scenario, std::size_t k_all) {
    ScenarioConfig c;
    c.name = scenario;
    game = make_game(c, 1);
    Rng rng(2);
    particles = init_particles(*game, k_all, 1, rng);
    theta = init_joint_policy(*game, std::vector<GatherMode>(game->num_players(), GatherMode::Active),
                              3, std::vector<std::size_t>{64, 64});
  }
};

void expected_cost_bench(benchmark::State& state, const char* scenario, bool parallel) {
  Fixture f(scenario, 1000);
  Rng rng(4);
  const RolloutBatch batch = make_batch(f.particles, static_cast<std::size_t>(state.range(0)), rng);
  for (auto _ : state) {
    auto est = expected_cost(*f.game, f.particles, f.theta, 0, batch, {.parallel = parallel});
    benchmark::DoNotOptimize(est.cost);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void propagate_bench(benchmark::State& state, const char* scenario, bool parallel) {
  Fixture f(scenario, static_cast<std::size_t>(state.range(0)));
  std::vector<std::size_t> all(f.particles.size());
  std::iota(all.begin(), all.end(), 0);
  std::uint64_t key = 0;
  for (auto _ : state) {
    propagate_particles(*f.game, f.particles, all, f.theta, std::nullopt,
                        {.gamma = 0.0, .parallel = parallel}, ++key);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(expected_cost_bench, tag_serial, "tag", false)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(expected_cost_bench, tag_omp, "tag", true)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(expected_cost_bench, tagchain_serial, "tagchain", false)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(expected_cost_bench, tagchain_omp, "tagchain", true)->Arg(10)->Arg(100);
BENCHMARK_CAPTURE(propagate_bench, tag_serial, "tag", false)->Arg(1000);
BENCHMARK_CAPTURE(propagate_bench, tag_omp, "tag", true)->Arg(1000);
BENCHMARK_CAPTURE(propagate_bench, warehouse_serial, "warehouse", false)->Arg(1000);
BENCHMARK_CAPTURE(propagate_bench, warehouse_omp, "warehouse", true)->Arg(1000);

BENCHMARK_MAIN();
