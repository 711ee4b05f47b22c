#include <benchmark/benchmark.h>

#include "opbw/pairs.hpp"
#include "opbw/walk.hpp"

using namespace opbw;

static void BM_CoupledWalk(benchmark::State& state) {
  SimConfig c;
  c.p = 0.8;
  c.steps = static_cast<std::int32_t>(state.range(0));
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto cs = sample_conditioned_start(c, r++);
    benchmark::DoNotOptimize(coupled_walk(*cs.backbone, Site{}, c.steps).regen.count());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoupledWalk)->Arg(1000)->Arg(10000);

static void BM_DirectWalk(benchmark::State& state) {
  SimConfig c;
  c.p = 0.8;
  c.steps = static_cast<std::int32_t>(state.range(0));
  auto cs = sample_conditioned_start(c, 0);
  std::uint64_t w = 0;
  for (auto _ : state) benchmark::DoNotOptimize(direct_walk(*cs.backbone, Site{}, c.steps, w++).positions.back());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DirectWalk)->Arg(1000)->Arg(10000);

static void BM_JointWalk(benchmark::State& state) {
  SimConfig c;
  c.p = 0.8;
  c.steps = 2000;
  Coord xp{};
  xp[0] = 8;
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto ps = sample_pair_start(c, PairLaw::kJoint, r++, Coord{}, xp);
    benchmark::DoNotOptimize(run_pair(ps, Coord{}, xp, c.steps).count());
  }
  state.SetItemsProcessed(state.iterations() * c.steps);
}
BENCHMARK(BM_JointWalk);

BENCHMARK_MAIN();
