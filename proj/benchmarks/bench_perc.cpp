#include <benchmark/benchmark.h>

#include <memory>

#include "opbw/perc.hpp"

using namespace opbw;

namespace {

SimConfig box(double p, std::int32_t H) {
  SimConfig c;
  c.p = p;
  c.steps = 1;
  c.horizon = H;
  return c.resolved();
}

}  // namespace

static void BM_GenerateEnvironment(benchmark::State& state) {
  const auto cfg = box(0.8, static_cast<std::int32_t>(state.range(0)));
  std::uint64_t r = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate_environment(cfg, r++).bits().data());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(generate_environment(cfg, 0).box_site_count()));
}
BENCHMARK(BM_GenerateEnvironment)->Arg(256)->Arg(1024);

static void BM_BackboneSweep(benchmark::State& state) {
  const auto env = generate_environment(box(0.8, static_cast<std::int32_t>(state.range(0))), 1);
  for (auto _ : state) {
    const BackboneField bb(env);
    benchmark::DoNotOptimize(bb.ell(Site{}));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(env.box_site_count()));
}
BENCHMARK(BM_BackboneSweep)->Arg(256)->Arg(1024);

static void BM_LazyOriginXi(benchmark::State& state) {
  const auto cfg = box(0.8, static_cast<std::int32_t>(state.range(0)));
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto env = std::make_shared<const Environment>(lazy_environment(cfg, r++));
    LazyBackbone bb(env);
    benchmark::DoNotOptimize(bb.xi(Site{}));
  }
}
BENCHMARK(BM_LazyOriginXi)->Arg(1000)->Arg(10000);

static void BM_OriginSurvival(benchmark::State& state) {
  const auto cfg = box(0.8, 200);
  std::uint64_t r = 0;
  for (auto _ : state) {
    auto env = std::make_shared<const Environment>(lazy_environment(cfg, r++));
    benchmark::DoNotOptimize(origin_survival_time(env, 200));
  }
}
BENCHMARK(BM_OriginSurvival);
