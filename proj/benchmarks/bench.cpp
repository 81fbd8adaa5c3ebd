#include <benchmark/benchmark.h>

#include "exitnas/exitsim.hpp"
#include "exitnas/oracle.hpp"
#include "exitnas/pareto.hpp"
#include "exitnas/surrogate.hpp"
#include "exitnas/tuner.hpp"

using namespace exitnas;

namespace {

Genome with_exits(const SearchSpace& space, std::size_t count) {
  Genome g = sample_genome(space, 7);
  g.thresholds = ThresholdVector{};
  for (std::size_t p = 0; p < count; ++p) g.thresholds.values[p] = 0.5;
  return g;
}

void BM_Profile(benchmark::State& state) {
  SearchSpace space;
  Genome g = with_exits(space, kNumExitPositions);
  for (auto _ : state) benchmark::DoNotOptimize(profile(g, space));
}
BENCHMARK(BM_Profile);

void BM_Tune(benchmark::State& state) {
  SearchSpace space;
  Genome g = with_exits(space, static_cast<std::size_t>(state.range(0)));
  SyntheticEvaluator eval(space, {}, 2000);
  auto result = eval.evaluate(g, 1);
  auto prof = profile(g, space);
  TunerConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(tune(result.trace, prof, cfg));
}
BENCHMARK(BM_Tune)->Arg(1)->Arg(3)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_NondominatedSort(benchmark::State& state) {
  Rng rng(3);
  std::vector<ObjectiveVector> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {uniform_unit(rng), uniform_unit(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(nondominated_sort(pts));
}
BENCHMARK(BM_NondominatedSort)->Arg(100)->Arg(1000);

void BM_SurrogateFit(benchmark::State& state) {
  SearchSpace space;
  Rng rng(5);
  std::vector<SurrogateSample> data;
  for (int i = 0; i < 100; ++i)
    data.push_back({sample_genome(space, rng), uniform_unit(rng), 1e6 + 3e6 * uniform_unit(rng)});
  SurrogateHyper hyper;
  for (auto _ : state) benchmark::DoNotOptimize(SurrogatePair::fit(space, data, hyper));
}
BENCHMARK(BM_SurrogateFit)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
