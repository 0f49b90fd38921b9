#include <benchmark/benchmark.h>

#include "au2vec/cluster.hpp"
#include "au2vec/cooccur.hpp"
#include "au2vec/glove.hpp"
#include "au2vec/ingest.hpp"
#include "generators.hpp"

using namespace au2vec;

static void BM_LloydStep(benchmark::State& state) {
  gen::Rng rng(1);
  const auto pts = gen::au_points(rng, static_cast<std::size_t>(state.range(0)));
  const auto cents = kmeans_pp_init(pts, static_cast<std::size_t>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(lloyd_step(pts, cents));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LloydStep)->Args({10000, 40})->Args({10000, 1000})->Unit(benchmark::kMillisecond);

static void BM_Accumulate(benchmark::State& state) {
  gen::Rng rng(2);
  const auto tokens = gen::tokens(rng, static_cast<std::size_t>(state.range(0)), 200);
  for (auto _ : state) {
    CooccurrenceTable t(200, 10, Weighting::kInverseDistance);
    accumulate({"v", tokens}, t);
    benchmark::DoNotOptimize(t.cell_count());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Accumulate)->Arg(300)->Arg(30000);

static void BM_GloveEpoch(benchmark::State& state) {
  gen::Rng rng(3);
  const auto p = gen::planted_table(rng, static_cast<std::uint32_t>(state.range(0)), 10);
  GloveConfig cfg;
  cfg.dim = static_cast<std::size_t>(state.range(1));
  cfg.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(train(p.table, cfg));
}
BENCHMARK(BM_GloveEpoch)->Args({100, 25})->Args({300, 100})->Unit(benchmark::kMillisecond);

static void BM_ParseCsv(benchmark::State& state) {
  gen::Rng rng(4);
  const auto s = gen::sequence(rng, "v", static_cast<std::size_t>(state.range(0)), 30.0);
  const auto csv = gen::openface_csv(s.frames);
  for (auto _ : state) benchmark::DoNotOptimize(parse_openface_csv(csv, "v"));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(csv.size()));
}
BENCHMARK(BM_ParseCsv)->Arg(9000);
BENCHMARK_MAIN();
