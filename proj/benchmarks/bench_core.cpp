#include <benchmark/benchmark.h>

#include <cmath>

#include "tractflow/gat/encoder.hpp"
#include "tractflow/gbrt/boosting.hpp"
#include "tractflow/geodata/graph.hpp"
#include "tractflow/numeric/random.hpp"
#include "tractflow/synth/gravity.hpp"
#include "tractflow/train/multitask.hpp"

namespace {

using namespace tractflow;

GravityWorld world(std::size_t tracts) {
  GravityWorldConfig c;
  c.tracts = tracts;
  c.extent_km = 20.0 * std::sqrt(static_cast<double>(tracts) / 200.0);
  return make_gravity_world(c);
}

void BM_BuildGraphKnn(benchmark::State& state) {
  const GravityWorld w = world(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(w.tracts, AdjacencyPolicy::k_nearest(8)));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_BuildGraphKnn)->Arg(200)->Arg(800)->Arg(3200)->Complexity();

void BM_Encode(benchmark::State& state) {
  GravityWorld w = world(static_cast<std::size_t>(state.range(0)));
  const TractGraph g = build_graph(w.tracts, AdjacencyPolicy::k_nearest(8));
  w.schema.fit_normalization(g.tracts());
  GatConfig gat;
  gat.hidden_dim = static_cast<int>(state.range(1));
  gat.embedding_dim = static_cast<int>(state.range(1));
  const ParamStore params = init_model_params(w.schema.size(), gat, 1);
  for (auto _ : state) benchmark::DoNotOptimize(encode(g, w.schema, params, gat));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Encode)->Args({200, 16})->Args({200, 64})->Args({1000, 64});

void BM_BoostFit(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  Matrix x(rows, 33);
  std::vector<double> y(rows);
  for (auto& v : x.values()) v = rng.uniform(-1, 1);
  for (std::size_t i = 0; i < rows; ++i) y[i] = std::exp(x(i, 0) - x(i, 16)) / (0.1 + x(i, 32) * x(i, 32));
  BoostConfig cfg;
  cfg.rounds = 50;
  for (auto _ : state) benchmark::DoNotOptimize(fit(x, y, Matrix(), {}, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.rounds);
}
BENCHMARK(BM_BoostFit)->Arg(1000)->Arg(8000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
