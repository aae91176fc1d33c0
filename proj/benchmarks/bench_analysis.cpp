#include <benchmark/benchmark.h>

#include "pixtok/analysis.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {
namespace {

AttentionRecord record(int side) {
  AttentionRecord r;
  r.length = side * side + 1;
  r.query_coords.push_back(GridCoord{});
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) r.query_coords.push_back({double(i), double(j)});
  r.key_coords = r.query_coords;
  r.weights.assign(static_cast<std::size_t>(r.length) * r.length, 1.0f / r.length);
  return r;
}

void BM_MeanAttentionDistance(benchmark::State& state) {
  const auto r = record(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mean_attention_distance(r, state.range(0)));
}
BENCHMARK(BM_MeanAttentionDistance)->Arg(8)->Arg(16)->Arg(32);

void BM_MeanAttentionOffset(benchmark::State& state) {
  const auto r = record(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mean_attention_offset(r, state.range(0)));
}
BENCHMARK(BM_MeanAttentionOffset)->Arg(8)->Arg(16)->Arg(32);

}  // namespace
}  // namespace pixtok
