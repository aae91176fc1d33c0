#include <benchmark/benchmark.h>

#include "pixtok/ops.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {
namespace {

Tensor filled(Shape shape, std::uint64_t seed, bool grad) {
  auto rng = make_rng(seed);
  std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
  for (auto& x : v) x = static_cast<float>(normal(rng));
  return Tensor::from(std::move(shape), std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = state.range(0);
  auto a = filled({n, n}, 1, false), b = filled({n, n}, 2, false);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(256);

void BM_LinearForwardBackward(benchmark::State& state) {
  const auto tokens = state.range(0);
  auto x = filled({8, tokens, 64}, 1, true);
  auto w = filled({64, 256}, 2, true), b = filled({256}, 3, true);
  for (auto _ : state) {
    auto y = ops::sum(ops::linear(x, w, b));
    backward(y);
  }
  state.SetItemsProcessed(state.iterations() * 8 * tokens);
}
BENCHMARK(BM_LinearForwardBackward)->Arg(65)->Arg(257);

void BM_SoftmaxLast(benchmark::State& state) {
  const auto n = state.range(0);
  auto x = filled({4, n, n}, 4, false);
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::softmax(x, -1));
}
BENCHMARK(BM_SoftmaxLast)->Arg(65)->Arg(257);

void BM_LayerNorm(benchmark::State& state) {
  auto x = filled({8, state.range(0), 64}, 5, false);
  auto g = Tensor::full({64}, 1.0f), b = Tensor::zeros({64});
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::layernorm(x, g, b));
}
BENCHMARK(BM_LayerNorm)->Arg(65)->Arg(1025);

}  // namespace
}  // namespace pixtok
