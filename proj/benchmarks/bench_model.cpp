#include <benchmark/benchmark.h>

#include "pixtok/model.hpp"
#include "pixtok/ops.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {
namespace {

std::vector<Image> images(int count, int side) {
  auto rng = make_rng(9);
  std::vector<Image> out;
  for (int i = 0; i < count; ++i) {
    Image img(side, side, PixelRange::kNormalized);
    for (auto& v : img.values) v = static_cast<float>(normal(rng));
    out.push_back(std::move(img));
  }
  return out;
}

void BM_SelfAttention(benchmark::State& state) {
  const auto length = state.range(0);
  auto rng = make_rng(1);
  std::vector<float> v(static_cast<std::size_t>(4 * length * 3 * 64));
  for (auto& x : v) x = static_cast<float>(normal(rng));
  auto qkv = Tensor::from({4, length, 3 * 64}, std::move(v));
  NoGradGuard guard;
  for (auto _ : state) benchmark::DoNotOptimize(ops::self_attention(qkv, 4));
  state.SetItemsProcessed(state.iterations() * 4 * length * length);
}
BENCHMARK(BM_SelfAttention)->Arg(65)->Arg(257)->Arg(1025);

// One training step of a small pixel-token classifier.
void BM_PixelViTStep(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  ModelConfig cfg;
  cfg.layers = 4, cfg.dim = 64, cfg.mlp_dim = 128, cfg.heads = 4;
  cfg.image_size = side, cfg.num_classes = 4;
  VisionTransformer model(cfg, 1);
  const auto batch = images(16, side);
  std::vector<float> targets(16 * 4, 0.0f);
  for (int i = 0; i < 16; ++i) targets[i * 4 + i % 4] = 1.0f;
  const auto target = Tensor::from({16, 4}, targets);
  for (auto _ : state) {
    ForwardContext ctx;
    auto loss = ops::cross_entropy(model.forward_classifier(batch, ctx), target);
    backward(loss);
    for (auto& p : model.parameters()) p.tensor.zero_grad();
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_PixelViTStep)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace pixtok
