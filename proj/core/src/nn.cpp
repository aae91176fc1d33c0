#include "pixtok/nn.hpp"

#include <cmath>

#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"

namespace pixtok {

Tensor Initializer::xavier_uniform(const std::string& name, std::int64_t fan_in,
                                   std::int64_t fan_out) const {
  Rng rng = make_rng(seed_, {hash_name(name)});
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<float> values(fan_in * fan_out);
  for (auto& v : values) v = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
  return Tensor::from({fan_in, fan_out}, std::move(values), true);
}

Tensor Initializer::trunc_normal(const std::string& name, Shape shape, double stddev) const {
  Tensor t = Tensor::zeros(std::move(shape), true);
  trunc_normal_into(name, t, stddev);
  return t;
}

void Initializer::trunc_normal_into(const std::string& name, Tensor& t, double stddev) const {
  Rng rng = make_rng(seed_, {hash_name(name)});
  for (auto& v : t.data()) {
    double x;
    do {
      x = normal(rng);
    } while (std::abs(x) > 2.0);
    v = static_cast<float>(x * stddev);
  }
}

Linear Linear::create(const Initializer& init, const std::string& name, std::int64_t in,
                      std::int64_t out) {
  return {init.xavier_uniform(name + ".weight", in, out), Initializer::zeros({out})};
}

Tensor Linear::operator()(const Tensor& x) const { return ops::linear(x, weight, bias); }

void Linear::collect(ParamList& out, const std::string& name) const {
  out.push_back({name + ".weight", weight});
  out.push_back({name + ".bias", bias});
}

LayerNorm LayerNorm::create(std::int64_t dim) {
  return {Initializer::ones({dim}), Initializer::zeros({dim})};
}

Tensor LayerNorm::operator()(const Tensor& x) const { return ops::layernorm(x, gain, bias); }

void LayerNorm::collect(ParamList& out, const std::string& name) const {
  out.push_back({name + ".gain", gain});
  out.push_back({name + ".bias", bias});
}

Tensor drop_path(const Tensor& x, float rate, bool training, Rng* rng) {
  if (!training || rate <= 0.0f) return x;
  if (rate >= 1.0f) throw ConfigError("drop path rate must be < 1");
  if (!rng) throw ConfigError("drop path in training mode needs a random stream");
  const float keep = 1.0f - rate;
  std::vector<float> scale(x.dim(0));
  for (auto& s : scale) s = uniform01(*rng) < keep ? 1.0f / keep : 0.0f;
  return ops::scale_samples(x, scale);
}

EncoderBlock EncoderBlock::create(const Initializer& init, const std::string& name, int dim,
                                  int mlp_dim, int heads, float drop_path_rate) {
  if (heads <= 0 || dim % heads != 0) {
    throw ConfigError("hidden dim " + std::to_string(dim) + " not divisible by heads " +
                      std::to_string(heads));
  }
  EncoderBlock b;
  b.norm1 = LayerNorm::create(dim);
  b.qkv = Linear::create(init, name + ".attn.qkv", dim, 3 * dim);
  b.proj = Linear::create(init, name + ".attn.proj", dim, dim);
  b.norm2 = LayerNorm::create(dim);
  b.fc1 = Linear::create(init, name + ".mlp.fc1", dim, mlp_dim);
  b.fc2 = Linear::create(init, name + ".mlp.fc2", mlp_dim, dim);
  b.heads = heads;
  b.drop_path_rate = drop_path_rate;
  return b;
}

Tensor EncoderBlock::forward(const Tensor& x, ForwardContext& ctx) const {
  std::vector<float>* capture = nullptr;
  if (ctx.attention) capture = &ctx.attention->emplace_back();
  Tensor a = proj(ops::self_attention(qkv(norm1(x)), heads, capture));
  Tensor y = ops::add(x, drop_path(a, drop_path_rate, ctx.training, ctx.rng));
  Tensor m = fc2(ops::gelu(fc1(norm2(y))));
  return ops::add(y, drop_path(m, drop_path_rate, ctx.training, ctx.rng));
}

void EncoderBlock::collect(ParamList& out, const std::string& name) const {
  norm1.collect(out, name + ".norm1");
  qkv.collect(out, name + ".attn.qkv");
  proj.collect(out, name + ".attn.proj");
  norm2.collect(out, name + ".norm2");
  fc1.collect(out, name + ".mlp.fc1");
  fc2.collect(out, name + ".mlp.fc2");
}

Encoder Encoder::create(const Initializer& init, const std::string& prefix, int layers, int dim,
                        int mlp_dim, int heads, float drop_path_rate) {
  Encoder e;
  for (int i = 0; i < layers; ++i) {
    const float rate = layers > 1 ? drop_path_rate * i / (layers - 1) : drop_path_rate;
    e.blocks.push_back(EncoderBlock::create(init, prefix + "blocks." + std::to_string(i), dim,
                                            mlp_dim, heads, rate));
  }
  e.norm = LayerNorm::create(dim);
  return e;
}

Tensor Encoder::forward(Tensor x, ForwardContext& ctx) const {
  for (const auto& block : blocks) x = block.forward(x, ctx);
  return norm(x);
}

void Encoder::collect(ParamList& out, const std::string& prefix) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].collect(out, prefix + "blocks." + std::to_string(i));
  }
  norm.collect(out, prefix + "norm");
}

}  // namespace pixtok
