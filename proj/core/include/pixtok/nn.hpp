#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pixtok/rng.hpp"
#include "pixtok/tensor.hpp"

namespace pixtok {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};
using ParamList = std::vector<NamedTensor>;

// Deterministic initialisation: each parameter draws from its own stream keyed
// by (seed, name), so creation order does not matter.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : seed_(seed) {}
  Tensor xavier_uniform(const std::string& name, std::int64_t fan_in, std::int64_t fan_out) const;
  // Normal(0, stddev) truncated to +-2 stddev.
  Tensor trunc_normal(const std::string& name, Shape shape, double stddev) const;
  void trunc_normal_into(const std::string& name, Tensor& t, double stddev) const;
  static Tensor zeros(Shape shape) { return Tensor::zeros(std::move(shape), true); }
  static Tensor ones(Shape shape) { return Tensor::full(std::move(shape), 1.0f, true); }

 private:
  std::uint64_t seed_;
};

struct Linear {
  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

  static Linear create(const Initializer& init, const std::string& name, std::int64_t in,
                       std::int64_t out);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& out, const std::string& name) const;
};

struct LayerNorm {
  Tensor gain;
  Tensor bias;

  static LayerNorm create(std::int64_t dim);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamList& out, const std::string& name) const;
};

// Per-call state threaded through a forward pass.
struct ForwardContext {
  bool training = false;
  Rng* rng = nullptr;  // drop path draws; required when training with drop path > 0
  // When non-null, receives one [B, heads, L, L] buffer per layer.
  std::vector<std::vector<float>>* attention = nullptr;
};

// Zeroes the residual branch per sample with probability `rate` and scales
// survivors by 1 / (1 - rate). Identity when not training or rate == 0.
Tensor drop_path(const Tensor& x, float rate, bool training, Rng* rng);

// Pre-norm block:
//   y = x + DropPath(Attn(LN(x)))
//   z = y + DropPath(MLP(LN(y)))
struct EncoderBlock {
  LayerNorm norm1;
  Linear qkv;
  Linear proj;
  LayerNorm norm2;
  Linear fc1;
  Linear fc2;
  int heads = 1;
  float drop_path_rate = 0.0f;

  static EncoderBlock create(const Initializer& init, const std::string& name, int dim,
                             int mlp_dim, int heads, float drop_path_rate);
  Tensor forward(const Tensor& x, ForwardContext& ctx) const;
  void collect(ParamList& out, const std::string& name) const;
};

// N blocks followed by a final LayerNorm.
struct Encoder {
  std::vector<EncoderBlock> blocks;
  LayerNorm norm;

  // Drop path grows linearly from 0 at the first block to `drop_path_rate` at the last.
  static Encoder create(const Initializer& init, const std::string& prefix, int layers, int dim,
                        int mlp_dim, int heads, float drop_path_rate);
  Tensor forward(Tensor x, ForwardContext& ctx) const;
  void collect(ParamList& out, const std::string& prefix) const;
};

}  // namespace pixtok
