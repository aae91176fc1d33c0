#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pixtok/tensor.hpp"

// Differentiable operations used by the encoder, heads and losses. Every op
// checks its forward output for NaN/Inf and throws NumericError on failure.
//
// Most ops treat their input as a stack of rows over the last dimension
// ("rows" = numel / last dim).
namespace pixtok::ops {

// [m, k] x [k, n] -> [m, n]
Tensor matmul(const Tensor& a, const Tensor& b);

// x[..., in] * weight[in, out] + bias[out]. `bias` may be undefined.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Elementwise sum. `b` may have a shape equal to a trailing suffix of `a`'s
// shape, in which case it is broadcast over the leading dims.
Tensor add(const Tensor& a, const Tensor& b);

// Elementwise product of equally shaped tensors.
Tensor mul(const Tensor& a, const Tensor& b);

// Sum of all elements -> scalar.
Tensor sum(const Tensor& x);

// tanh approximation: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
Tensor gelu(const Tensor& x);

// Max-subtracted softmax along `axis` (negative counts from the back).
Tensor softmax(const Tensor& x, int axis = -1);

// Normalizes over the last dim with population variance, then applies
// gain[d] and bias[d].
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-6f);

// Mean over the batch of -sum(target * log_softmax(logits)). Targets are soft
// labels [B, C] whose rows must sum to 1.
Tensor cross_entropy(const Tensor& logits, const Tensor& targets);

// Mean squared error over the elements where mask != 0. `mask` has one entry
// per element of `pred`. Throws ShapeError on an empty mask.
Tensor mse_masked(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask);

Tensor reshape(const Tensor& x, Shape shape);

// Token-sequence helpers over [B, L, d] tensors.

// [B, L, d] with tok[d] -> [B, L + 1, d], tok first.
Tensor prepend_token(const Tensor& x, const Tensor& tok);

// [B, La, d] ++ [B, Lb, d] -> [B, La + Lb, d].
Tensor concat_tokens(const Tensor& a, const Tensor& b);

// Rows [begin, end) along axis -2 of a rank-2 or rank-3 tensor.
Tensor slice_tokens(const Tensor& x, std::int64_t begin, std::int64_t end);

// out[b, k] = x[b, index[b * K + k]]; index has B*K entries.
Tensor gather_tokens(const Tensor& x, std::span<const std::int32_t> index, std::int64_t per_sample);

// Inverse of gather with a fill token: out[b, index[b*K + k]] = src[b, k];
// every other row of out[b] equals fill[d].
Tensor scatter_tokens(const Tensor& src, const Tensor& fill,
                      std::span<const std::int32_t> index, std::int64_t length);

// Mean over tokens [begin, L) -> [B, d].
Tensor mean_tokens(const Tensor& x, std::int64_t begin = 0);

// x[b, ...] * scale[b].
Tensor scale_samples(const Tensor& x, std::span<const float> scale);

// Multi-head scaled dot-product self-attention over packed projections.
// qkv is [B, L, 3d] laid out as [q | k | v] along the last dim; head h uses
// columns [h*d/H, (h+1)*d/H) of each block. Output is [B, L, d].
//
// When `capture` is non-null it receives the post-softmax weights,
// laid out [B, heads, L, L].
Tensor self_attention(const Tensor& qkv, int heads, std::vector<float>* capture = nullptr);

}  // namespace pixtok::ops
