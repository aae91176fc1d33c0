#include <cmath>
#include <memory>

#include "eigen_maps.hpp"
#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"
#include "pixtok/parallel.hpp"

namespace pixtok::ops {

using detail::Node;
using detail::RowMat;

namespace {

struct AttnDims {
  std::int64_t batch, len, dim, heads, head_dim;
  float scale;
};

// Copies head h of sample b into Q, K, V [len, head_dim].
void load_head(const float* qkv, const AttnDims& a, std::int64_t b, std::int64_t h, RowMat& q,
               RowMat& k, RowMat& v) {
  q.resize(a.len, a.head_dim);
  k.resize(a.len, a.head_dim);
  v.resize(a.len, a.head_dim);
  const std::int64_t stride = 3 * a.dim;
  for (std::int64_t l = 0; l < a.len; ++l) {
    const float* row = qkv + (b * a.len + l) * stride + h * a.head_dim;
    for (std::int64_t j = 0; j < a.head_dim; ++j) {
      q(l, j) = row[j];
      k(l, j) = row[a.dim + j];
      v(l, j) = row[2 * a.dim + j];
    }
  }
}

// probs = softmax(scale * q k^T) row-wise, in place.
void attention_probs(const RowMat& q, const RowMat& k, float scale, RowMat& probs) {
  probs.noalias() = q * k.transpose();
  const auto n = probs.cols();
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    float* row = probs.data() + r * n;
    float mx = -INFINITY;
    for (Eigen::Index j = 0; j < n; ++j) mx = std::max(mx, row[j]);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const float e = std::exp((row[j] - mx) * scale);
      row[j] = e;
      total += e;
    }
    const float inv = static_cast<float>(1.0 / total);
    for (Eigen::Index j = 0; j < n; ++j) row[j] *= inv;
  }
}

}  // namespace

Tensor self_attention(const Tensor& qkv, int heads, std::vector<float>* capture) {
  if (qkv.rank() != 3 || qkv.dim(2) % 3 != 0) {
    throw ShapeError("self_attention expects qkv [B, L, 3d], got " + shape_str(qkv.shape()));
  }
  AttnDims a{};
  a.batch = qkv.dim(0);
  a.len = qkv.dim(1);
  a.dim = qkv.dim(2) / 3;
  a.heads = heads;
  if (heads <= 0 || a.dim % heads != 0) {
    throw ShapeError("self_attention: dim " + std::to_string(a.dim) +
                     " not divisible by heads " + std::to_string(heads));
  }
  a.head_dim = a.dim / heads;
  a.scale = 1.0f / std::sqrt(static_cast<float>(a.head_dim));

  std::vector<float> out(a.batch * a.len * a.dim);
  if (capture) capture->assign(a.batch * a.heads * a.len * a.len, 0.0f);
  const float* src = qkv.data().data();
  parallel_for(a.batch * a.heads, [&](std::int64_t item) {
    const auto b = item / a.heads, h = item % a.heads;
    RowMat q, k, v, probs(a.len, a.len), o;
    load_head(src, a, b, h, q, k, v);
    attention_probs(q, k, a.scale, probs);
    o.noalias() = probs * v;
    for (std::int64_t l = 0; l < a.len; ++l)
      for (std::int64_t j = 0; j < a.head_dim; ++j)
        out[(b * a.len + l) * a.dim + h * a.head_dim + j] = o(l, j);
    if (capture) {
      std::copy(probs.data(), probs.data() + a.len * a.len,
                capture->data() + item * a.len * a.len);
    }
  });

  // Probabilities are recomputed in backward rather than stored: at pixel
  // resolution they dominate memory.
  return detail::make_result("self_attention", {a.batch, a.len, a.dim}, std::move(out), {qkv},
                             [a](Node& self) {
    if (!self.parents[0]->requires_grad) return;
    const float* src = self.parents[0]->value.data();
    auto& gqkv = self.parents[0]->ensure_grad();
    const std::int64_t stride = 3 * a.dim;
    parallel_for(a.batch * a.heads, [&](std::int64_t item) {
      const auto b = item / a.heads, h = item % a.heads;
      RowMat q, k, v, probs(a.len, a.len), dout(a.len, a.head_dim);
      load_head(src, a, b, h, q, k, v);
      attention_probs(q, k, a.scale, probs);
      for (std::int64_t l = 0; l < a.len; ++l)
        for (std::int64_t j = 0; j < a.head_dim; ++j)
          dout(l, j) = self.grad[(b * a.len + l) * a.dim + h * a.head_dim + j];
      RowMat dv = probs.transpose() * dout;
      RowMat dp = dout * v.transpose();
      // dS = P * (dP - rowsum(dP * P)), folded with the score scale.
      for (std::int64_t r = 0; r < a.len; ++r) {
        double dot = 0.0;
        for (std::int64_t c = 0; c < a.len; ++c)
          dot += static_cast<double>(dp(r, c)) * probs(r, c);
        for (std::int64_t c = 0; c < a.len; ++c)
          dp(r, c) = a.scale * probs(r, c) * (dp(r, c) - static_cast<float>(dot));
      }
      RowMat dq = dp * k;
      RowMat dk = dp.transpose() * q;
      for (std::int64_t l = 0; l < a.len; ++l) {
        float* row = gqkv.data() + (b * a.len + l) * stride + h * a.head_dim;
        for (std::int64_t j = 0; j < a.head_dim; ++j) {
          row[j] += dq(l, j);
          row[a.dim + j] += dk(l, j);
          row[2 * a.dim + j] += dv(l, j);
        }
      }
    });
  });
}

}  // namespace pixtok::ops
