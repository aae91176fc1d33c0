#include "pixtok/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "eigen_maps.hpp"
#include "pixtok/error.hpp"

namespace pixtok::ops {

using detail::make_result;
using detail::mat;
using detail::Node;

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw ShapeError(what);
}

bool wants_grad(const Node& self, std::size_t i) {
  return self.parents[i] && self.parents[i]->requires_grad;
}

std::vector<float>& parent_grad(Node& self, std::size_t i) {
  return self.parents[i]->ensure_grad();
}

const std::vector<float>& parent_value(const Node& self, std::size_t i) {
  return self.parents[i]->value;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.rank() == 2 && b.rank() == 2,
          "matmul expects rank-2 operands, got " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul inner dimension mismatch: " + shape_str(a.shape()) + " x " +
                             shape_str(b.shape()));
  std::vector<float> out(m * n);
  mat(out.data(), m, n).noalias() = mat(a.data().data(), m, k) * mat(b.data().data(), k, n);
  return make_result("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    auto dy = mat(self.grad.data(), m, n);
    if (wants_grad(self, 0)) {
      mat(parent_grad(self, 0).data(), m, k).noalias() +=
          dy * mat(parent_value(self, 1).data(), k, n).transpose();
    }
    if (wants_grad(self, 1)) {
      mat(parent_grad(self, 1).data(), k, n).noalias() +=
          mat(parent_value(self, 0).data(), m, k).transpose() * dy;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require(x.rank() >= 1 && weight.rank() == 2, "linear expects x[..., in] and weight[in, out]");
  const auto in = x.dim(-1), out_dim = weight.dim(1);
  require(weight.dim(0) == in, "linear input dim " + std::to_string(in) +
                                   " does not match weight " + shape_str(weight.shape()));
  const bool has_bias = bias.defined();
  if (has_bias) {
    require(bias.rank() == 1 && bias.dim(0) == out_dim,
            "linear bias shape " + shape_str(bias.shape()) + " does not match out dim " +
                std::to_string(out_dim));
  }
  const auto rows = x.numel() / std::max<std::int64_t>(in, 1);
  Shape shape = x.shape();
  shape.back() = out_dim;
  std::vector<float> out(rows * out_dim);
  auto y = mat(out.data(), rows, out_dim);
  y.noalias() = mat(x.data().data(), rows, in) * mat(weight.data().data(), in, out_dim);
  if (has_bias) {
    y.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(bias.data().data(), out_dim);
  }
  return make_result(
      "linear", std::move(shape), std::move(out), {x, weight, bias},
      [rows, in, out_dim, has_bias](Node& self) {
        auto dy = mat(self.grad.data(), rows, out_dim);
        if (wants_grad(self, 0)) {
          mat(parent_grad(self, 0).data(), rows, in).noalias() +=
              dy * mat(parent_value(self, 1).data(), in, out_dim).transpose();
        }
        if (wants_grad(self, 1)) {
          mat(parent_grad(self, 1).data(), in, out_dim).noalias() +=
              mat(parent_value(self, 0).data(), rows, in).transpose() * dy;
        }
        if (has_bias && wants_grad(self, 2)) {
          Eigen::Map<Eigen::RowVectorXf>(parent_grad(self, 2).data(), out_dim) +=
              dy.colwise().sum();
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  require(sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin()),
          "add: shape " + shape_str(sb) + " does not broadcast to " + shape_str(sa));
  const auto n = a.numel();
  const auto nb = std::max<std::int64_t>(b.numel(), 1);
  std::vector<float> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::int64_t i = 0; i < n; ++i) out[i] = av[i] + bv[i % nb];
  return make_result("add", sa, std::move(out), {a, b}, [n, nb](Node& self) {
    const auto& g = self.grad;
    if (wants_grad(self, 0)) {
      auto& ga = parent_grad(self, 0);
      for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i];
    }
    if (wants_grad(self, 1)) {
      auto& gb = parent_grad(self, 1);
      for (std::int64_t i = 0; i < n; ++i) gb[i % nb] += g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          "mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const auto n = a.numel();
  std::vector<float> out(n);
  auto av = a.data();
  auto bv = b.data();
  for (std::int64_t i = 0; i < n; ++i) out[i] = av[i] * bv[i];
  return make_result("mul", a.shape(), std::move(out), {a, b}, [n](Node& self) {
    const auto& g = self.grad;
    if (wants_grad(self, 0)) {
      auto& ga = parent_grad(self, 0);
      const auto& bv = parent_value(self, 1);
      for (std::int64_t i = 0; i < n; ++i) ga[i] += g[i] * bv[i];
    }
    if (wants_grad(self, 1)) {
      auto& gb = parent_grad(self, 1);
      const auto& av = parent_value(self, 0);
      for (std::int64_t i = 0; i < n; ++i) gb[i] += g[i] * av[i];
    }
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (float v : x.data()) acc += v;
  return make_result("sum", {}, {static_cast<float>(acc)}, {x}, [](Node& self) {
    if (!wants_grad(self, 0)) return;
    const float g = self.grad[0];
    for (auto& v : parent_grad(self, 0)) v += g;
  });
}

namespace {

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2 / pi)
constexpr float kGeluA = 0.044715f;

}  // namespace

Tensor gelu(const Tensor& x) {
  const auto n = x.numel();
  std::vector<float> out(n);
  auto xv = x.data();
  for (std::int64_t i = 0; i < n; ++i) {
    const float v = xv[i];
    out[i] = 0.5f * v * (1.0f + std::tanh(kGeluC * (v + kGeluA * v * v * v)));
  }
  return make_result("gelu", x.shape(), std::move(out), {x}, [n](Node& self) {
    if (!wants_grad(self, 0)) return;
    const auto& xv = parent_value(self, 0);
    auto& gx = parent_grad(self, 0);
    for (std::int64_t i = 0; i < n; ++i) {
      const float v = xv[i];
      const float t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const float dt = (1.0f - t * t) * kGeluC * (1.0f + 3.0f * kGeluA * v * v);
      gx[i] += self.grad[i] * (0.5f * (1.0f + t) + 0.5f * v * dt);
    }
  });
}

Tensor softmax(const Tensor& x, int axis) {
  const int r = x.rank();
  const int ax = axis < 0 ? r + axis : axis;
  require(ax >= 0 && ax < r, "softmax axis " + std::to_string(axis) + " invalid for shape " +
                                 shape_str(x.shape()));
  std::int64_t outer = 1, inner = 1;
  for (int i = 0; i < ax; ++i) outer *= x.dim(i);
  for (int i = ax + 1; i < r; ++i) inner *= x.dim(i);
  const auto n = x.dim(ax);
  std::vector<float> out(x.numel());
  auto xv = x.data();
  for (std::int64_t o = 0; o < outer; ++o) {
    for (std::int64_t in = 0; in < inner; ++in) {
      const auto base = o * n * inner + in;
      float mx = -INFINITY;
      for (std::int64_t j = 0; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      double total = 0.0;
      for (std::int64_t j = 0; j < n; ++j) {
        const float e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      const float inv = static_cast<float>(1.0 / total);
      for (std::int64_t j = 0; j < n; ++j) out[base + j * inner] *= inv;
    }
  }
  return make_result("softmax", x.shape(), std::move(out), {x}, [outer, inner, n](Node& self) {
    if (!wants_grad(self, 0)) return;
    const auto& y = self.value;
    auto& gx = parent_grad(self, 0);
    for (std::int64_t o = 0; o < outer; ++o) {
      for (std::int64_t in = 0; in < inner; ++in) {
        const auto base = o * n * inner + in;
        double dot = 0.0;
        for (std::int64_t j = 0; j < n; ++j) {
          dot += static_cast<double>(self.grad[base + j * inner]) * y[base + j * inner];
        }
        for (std::int64_t j = 0; j < n; ++j) {
          const auto k = base + j * inner;
          gx[k] += y[k] * (self.grad[k] - static_cast<float>(dot));
        }
      }
    }
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  const auto d = x.dim(-1);
  require(gain.numel() == d && bias.numel() == d,
          "layernorm gain/bias must have " + std::to_string(d) + " elements");
  const auto rows = x.numel() / std::max<std::int64_t>(d, 1);
  auto xhat = std::make_shared<std::vector<float>>(x.numel());
  auto rstd = std::make_shared<std::vector<float>>(rows);
  std::vector<float> out(x.numel());
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  for (std::int64_t r = 0; r < rows; ++r) {
    const float* row = xv.data() + r * d;
    double mean = 0.0;
    for (std::int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::int64_t j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*rstd)[r] = static_cast<float>(inv);
    for (std::int64_t j = 0; j < d; ++j) {
      const float h = static_cast<float>((row[j] - mean) * inv);
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_result(
      "layernorm", x.shape(), std::move(out), {x, gain, bias},
      [rows, d, xhat, rstd](Node& self) {
        const auto& g = self.grad;
        const auto& gain_v = parent_value(self, 1);
        if (wants_grad(self, 1)) {
          auto& gg = parent_grad(self, 1);
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < d; ++j) gg[j] += g[r * d + j] * (*xhat)[r * d + j];
        }
        if (wants_grad(self, 2)) {
          auto& gb = parent_grad(self, 2);
          for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < d; ++j) gb[j] += g[r * d + j];
        }
        if (wants_grad(self, 0)) {
          auto& gx = parent_grad(self, 0);
          for (std::int64_t r = 0; r < rows; ++r) {
            double mean_dh = 0.0, mean_dh_h = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
              const double dh = static_cast<double>(g[r * d + j]) * gain_v[j];
              mean_dh += dh;
              mean_dh_h += dh * (*xhat)[r * d + j];
            }
            mean_dh /= static_cast<double>(d);
            mean_dh_h /= static_cast<double>(d);
            const double s = (*rstd)[r];
            for (std::int64_t j = 0; j < d; ++j) {
              const double dh = static_cast<double>(g[r * d + j]) * gain_v[j];
              gx[r * d + j] +=
                  static_cast<float>(s * (dh - mean_dh - (*xhat)[r * d + j] * mean_dh_h));
            }
          }
        }
      });
}

Tensor cross_entropy(const Tensor& logits, const Tensor& targets) {
  require(logits.rank() == 2 && targets.shape() == logits.shape(),
          "cross_entropy expects logits [B, C] and targets of the same shape, got " +
              shape_str(logits.shape()) + " and " + shape_str(targets.shape()));
  const auto batch = logits.dim(0), classes = logits.dim(1);
  require(batch > 0 && classes > 0, "cross_entropy on empty batch");
  auto lv = logits.data();
  auto tv = targets.data();
  auto probs = std::make_shared<std::vector<float>>(logits.numel());
  double total = 0.0;
  for (std::int64_t b = 0; b < batch; ++b) {
    const float* row = lv.data() + b * classes;
    const float* t = tv.data() + b * classes;
    double tsum = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) tsum += t[c];
    require(std::abs(tsum - 1.0) < 1e-4,
            "cross_entropy target row " + std::to_string(b) + " sums to " + std::to_string(tsum));
    float mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::int64_t c = 0; c < classes; ++c) z += std::exp(static_cast<double>(row[c]) - mx);
    const double lse = mx + std::log(z);
    for (std::int64_t c = 0; c < classes; ++c) {
      const double logp = row[c] - lse;
      (*probs)[b * classes + c] = static_cast<float>(std::exp(logp));
      total -= t[c] * logp;
    }
  }
  const float loss = static_cast<float>(total / static_cast<double>(batch));
  return make_result("cross_entropy", {}, {loss}, {logits, targets},
                     [batch, classes, probs](Node& self) {
                       if (!wants_grad(self, 0)) return;
                       const float scale = self.grad[0] / static_cast<float>(batch);
                       const auto& t = parent_value(self, 1);
                       auto& gl = parent_grad(self, 0);
                       for (std::int64_t i = 0; i < batch * classes; ++i) {
                         gl[i] += scale * ((*probs)[i] - t[i]);
                       }
                     });
}

Tensor mse_masked(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> mask) {
  require(pred.shape() == target.shape(), "mse_masked shape mismatch: " +
                                              shape_str(pred.shape()) + " vs " +
                                              shape_str(target.shape()));
  const auto n = pred.numel();
  require(static_cast<std::int64_t>(mask.size()) == n,
          "mse_masked mask has " + std::to_string(mask.size()) + " entries for " +
              std::to_string(n) + " elements");
  std::int64_t count = 0;
  double acc = 0.0;
  auto pv = pred.data();
  auto tv = target.data();
  for (std::int64_t i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    const double e = static_cast<double>(pv[i]) - tv[i];
    acc += e * e;
    ++count;
  }
  require(count > 0, "mse_masked called with an empty mask");
  std::vector<std::uint8_t> mask_copy(mask.begin(), mask.end());
  return make_result("mse_masked", {}, {static_cast<float>(acc / count)}, {pred, target},
                     [n, count, mask_copy = std::move(mask_copy)](Node& self) {
                       const float scale = 2.0f * self.grad[0] / static_cast<float>(count);
                       const auto& pv = parent_value(self, 0);
                       const auto& tv = parent_value(self, 1);
                       const bool gp = wants_grad(self, 0);
                       const bool gt = wants_grad(self, 1);
                       for (std::int64_t i = 0; i < n; ++i) {
                         if (!mask_copy[i]) continue;
                         const float e = scale * (pv[i] - tv[i]);
                         if (gp) parent_grad(self, 0)[i] += e;
                         if (gt) parent_grad(self, 1)[i] -= e;
                       }
                     });
}

Tensor reshape(const Tensor& x, Shape shape) {
  require(shape_numel(shape) == x.numel(),
          "reshape " + shape_str(x.shape()) + " to " + shape_str(shape) + " changes element count");
  std::vector<float> out(x.data().begin(), x.data().end());
  return make_result("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    if (!wants_grad(self, 0)) return;
    auto& gx = parent_grad(self, 0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
  });
}

Tensor prepend_token(const Tensor& x, const Tensor& tok) {
  require(x.rank() == 3, "prepend_token expects [B, L, d], got " + shape_str(x.shape()));
  const auto batch = x.dim(0), len = x.dim(1), d = x.dim(2);
  require(tok.numel() == d, "prepend_token token size mismatch");
  std::vector<float> out(batch * (len + 1) * d);
  auto xv = x.data();
  auto tv = tok.data();
  for (std::int64_t b = 0; b < batch; ++b) {
    float* dst = out.data() + b * (len + 1) * d;
    std::copy(tv.begin(), tv.end(), dst);
    std::copy(xv.begin() + b * len * d, xv.begin() + (b + 1) * len * d, dst + d);
  }
  return make_result("prepend_token", {batch, len + 1, d}, std::move(out), {x, tok},
                     [batch, len, d](Node& self) {
                       const auto& g = self.grad;
                       if (wants_grad(self, 0)) {
                         auto& gx = parent_grad(self, 0);
                         for (std::int64_t b = 0; b < batch; ++b)
                           for (std::int64_t i = 0; i < len * d; ++i)
                             gx[b * len * d + i] += g[b * (len + 1) * d + d + i];
                       }
                       if (wants_grad(self, 1)) {
                         auto& gt = parent_grad(self, 1);
                         for (std::int64_t b = 0; b < batch; ++b)
                           for (std::int64_t j = 0; j < d; ++j) gt[j] += g[b * (len + 1) * d + j];
                       }
                     });
}

Tensor concat_tokens(const Tensor& a, const Tensor& b) {
  require(a.rank() == 3 && b.rank() == 3 && a.dim(0) == b.dim(0) && a.dim(2) == b.dim(2),
          "concat_tokens shape mismatch: " + shape_str(a.shape()) + " and " +
              shape_str(b.shape()));
  const auto batch = a.dim(0), la = a.dim(1), lb = b.dim(1), d = a.dim(2);
  const auto len = la + lb;
  std::vector<float> out(batch * len * d);
  auto av = a.data();
  auto bv = b.data();
  for (std::int64_t s = 0; s < batch; ++s) {
    std::copy(av.begin() + s * la * d, av.begin() + (s + 1) * la * d, out.begin() + s * len * d);
    std::copy(bv.begin() + s * lb * d, bv.begin() + (s + 1) * lb * d,
              out.begin() + (s * len + la) * d);
  }
  return make_result("concat_tokens", {batch, len, d}, std::move(out), {a, b},
                     [batch, la, lb, d](Node& self) {
                       const auto len = la + lb;
                       for (std::size_t which = 0; which < 2; ++which) {
                         if (!wants_grad(self, which)) continue;
                         const auto rows = which == 0 ? la : lb;
                         const auto offset = which == 0 ? 0 : la;
                         auto& g = parent_grad(self, which);
                         for (std::int64_t s = 0; s < batch; ++s)
                           for (std::int64_t i = 0; i < rows * d; ++i)
                             g[s * rows * d + i] += self.grad[(s * len + offset) * d + i];
                       }
                     });
}

Tensor slice_tokens(const Tensor& x, std::int64_t begin, std::int64_t end) {
  require(x.rank() == 2 || x.rank() == 3,
          "slice_tokens expects rank 2 or 3, got " + shape_str(x.shape()));
  const auto batch = x.rank() == 3 ? x.dim(0) : 1;
  const auto len = x.dim(-2), d = x.dim(-1);
  require(0 <= begin && begin <= end && end <= len,
          "slice_tokens range [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") invalid for length " + std::to_string(len));
  const auto count = end - begin;
  Shape shape = x.shape();
  shape[shape.size() - 2] = count;
  std::vector<float> out(batch * count * d);
  auto xv = x.data();
  for (std::int64_t b = 0; b < batch; ++b) {
    std::copy(xv.begin() + (b * len + begin) * d, xv.begin() + (b * len + end) * d,
              out.begin() + b * count * d);
  }
  return make_result("slice_tokens", std::move(shape), std::move(out), {x},
                     [batch, len, d, begin, count](Node& self) {
                       if (!wants_grad(self, 0)) return;
                       auto& gx = parent_grad(self, 0);
                       for (std::int64_t b = 0; b < batch; ++b)
                         for (std::int64_t i = 0; i < count * d; ++i)
                           gx[(b * len + begin) * d + i] += self.grad[b * count * d + i];
                     });
}

Tensor gather_tokens(const Tensor& x, std::span<const std::int32_t> index, std::int64_t per_sample) {
  require(x.rank() == 3, "gather_tokens expects [B, L, d], got " + shape_str(x.shape()));
  const auto batch = x.dim(0), len = x.dim(1), d = x.dim(2);
  require(static_cast<std::int64_t>(index.size()) == batch * per_sample,
          "gather_tokens index size mismatch");
  std::vector<std::int32_t> idx(index.begin(), index.end());
  for (auto i : idx) require(i >= 0 && i < len, "gather_tokens index out of range");
  std::vector<float> out(batch * per_sample * d);
  auto xv = x.data();
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t k = 0; k < per_sample; ++k) {
      const auto src = (b * len + idx[b * per_sample + k]) * d;
      std::copy(xv.begin() + src, xv.begin() + src + d, out.begin() + (b * per_sample + k) * d);
    }
  return make_result("gather_tokens", {batch, per_sample, d}, std::move(out), {x},
                     [batch, len, d, per_sample, idx = std::move(idx)](Node& self) {
                       if (!wants_grad(self, 0)) return;
                       auto& gx = parent_grad(self, 0);
                       for (std::int64_t b = 0; b < batch; ++b)
                         for (std::int64_t k = 0; k < per_sample; ++k) {
                           const auto dst = (b * len + idx[b * per_sample + k]) * d;
                           const auto src = (b * per_sample + k) * d;
                           for (std::int64_t j = 0; j < d; ++j) gx[dst + j] += self.grad[src + j];
                         }
                     });
}

Tensor scatter_tokens(const Tensor& src, const Tensor& fill, std::span<const std::int32_t> index,
                      std::int64_t length) {
  require(src.rank() == 3, "scatter_tokens expects [B, K, d], got " + shape_str(src.shape()));
  const auto batch = src.dim(0), per_sample = src.dim(1), d = src.dim(2);
  require(fill.numel() == d, "scatter_tokens fill size mismatch");
  require(static_cast<std::int64_t>(index.size()) == batch * per_sample,
          "scatter_tokens index size mismatch");
  std::vector<std::int32_t> idx(index.begin(), index.end());
  // owner[b * length + l] = k, or -1 for fill rows
  auto owner = std::make_shared<std::vector<std::int32_t>>(batch * length, -1);
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t k = 0; k < per_sample; ++k) {
      const auto l = idx[b * per_sample + k];
      require(l >= 0 && l < length, "scatter_tokens index out of range");
      auto& slot = (*owner)[b * length + l];
      require(slot < 0, "scatter_tokens duplicate index");
      slot = static_cast<std::int32_t>(k);
    }
  std::vector<float> out(batch * length * d);
  auto sv = src.data();
  auto fv = fill.data();
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t l = 0; l < length; ++l) {
      const auto k = (*owner)[b * length + l];
      float* dst = out.data() + (b * length + l) * d;
      if (k < 0) {
        std::copy(fv.begin(), fv.end(), dst);
      } else {
        std::copy(sv.begin() + (b * per_sample + k) * d, sv.begin() + (b * per_sample + k + 1) * d,
                  dst);
      }
    }
  return make_result("scatter_tokens", {batch, length, d}, std::move(out), {src, fill},
                     [batch, per_sample, length, d, owner](Node& self) {
                       const bool gs = wants_grad(self, 0);
                       const bool gf = wants_grad(self, 1);
                       for (std::int64_t b = 0; b < batch; ++b)
                         for (std::int64_t l = 0; l < length; ++l) {
                           const auto k = (*owner)[b * length + l];
                           const float* g = self.grad.data() + (b * length + l) * d;
                           if (k < 0) {
                             if (!gf) continue;
                             auto& gfill = parent_grad(self, 1);
                             for (std::int64_t j = 0; j < d; ++j) gfill[j] += g[j];
                           } else if (gs) {
                             auto& gsrc = parent_grad(self, 0);
                             for (std::int64_t j = 0; j < d; ++j)
                               gsrc[(b * per_sample + k) * d + j] += g[j];
                           }
                         }
                     });
}

Tensor mean_tokens(const Tensor& x, std::int64_t begin) {
  require(x.rank() == 3, "mean_tokens expects [B, L, d], got " + shape_str(x.shape()));
  const auto batch = x.dim(0), len = x.dim(1), d = x.dim(2);
  require(begin >= 0 && begin < len, "mean_tokens has no tokens to average");
  const auto count = len - begin;
  std::vector<float> out(batch * d);
  auto xv = x.data();
  std::vector<double> acc(d);
  for (std::int64_t b = 0; b < batch; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::int64_t l = begin; l < len; ++l)
      for (std::int64_t j = 0; j < d; ++j) acc[j] += xv[(b * len + l) * d + j];
    for (std::int64_t j = 0; j < d; ++j) out[b * d + j] = static_cast<float>(acc[j] / count);
  }
  return make_result("mean_tokens", {batch, d}, std::move(out), {x},
                     [batch, len, d, begin, count](Node& self) {
                       if (!wants_grad(self, 0)) return;
                       auto& gx = parent_grad(self, 0);
                       const float inv = 1.0f / static_cast<float>(count);
                       for (std::int64_t b = 0; b < batch; ++b)
                         for (std::int64_t l = begin; l < len; ++l)
                           for (std::int64_t j = 0; j < d; ++j)
                             gx[(b * len + l) * d + j] += self.grad[b * d + j] * inv;
                     });
}

Tensor scale_samples(const Tensor& x, std::span<const float> scale) {
  require(x.rank() >= 1 && static_cast<std::int64_t>(scale.size()) == x.dim(0),
          "scale_samples needs one scale per sample");
  const auto batch = x.dim(0);
  const auto per = x.numel() / std::max<std::int64_t>(batch, 1);
  std::vector<float> s(scale.begin(), scale.end());
  std::vector<float> out(x.numel());
  auto xv = x.data();
  for (std::int64_t b = 0; b < batch; ++b)
    for (std::int64_t i = 0; i < per; ++i) out[b * per + i] = xv[b * per + i] * s[b];
  return make_result("scale_samples", x.shape(), std::move(out), {x},
                     [batch, per, s = std::move(s)](Node& self) {
                       if (!wants_grad(self, 0)) return;
                       auto& gx = parent_grad(self, 0);
                       for (std::int64_t b = 0; b < batch; ++b)
                         for (std::int64_t i = 0; i < per; ++i)
                           gx[b * per + i] += self.grad[b * per + i] * s[b];
                     });
}

}  // namespace pixtok::ops
