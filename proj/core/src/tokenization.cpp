#include "pixtok/tokenization.hpp"

#include <algorithm>

#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"

namespace pixtok {

namespace {

void check_batch(std::span<const Image> images) {
  if (images.empty()) throw ShapeError("tokenization of an empty batch");
  for (const auto& img : images) {
    if (img.height != images[0].height || img.width != images[0].width) {
      throw ShapeError("images in a batch must share one size");
    }
  }
}

}  // namespace

RawTokens extract_pixel_tokens(std::span<const Image> images) {
  return extract_patch_tokens(images, 1);
}

RawTokens extract_patch_tokens(std::span<const Image> images, int patch_size) {
  check_batch(images);
  const int h = images[0].height, w = images[0].width, p = patch_size;
  if (p < 1 || h % p != 0 || w % p != 0) {
    throw ShapeError("patch size " + std::to_string(p) + " does not divide image " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  RawTokens raw;
  raw.batch = static_cast<std::int64_t>(images.size());
  raw.grid_height = h / p;
  raw.grid_width = w / p;
  raw.length = static_cast<std::int64_t>(raw.grid_height) * raw.grid_width;
  raw.token_dim = static_cast<std::int64_t>(Image::kChannels) * p * p;
  raw.values.resize(raw.batch * raw.length * raw.token_dim);
  raw.coords.resize(raw.length);
  const double centre = (p - 1) / 2.0;
  for (int gr = 0; gr < raw.grid_height; ++gr)
    for (int gc = 0; gc < raw.grid_width; ++gc)
      raw.coords[gr * raw.grid_width + gc] = {gr * p + centre, gc * p + centre};

  for (std::int64_t b = 0; b < raw.batch; ++b) {
    const auto& img = images[b];
    float* dst = raw.values.data() + b * raw.length * raw.token_dim;
    for (int gr = 0; gr < raw.grid_height; ++gr) {
      for (int gc = 0; gc < raw.grid_width; ++gc) {
        for (int r = 0; r < p; ++r) {
          const float* src = img.values.data() +
                             ((gr * p + r) * w + gc * p) * Image::kChannels;
          dst = std::copy(src, src + p * Image::kChannels, dst);
        }
      }
    }
  }
  return raw;
}

Tensor raw_tokens_tensor(const RawTokens& raw) {
  return Tensor::from({raw.batch, raw.length, raw.token_dim}, raw.values);
}

TokenSequence embed_tokens(const RawTokens& raw, const EmbeddingParams& params) {
  if (params.proj_weight.dim(0) != raw.token_dim) {
    throw ShapeError("token projection expects " + std::to_string(params.proj_weight.dim(0)) +
                     " inputs, tokens have " + std::to_string(raw.token_dim));
  }
  Tensor x = ops::linear(raw_tokens_tensor(raw), params.proj_weight, params.proj_bias);
  x = ops::prepend_token(x, params.cls);
  if (params.pe.active()) {
    if (params.pe.spec.rows() != x.dim(1)) {
      throw ShapeError("position embedding has " + std::to_string(params.pe.spec.rows()) +
                       " rows for a sequence of " + std::to_string(x.dim(1)));
    }
    x = ops::add(x, params.pe.table);
  }
  TokenSequence seq;
  seq.tokens = std::move(x);
  seq.has_cls = true;
  seq.grid_height = raw.grid_height;
  seq.grid_width = raw.grid_width;
  seq.coords.reserve(raw.length + 1);
  seq.coords.push_back(GridCoord{});
  seq.coords.insert(seq.coords.end(), raw.coords.begin(), raw.coords.end());
  return seq;
}

TokenSequence pixel_tokenize(std::span<const Image> images, const EmbeddingParams& params) {
  return embed_tokens(extract_pixel_tokens(images), params);
}

TokenSequence patchify(std::span<const Image> images, int patch_size,
                       const EmbeddingParams& params) {
  return embed_tokens(extract_patch_tokens(images, patch_size), params);
}

}  // namespace pixtok
