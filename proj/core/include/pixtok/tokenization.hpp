#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pixtok/image.hpp"
#include "pixtok/permutation.hpp"
#include "pixtok/position_embedding.hpp"
#include "pixtok/tensor.hpp"

namespace pixtok {

// Source centre of a token in pixel units; cls uses the sentinel.
struct GridCoord {
  double row = -1.0;
  double col = -1.0;
  bool valid() const { return row >= 0.0 && col >= 0.0; }
  bool operator==(const GridCoord&) const = default;
};

// Raw (pre-projection) token contents for a batch: values is [B, L, token_dim].
struct RawTokens {
  std::int64_t batch = 0;
  std::int64_t length = 0;
  std::int64_t token_dim = 0;
  int grid_height = 0;
  int grid_width = 0;
  std::vector<float> values;
  std::vector<GridCoord> coords;  // L entries, shared across the batch
};

// Each pixel is one token of 3 values, raster order.
RawTokens extract_pixel_tokens(std::span<const Image> images);

// Non-overlapping p x p patches in raster order; each token is the patch
// flattened row-major within the patch with channels last (3 p^2 values).
// Throws ShapeError unless p divides H and W.
RawTokens extract_patch_tokens(std::span<const Image> images, int patch_size);

// Learnable pieces of the token embedding.
struct EmbeddingParams {
  Tensor proj_weight;  // [token_dim, d]
  Tensor proj_bias;    // [d]
  Tensor cls;          // [d]
  PositionEmbedding pe;
};

// Activations [B, L(+1), d] plus per-token coordinates. When has_cls is true
// coords[0] is the sentinel.
struct TokenSequence {
  Tensor tokens;
  std::vector<GridCoord> coords;
  bool has_cls = false;
  int grid_height = 0;
  int grid_width = 0;

  std::int64_t length() const { return tokens.dim(1); }
};

// X = [cls, f(t_1), ..., f(t_L)] + PE for already-extracted raw tokens.
TokenSequence embed_tokens(const RawTokens& raw, const EmbeddingParams& params);

TokenSequence pixel_tokenize(std::span<const Image> images, const EmbeddingParams& params);
TokenSequence patchify(std::span<const Image> images, int patch_size, const EmbeddingParams& params);

// Turns a RawTokens value into a [B, L, token_dim] tensor (no grad).
Tensor raw_tokens_tensor(const RawTokens& raw);

}  // namespace pixtok
