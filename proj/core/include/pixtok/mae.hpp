#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pixtok/model.hpp"

namespace pixtok {

struct MaeConfig {
  double mask_ratio = 0.75;
  int decoder_layers = 4;
  int decoder_dim = 0;    // 0 -> encoder dim / 2
  int decoder_heads = 8;
  std::uint64_t seed = 0;

  // Decoder sizing used for the CIFAR-scale recipe: 4 layers, d/2 wide,
  // 8 heads for T-sized encoders and 12 otherwise.
  static MaeConfig defaults_for(const ModelConfig& encoder);
  int resolved_decoder_dim(const ModelConfig& encoder) const {
    return decoder_dim > 0 ? decoder_dim : encoder.dim / 2;
  }
  void validate(const ModelConfig& encoder) const;
  bool operator==(const MaeConfig&) const = default;
};

// Encoder sees ceil((1 - ratio) * L) tokens, clamped so at least one token is
// visible and at least one is masked.
int mae_visible_count(int length, double mask_ratio);

struct MaskSplit {
  std::vector<std::int32_t> visible;  // sorted
  std::vector<std::int32_t> masked;   // sorted
};

// Uniformly random split of [0, L).
MaskSplit mae_mask(int length, double mask_ratio, Rng& rng);

struct MaeOutput {
  Tensor loss;            // scalar, masked-pixel MSE
  Tensor reconstruction;  // [B, L, token_dim] predicted normalized pixels
  Tensor target;          // [B, L, token_dim]
  std::vector<MaskSplit> masks;
  std::int64_t encoder_length = 0;  // visible tokens + cls
};

// Masked autoencoder: the encoder (same parameter names as the classifier's)
// runs on visible tokens only; a narrower decoder sees every position, with a
// shared learnable mask token at masked slots plus its own learned PE, and
// regresses the raw normalized pixel values of each token.
class MaskedAutoencoder {
 public:
  MaskedAutoencoder(ModelConfig encoder_cfg, MaeConfig mae_cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const MaeConfig& mae_config() const { return mae_; }

  // `mask_rng` draws one split per sample.
  MaeOutput forward(std::span<const Image> images, ForwardContext& ctx, Rng& mask_rng) const;

  ParamList parameters() const;
  ParamList encoder_parameters() const;

 private:
  ModelConfig cfg_;
  MaeConfig mae_;
  EmbeddingParams embedding_;
  Encoder encoder_;
  Linear decoder_embed_;
  Tensor mask_token_;
  Tensor decoder_pe_;
  Encoder decoder_;
  Linear decoder_pred_;
};

}  // namespace pixtok
