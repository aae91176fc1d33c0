#include "pixtok/mae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"

namespace pixtok {

MaeConfig MaeConfig::defaults_for(const ModelConfig& encoder) {
  MaeConfig m;
  m.decoder_layers = 4;
  m.decoder_dim = encoder.dim / 2;
  m.decoder_heads = encoder.dim <= 192 ? 8 : 12;
  return m;
}

void MaeConfig::validate(const ModelConfig& encoder) const {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) {
    throw ConfigError("mae mask_ratio must be in (0, 1), got " + std::to_string(mask_ratio));
  }
  const int dd = resolved_decoder_dim(encoder);
  if (decoder_layers < 0 || dd < 1 || decoder_heads < 1 || dd % decoder_heads != 0) {
    throw ConfigError("mae decoder dim " + std::to_string(dd) + " not divisible by heads " +
                      std::to_string(decoder_heads));
  }
}

int mae_visible_count(int length, double mask_ratio) {
  if (length < 2) throw ConfigError("masking needs at least 2 tokens");
  // Guard against (1 - r) * L landing a hair above an integer.
  const double keep = (1.0 - mask_ratio) * length;
  int visible = static_cast<int>(std::ceil(keep - 1e-9));
  return std::clamp(visible, 1, length - 1);
}

MaskSplit mae_mask(int length, double mask_ratio, Rng& rng) {
  const int visible = mae_visible_count(length, mask_ratio);
  std::vector<std::int32_t> order(length);
  std::iota(order.begin(), order.end(), 0);
  // Fisher-Yates with our own index draw so the split is library independent.
  for (int i = length - 1; i > 0; --i) {
    std::swap(order[i], order[uniform_index(rng, static_cast<std::uint64_t>(i) + 1)]);
  }
  MaskSplit split;
  split.visible.assign(order.begin(), order.begin() + visible);
  split.masked.assign(order.begin() + visible, order.end());
  std::sort(split.visible.begin(), split.visible.end());
  std::sort(split.masked.begin(), split.masked.end());
  return split;
}

MaskedAutoencoder::MaskedAutoencoder(ModelConfig encoder_cfg, MaeConfig mae_cfg,
                                     std::uint64_t seed)
    : cfg_(std::move(encoder_cfg)), mae_(mae_cfg) {
  cfg_.validate();
  mae_.validate(cfg_);
  Initializer init(seed);
  embedding_ = make_embedding(cfg_, init);
  encoder_ = Encoder::create(init, "", cfg_.layers, cfg_.dim, cfg_.mlp_dim, cfg_.heads,
                             cfg_.drop_path_rate);
  const int dd = mae_.resolved_decoder_dim(cfg_);
  decoder_embed_ = Linear::create(init, "decoder.embed", cfg_.dim, dd);
  mask_token_ = init.trunc_normal("decoder.mask_token", {dd}, 0.02);
  decoder_pe_ = init.trunc_normal("decoder.pe", {cfg_.sequence_length() + 1, dd}, 0.02);
  decoder_ = Encoder::create(init, "decoder.", mae_.decoder_layers, dd, 4 * dd,
                             mae_.decoder_heads, 0.0f);
  decoder_pred_ = Linear::create(init, "decoder.pred", dd, cfg_.token_dim());
}

MaeOutput MaskedAutoencoder::forward(std::span<const Image> images, ForwardContext& ctx,
                                     Rng& mask_rng) const {
  for (const auto& img : images) {
    if (img.height != cfg_.image_size || img.width != cfg_.image_size) {
      throw ShapeError("model expects " + std::to_string(cfg_.image_size) + "px images");
    }
  }
  RawTokens raw;
  if (cfg_.tokenizer == TokenizerMode::kPermutedPatch && !cfg_.permutation->is_identity()) {
    std::vector<Image> permuted;
    for (const auto& img : images) permuted.push_back(apply_permutation(img, *cfg_.permutation));
    raw = extract_patch_tokens(permuted, cfg_.patch_size);
  } else {
    raw = extract_patch_tokens(images, cfg_.effective_patch());
  }
  const auto batch = raw.batch, len = raw.length, tdim = raw.token_dim;

  MaeOutput out;
  out.target = raw_tokens_tensor(raw);
  const int visible = mae_visible_count(static_cast<int>(len), mae_.mask_ratio);
  std::vector<std::int32_t> vis_index;
  vis_index.reserve(batch * visible);
  std::vector<std::uint8_t> element_mask(batch * len * tdim, 0);
  for (std::int64_t b = 0; b < batch; ++b) {
    auto split = mae_mask(static_cast<int>(len), mae_.mask_ratio, mask_rng);
    vis_index.insert(vis_index.end(), split.visible.begin(), split.visible.end());
    for (auto m : split.masked) {
      std::fill_n(element_mask.begin() + (b * len + m) * tdim, tdim, std::uint8_t{1});
    }
    out.masks.push_back(std::move(split));
  }

  Tensor x = ops::linear(out.target, embedding_.proj_weight, embedding_.proj_bias);
  Tensor cls = embedding_.cls;
  if (embedding_.pe.active()) {
    x = ops::add(x, ops::slice_tokens(embedding_.pe.table, 1, len + 1));
    cls = ops::add(cls, ops::reshape(ops::slice_tokens(embedding_.pe.table, 0, 1), {cfg_.dim}));
  }
  x = ops::prepend_token(ops::gather_tokens(x, vis_index, visible), cls);
  out.encoder_length = x.dim(1);
  Tensor z = encoder_.forward(x, ctx);

  Tensor y = decoder_embed_(z);
  Tensor full = ops::scatter_tokens(ops::slice_tokens(y, 1, visible + 1), mask_token_, vis_index,
                                    len);
  full = ops::concat_tokens(ops::slice_tokens(y, 0, 1), full);
  full = ops::add(full, decoder_pe_);
  ForwardContext dec_ctx{ctx.training, ctx.rng, nullptr};
  Tensor pred = decoder_pred_(decoder_.forward(full, dec_ctx));
  out.reconstruction = ops::slice_tokens(pred, 1, len + 1);
  out.loss = ops::mse_masked(out.reconstruction, out.target, element_mask);
  return out;
}

ParamList MaskedAutoencoder::encoder_parameters() const {
  ParamList out;
  collect_embedding(embedding_, out);
  encoder_.collect(out, "");
  return out;
}

ParamList MaskedAutoencoder::parameters() const {
  ParamList out = encoder_parameters();
  decoder_embed_.collect(out, "decoder.embed");
  out.push_back({"decoder.mask_token", mask_token_});
  out.push_back({"decoder.pe", decoder_pe_});
  decoder_.collect(out, "decoder.");
  decoder_pred_.collect(out, "decoder.pred");
  return out;
}

}  // namespace pixtok
