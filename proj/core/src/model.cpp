#include "pixtok/model.hpp"

#include <algorithm>
#include <cctype>

#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"

namespace pixtok {

std::string to_string(TokenizerMode mode) {
  switch (mode) {
    case TokenizerMode::kPixel: return "pixel";
    case TokenizerMode::kPatch: return "patch";
    case TokenizerMode::kPermutedPatch: return "permuted_patch";
  }
  return "?";
}

std::string to_string(HeadMode mode) { return mode == HeadMode::kCls ? "cls" : "gap"; }

TokenizerMode parse_tokenizer_mode(std::string_view text) {
  if (text == "pixel") return TokenizerMode::kPixel;
  if (text == "patch") return TokenizerMode::kPatch;
  if (text == "permuted_patch" || text == "permuted-patch") return TokenizerMode::kPermutedPatch;
  throw ConfigError("unknown tokenizer '" + std::string(text) +
                    "' (expected pixel, patch or permuted_patch)");
}

HeadMode parse_head_mode(std::string_view text) {
  if (text == "cls") return HeadMode::kCls;
  if (text == "gap") return HeadMode::kGap;
  throw ConfigError("unknown head mode '" + std::string(text) + "' (expected cls or gap)");
}

ModelConfig ModelConfig::preset(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  ModelConfig c;
  if (key == "t" || key == "tiny") {
    c.layers = 12, c.dim = 192, c.mlp_dim = 768, c.heads = 12;
  } else if (key == "s" || key == "small") {
    c.layers = 12, c.dim = 384, c.mlp_dim = 1536, c.heads = 12;
  } else if (key == "b" || key == "base") {
    c.layers = 12, c.dim = 768, c.mlp_dim = 3072, c.heads = 12;
  } else if (key == "l" || key == "large") {
    c.layers = 24, c.dim = 1024, c.mlp_dim = 4096, c.heads = 16;
  } else {
    throw ConfigError("unknown model preset '" + std::string(name) + "' (expected T, S, B or L)");
  }
  return c;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("model config: " + what); };
  if (layers < 0) fail("layers must be >= 0");
  if (dim < 1 || mlp_dim < 1 || heads < 1) fail("dim, mlp_dim and heads must be positive");
  if (dim % heads != 0) {
    fail("hidden dim " + std::to_string(dim) + " not divisible by heads " + std::to_string(heads));
  }
  if (image_size < 1) fail("image_size must be positive");
  if (num_classes < 1) fail("num_classes must be positive");
  if (drop_path_rate < 0.0f || drop_path_rate >= 1.0f) fail("drop_path_rate must be in [0, 1)");
  if (tokenizer != TokenizerMode::kPixel) {
    if (patch_size < 1 || image_size % patch_size != 0) {
      fail("patch size " + std::to_string(patch_size) + " does not divide image size " +
           std::to_string(image_size));
    }
  }
  if (tokenizer == TokenizerMode::kPermutedPatch) {
    if (!permutation) fail("permuted_patch tokenizer requires a permutation");
    if (permutation->height() != image_size || permutation->width() != image_size) {
      fail("permutation grid does not match image size");
    }
  }
  if (pe == PeMode::kSinCos2d && dim % 4 != 0) fail("sin-cos PE needs dim divisible by 4");
}

ParamBreakdown param_count(const ModelConfig& cfg) {
  const std::int64_t d = cfg.dim, m = cfg.mlp_dim, n = cfg.layers;
  const std::int64_t l = cfg.sequence_length();
  ParamBreakdown p;
  p.embedding = cfg.token_dim() * d + d + d;
  p.pe = cfg.pe == PeMode::kLearned ? (l + 1) * d : 0;
  const std::int64_t attn = (d * 3 * d + 3 * d) + (d * d + d);
  const std::int64_t mlp = (d * m + m) + (m * d + d);
  const std::int64_t norms = 4 * d;
  p.mlp = n * mlp;
  p.blocks = n * (attn + mlp + norms) + 2 * d;
  p.head = d * cfg.num_classes + cfg.num_classes;
  return p;
}

int parameter_depth(const std::string& name, int layers) {
  if (name.rfind("embed.", 0) == 0) return 0;
  if (name.rfind("blocks.", 0) == 0) {
    const auto dot = name.find('.', 7);
    return std::stoi(name.substr(7, dot - 7)) + 1;
  }
  return layers + 1;
}

EmbeddingParams make_embedding(const ModelConfig& cfg, const Initializer& init) {
  EmbeddingParams e;
  auto proj = Linear::create(init, "embed.proj", cfg.token_dim(), cfg.dim);
  e.proj_weight = proj.weight;
  e.proj_bias = proj.bias;
  e.cls = init.trunc_normal("embed.cls", {cfg.dim}, 0.02);
  PositionEmbeddingSpec spec;
  spec.mode = cfg.pe;
  spec.dim = cfg.dim;
  spec.grid_height = cfg.grid_side();
  spec.grid_width = cfg.grid_side();
  spec.includes_cls_slot = true;
  e.pe = PositionEmbedding::create(spec);
  if (e.pe.trainable()) init.trunc_normal_into("embed.pe", e.pe.table, 0.02);
  return e;
}

void collect_embedding(const EmbeddingParams& e, ParamList& out) {
  out.push_back({"embed.proj.weight", e.proj_weight});
  out.push_back({"embed.proj.bias", e.proj_bias});
  out.push_back({"embed.cls", e.cls});
  if (e.pe.trainable()) out.push_back({"embed.pe", e.pe.table});
}

std::vector<AttentionRecord> split_attention(const std::vector<std::vector<float>>& buffers,
                                             std::int64_t batch, int heads, std::int64_t length,
                                             const std::vector<GridCoord>& coords) {
  std::vector<AttentionRecord> records;
  records.reserve(buffers.size() * batch * heads);
  const auto area = length * length;
  for (std::size_t layer = 0; layer < buffers.size(); ++layer) {
    for (std::int64_t b = 0; b < batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        AttentionRecord r;
        r.layer = static_cast<int>(layer);
        r.head = h;
        r.sample = static_cast<int>(b);
        r.length = static_cast<int>(length);
        const auto offset = (b * heads + h) * area;
        r.weights.assign(buffers[layer].begin() + offset, buffers[layer].begin() + offset + area);
        r.query_coords = coords;
        r.key_coords = coords;
        records.push_back(std::move(r));
      }
    }
  }
  return records;
}

VisionTransformer::VisionTransformer(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Initializer init(seed);
  embedding_ = make_embedding(cfg_, init);
  encoder_ = Encoder::create(init, "", cfg_.layers, cfg_.dim, cfg_.mlp_dim, cfg_.heads,
                             cfg_.drop_path_rate);
  head_ = Linear::create(init, "head", cfg_.dim, cfg_.num_classes);
}

void VisionTransformer::reset_head(std::uint64_t seed) {
  head_ = Linear::create(Initializer(seed), "head", cfg_.dim, cfg_.num_classes);
}

RawTokens VisionTransformer::raw_tokens(std::span<const Image> images) const {
  for (const auto& img : images) {
    if (img.height != cfg_.image_size || img.width != cfg_.image_size) {
      throw ShapeError("model expects " + std::to_string(cfg_.image_size) + "x" +
                       std::to_string(cfg_.image_size) + " images, got " +
                       std::to_string(img.height) + "x" + std::to_string(img.width));
    }
  }
  if (cfg_.tokenizer == TokenizerMode::kPermutedPatch && !cfg_.permutation->is_identity()) {
    std::vector<Image> permuted;
    permuted.reserve(images.size());
    for (const auto& img : images) permuted.push_back(apply_permutation(img, *cfg_.permutation));
    return extract_patch_tokens(permuted, cfg_.patch_size);
  }
  return extract_patch_tokens(images, cfg_.effective_patch());
}

TokenSequence VisionTransformer::embed(std::span<const Image> images) const {
  return embed_tokens(raw_tokens(images), embedding_);
}

EncoderResult VisionTransformer::forward_encoder(const TokenSequence& x, ForwardContext& ctx,
                                                 bool record_attention) const {
  if (x.tokens.dim(-1) != cfg_.dim) {
    throw ShapeError("encoder expects token dim " + std::to_string(cfg_.dim) + ", got " +
                     std::to_string(x.tokens.dim(-1)));
  }
  std::vector<std::vector<float>> buffers;
  auto* saved = ctx.attention;
  if (record_attention) ctx.attention = &buffers;
  EncoderResult result;
  result.z = x;
  try {
    result.z.tokens = encoder_.forward(x.tokens, ctx);
  } catch (...) {
    ctx.attention = saved;
    throw;
  }
  ctx.attention = saved;
  if (record_attention) {
    result.records = split_attention(buffers, x.tokens.dim(0), cfg_.heads, x.tokens.dim(1),
                                     x.coords);
  }
  return result;
}

Tensor VisionTransformer::classify(const Tensor& z) const {
  Tensor pooled = cfg_.head == HeadMode::kGap
                      ? ops::mean_tokens(z, 1)
                      : ops::reshape(ops::slice_tokens(z, 0, 1), {z.dim(0), z.dim(2)});
  return head_(pooled);
}

Tensor VisionTransformer::forward_classifier(std::span<const Image> images,
                                             ForwardContext& ctx) const {
  auto z = forward_encoder(embed(images), ctx).z;
  return classify(z.tokens);
}

ParamList VisionTransformer::parameters() const {
  ParamList out;
  collect_embedding(embedding_, out);
  encoder_.collect(out, "");
  head_.collect(out, "head");
  return out;
}

}  // namespace pixtok
