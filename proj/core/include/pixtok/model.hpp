#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pixtok/image.hpp"
#include "pixtok/nn.hpp"
#include "pixtok/permutation.hpp"
#include "pixtok/position_embedding.hpp"
#include "pixtok/tokenization.hpp"

namespace pixtok {

enum class TokenizerMode { kPixel, kPatch, kPermutedPatch };
enum class HeadMode { kCls, kGap };

std::string to_string(TokenizerMode mode);
std::string to_string(HeadMode mode);
TokenizerMode parse_tokenizer_mode(std::string_view text);
HeadMode parse_head_mode(std::string_view text);

struct ModelConfig {
  int layers = 12;
  int dim = 192;
  int mlp_dim = 768;
  int heads = 12;
  TokenizerMode tokenizer = TokenizerMode::kPixel;
  int patch_size = 1;  // forced to 1 for pixel tokens
  // Shared pixel permutation for kPermutedPatch; applied before patchifying.
  std::optional<PermutationMap> permutation;
  PeMode pe = PeMode::kLearned;
  HeadMode head = HeadMode::kGap;
  float drop_path_rate = 0.0f;
  int image_size = 32;  // square inputs
  int num_classes = 100;

  // Size variants: "T", "S", "B", "L" (or tiny/small/base/large).
  static ModelConfig preset(std::string_view name);

  // Throws ConfigError on an inconsistent configuration.
  void validate() const;
  int effective_patch() const { return tokenizer == TokenizerMode::kPixel ? 1 : patch_size; }
  int grid_side() const { return image_size / effective_patch(); }
  int sequence_length() const { return grid_side() * grid_side(); }
  int token_dim() const { return Image::kChannels * effective_patch() * effective_patch(); }

  bool operator==(const ModelConfig&) const = default;
};

struct ParamBreakdown {
  std::int64_t embedding = 0;  // token projection + cls
  std::int64_t pe = 0;         // learned position embedding (0 otherwise)
  std::int64_t blocks = 0;     // encoder blocks + final norm
  std::int64_t head = 0;       // classification head
  std::int64_t mlp = 0;        // MLP share of `blocks`

  std::int64_t total() const { return embedding + pe + blocks + head; }
  // Size-variant convention: everything except the resolution-dependent PE.
  std::int64_t total_excluding_pe() const { return embedding + blocks + head; }
};

ParamBreakdown param_count(const ModelConfig& cfg);

// Post-softmax attention of one head for one sample. weights is L' x L'
// (L' includes the cls slot); coordinates follow the token order, with the
// sentinel for cls.
struct AttentionRecord {
  int layer = 0;
  int head = 0;
  int sample = 0;
  int length = 0;
  std::vector<float> weights;
  std::vector<GridCoord> query_coords;
  std::vector<GridCoord> key_coords;

  float weight(int q, int k) const { return weights[static_cast<std::size_t>(q) * length + k]; }
};

struct EncoderResult {
  TokenSequence z;
  std::vector<AttentionRecord> records;  // ordered by (layer, sample, head)
};

// Depth used for layer-wise learning-rate decay: 0 for the embedding, i + 1
// for block i, layers + 1 for everything after the encoder stack.
int parameter_depth(const std::string& name, int layers);

// Pre-norm Transformer classifier over pixel, patch or permuted-patch tokens.
// A cls token is always prepended and attends in every layer; GAP pooling
// excludes it.
class VisionTransformer {
 public:
  VisionTransformer(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // Applies the shared permutation (if any) and extracts raw tokens.
  RawTokens raw_tokens(std::span<const Image> images) const;
  TokenSequence embed(std::span<const Image> images) const;

  EncoderResult forward_encoder(const TokenSequence& x, ForwardContext& ctx,
                                bool record_attention = false) const;
  // Logits [B, C].
  Tensor forward_classifier(std::span<const Image> images, ForwardContext& ctx) const;
  Tensor classify(const Tensor& z) const;

  ParamList parameters() const;
  EmbeddingParams& embedding() { return embedding_; }
  const EmbeddingParams& embedding() const { return embedding_; }
  Encoder& encoder() { return encoder_; }
  const Encoder& encoder() const { return encoder_; }
  Linear& head() { return head_; }

  // Re-initialises the classification head (fine-tuning).
  void reset_head(std::uint64_t seed);

 private:
  ModelConfig cfg_;
  EmbeddingParams embedding_;
  Encoder encoder_;
  Linear head_;
};

// Shared by the classifier and the masked autoencoder.
EmbeddingParams make_embedding(const ModelConfig& cfg, const Initializer& init);
void collect_embedding(const EmbeddingParams& e, ParamList& out);
std::vector<AttentionRecord> split_attention(const std::vector<std::vector<float>>& buffers,
                                             std::int64_t batch, int heads, std::int64_t length,
                                             const std::vector<GridCoord>& coords);

}  // namespace pixtok
