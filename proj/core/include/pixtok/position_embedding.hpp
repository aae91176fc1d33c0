#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pixtok/tensor.hpp"

namespace pixtok {

enum class PeMode { kLearned, kSinCos2d, kNone };

std::string to_string(PeMode mode);
PeMode parse_pe_mode(std::string_view text);

struct PositionEmbeddingSpec {
  PeMode mode = PeMode::kLearned;
  int dim = 0;
  int grid_height = 0;
  int grid_width = 0;
  bool includes_cls_slot = true;

  int rows() const { return grid_height * grid_width + (includes_cls_slot ? 1 : 0); }
};

// 2D sin-cos table [gh * gw, d]: the first d/2 columns encode the row index,
// the last d/2 the column index, each as [sin(pos w_k), cos(pos w_k)] with
// w_k = 10000^(-k / (d/4)). Requires d % 4 == 0.
std::vector<float> sincos2d(int grid_height, int grid_width, int dim);

// The position embedding added to a token sequence. Learned mode holds a
// trainable [rows, d] tensor; sin-cos holds a constant table whose cls row is
// zero; none holds nothing.
struct PositionEmbedding {
  PositionEmbeddingSpec spec;
  Tensor table;  // undefined for kNone

  static PositionEmbedding create(const PositionEmbeddingSpec& spec);
  bool trainable() const { return spec.mode == PeMode::kLearned; }
  bool active() const { return spec.mode != PeMode::kNone; }
};

}  // namespace pixtok
