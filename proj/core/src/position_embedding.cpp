#include "pixtok/position_embedding.hpp"

#include <cmath>

#include "pixtok/error.hpp"

namespace pixtok {

std::string to_string(PeMode mode) {
  switch (mode) {
    case PeMode::kLearned: return "learned";
    case PeMode::kSinCos2d: return "sincos";
    case PeMode::kNone: return "none";
  }
  return "?";
}

PeMode parse_pe_mode(std::string_view text) {
  if (text == "learned") return PeMode::kLearned;
  if (text == "sincos" || text == "sincos2d" || text == "sin-cos") return PeMode::kSinCos2d;
  if (text == "none") return PeMode::kNone;
  throw ConfigError("unknown position embedding mode '" + std::string(text) +
                    "' (expected learned, sincos or none)");
}

std::vector<float> sincos2d(int grid_height, int grid_width, int dim) {
  if (dim % 4 != 0) {
    throw ConfigError("sin-cos position embedding needs dim divisible by 4, got " +
                      std::to_string(dim));
  }
  const int quarter = dim / 4;
  std::vector<float> table(static_cast<std::size_t>(grid_height) * grid_width * dim);
  std::vector<double> omega(quarter);
  for (int k = 0; k < quarter; ++k) omega[k] = std::pow(10000.0, -static_cast<double>(k) / quarter);
  for (int r = 0; r < grid_height; ++r) {
    for (int c = 0; c < grid_width; ++c) {
      float* row = table.data() + (static_cast<std::size_t>(r) * grid_width + c) * dim;
      for (int k = 0; k < quarter; ++k) {
        row[k] = static_cast<float>(std::sin(r * omega[k]));
        row[quarter + k] = static_cast<float>(std::cos(r * omega[k]));
        row[2 * quarter + k] = static_cast<float>(std::sin(c * omega[k]));
        row[3 * quarter + k] = static_cast<float>(std::cos(c * omega[k]));
      }
    }
  }
  return table;
}

PositionEmbedding PositionEmbedding::create(const PositionEmbeddingSpec& spec) {
  PositionEmbedding pe;
  pe.spec = spec;
  const std::int64_t rows = spec.rows();
  switch (spec.mode) {
    case PeMode::kNone:
      break;
    case PeMode::kLearned:
      pe.table = Tensor::zeros({rows, spec.dim}, true);
      break;
    case PeMode::kSinCos2d: {
      auto grid = sincos2d(spec.grid_height, spec.grid_width, spec.dim);
      if (spec.includes_cls_slot) grid.insert(grid.begin(), spec.dim, 0.0f);
      pe.table = Tensor::from({rows, spec.dim}, std::move(grid));
      break;
    }
  }
  return pe;
}

}  // namespace pixtok
