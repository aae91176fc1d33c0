#include <algorithm>
#include <cmath>

#include "pixtok/dataset.hpp"
#include "pixtok/error.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {

std::string to_string(SyntheticKind kind) {
  return kind == SyntheticKind::kQuadrant ? "quadrant" : "color";
}

SyntheticKind parse_synthetic_kind(std::string_view text) {
  if (text == "quadrant") return SyntheticKind::kQuadrant;
  if (text == "color" || text == "colour") return SyntheticKind::kColor;
  throw ConfigError("unknown synthetic dataset kind '" + std::string(text) + "'");
}

int quadrant_class(int row, int col, int height, int width) {
  return (row >= height / 2 ? 2 : 0) + (col >= width / 2 ? 1 : 0);
}

int synthetic_classes(SyntheticKind kind) { return kind == SyntheticKind::kQuadrant ? 4 : 3; }

void draw_blob(Image& img, int row, int col, int blob, float value) {
  for (int r = row; r < std::min(row + blob, img.height); ++r)
    for (int c = col; c < std::min(col + blob, img.width); ++c)
      for (int ch = 0; ch < Image::kChannels; ++ch) img.at(r, c, ch) = value;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

void quadrant_image(std::uint8_t* out, int side, int label, Rng& rng) {
  const int half = side / 2;
  const int blob = std::max(2, side / 8);
  for (int i = 0; i < side * side * 3; ++i) out[i] = to_byte(60.0 * uniform01(rng));
  const int span = half - blob + 1;
  const int row = (label / 2) * half + static_cast<int>(uniform_index(rng, span));
  const int col = (label % 2) * half + static_cast<int>(uniform_index(rng, span));
  const auto value = to_byte(200.0 + 55.0 * uniform01(rng));
  for (int r = row; r < row + blob; ++r)
    for (int c = col; c < col + blob; ++c)
      for (int ch = 0; ch < 3; ++ch) out[(r * side + c) * 3 + ch] = value;
}

void color_image(std::uint8_t* out, int side, int label, Rng& rng) {
  std::array<double, 3> base{};
  for (int c = 0; c < 3; ++c) {
    base[c] = c == label ? 150.0 + 80.0 * uniform01(rng) : 30.0 + 90.0 * uniform01(rng);
  }
  for (int p = 0; p < side * side; ++p)
    for (int c = 0; c < 3; ++c) out[p * 3 + c] = to_byte(base[c] + 40.0 * (uniform01(rng) - 0.5));
}

}  // namespace

Dataset synthetic_dataset(SyntheticKind kind, int count, std::uint64_t seed, int image_size) {
  if (count < 0) throw ConfigError("synthetic dataset count must be >= 0");
  if (image_size < 4 || image_size % 2 != 0) {
    throw ConfigError("synthetic image size must be even and >= 4");
  }
  Dataset data;
  data.height = data.width = image_size;
  data.num_classes = synthetic_classes(kind);
  data.pixels.resize(static_cast<std::size_t>(count) * data.image_bytes());
  data.labels.resize(static_cast<std::size_t>(count));
  const auto kind_id = hash_name(to_string(kind));
  for (int i = 0; i < count; ++i) {
    auto rng = make_rng(seed, {kind_id, static_cast<std::uint64_t>(i)});
    const int label = static_cast<int>(uniform_index(rng, data.num_classes));
    std::uint8_t* dst = data.pixels.data() + static_cast<std::size_t>(i) * data.image_bytes();
    if (kind == SyntheticKind::kQuadrant) {
      quadrant_image(dst, image_size, label, rng);
    } else {
      color_image(dst, image_size, label, rng);
    }
    data.labels[i] = label;
  }
  return data;
}

}  // namespace pixtok
