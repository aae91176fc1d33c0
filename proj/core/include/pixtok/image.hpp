#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace pixtok {

enum class PixelRange { kRaw, kNormalized };

// Per-channel statistics in raw [0, 255] units.
struct Normalization {
  std::array<float, 3> mean{127.5f, 127.5f, 127.5f};
  std::array<float, 3> stddev{63.75f, 63.75f, 63.75f};

  static Normalization cifar100();
  bool operator==(const Normalization&) const = default;
};

// H x W x 3 image, channels interleaved, row-major. Raw images hold values in
// [0, 255]; normalized images carry the statistics used to produce them.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> values;
  PixelRange range = PixelRange::kRaw;
  Normalization normalization{};

  Image() = default;
  Image(int h, int w, PixelRange r = PixelRange::kRaw);

  static constexpr int kChannels = 3;
  int pixels() const { return height * width; }
  float& at(int row, int col, int ch) { return values[(row * width + col) * kChannels + ch]; }
  float at(int row, int col, int ch) const { return values[(row * width + col) * kChannels + ch]; }

  static Image from_bytes(int h, int w, const std::uint8_t* hwc);
};

// (x - mean) / stddev per channel with statistics in raw units; the same as
// scaling to [0, 1] first and using unit-range statistics.
Image normalize(const Image& raw, const Normalization& stats);
Image denormalize(const Image& normalized);

// Bilinear resample (align_corners = false).
Image resize_bilinear(const Image& img, int height, int width);

}  // namespace pixtok
