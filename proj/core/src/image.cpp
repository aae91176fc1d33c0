#include "pixtok/image.hpp"

#include <algorithm>
#include <cmath>

#include "pixtok/error.hpp"

namespace pixtok {

Normalization Normalization::cifar100() {
  Normalization n;
  n.mean = {0.5071f * 255.0f, 0.4865f * 255.0f, 0.4409f * 255.0f};
  n.stddev = {0.2673f * 255.0f, 0.2564f * 255.0f, 0.2762f * 255.0f};
  return n;
}

Image::Image(int h, int w, PixelRange r) : height(h), width(w), range(r) {
  if (h < 1 || w < 1) {
    throw ShapeError("image dimensions must be positive, got " + std::to_string(h) + "x" +
                     std::to_string(w));
  }
  values.assign(static_cast<std::size_t>(h) * w * kChannels, 0.0f);
}

Image Image::from_bytes(int h, int w, const std::uint8_t* hwc) {
  Image img(h, w);
  std::transform(hwc, hwc + img.values.size(), img.values.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  return img;
}

Image normalize(const Image& raw, const Normalization& stats) {
  if (raw.range != PixelRange::kRaw) throw ConfigError("normalize() expects a raw image");
  Image out = raw;
  out.range = PixelRange::kNormalized;
  out.normalization = stats;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto c = i % Image::kChannels;
    out.values[i] = (raw.values[i] - stats.mean[c]) / stats.stddev[c];
  }
  return out;
}

Image denormalize(const Image& normalized) {
  if (normalized.range != PixelRange::kNormalized) {
    throw ConfigError("denormalize() expects a normalized image");
  }
  Image out = normalized;
  out.range = PixelRange::kRaw;
  const auto& stats = normalized.normalization;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const auto c = i % Image::kChannels;
    out.values[i] = normalized.values[i] * stats.stddev[c] + stats.mean[c];
  }
  return out;
}

Image resize_bilinear(const Image& img, int height, int width) {
  if (height == img.height && width == img.width) return img;
  Image out(height, width, img.range);
  out.normalization = img.normalization;
  const double sy = static_cast<double>(img.height) / height;
  const double sx = static_cast<double>(img.width) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        const double top = img.at(y0, x0, ch) * (1 - wx) + img.at(y0, x1, ch) * wx;
        const double bottom = img.at(y1, x0, ch) * (1 - wx) + img.at(y1, x1, ch) * wx;
        out.at(r, c, ch) = static_cast<float>(top * (1 - wy) + bottom * wy);
      }
    }
  }
  return out;
}

}  // namespace pixtok
