#include "pixtok/augment.hpp"

#include <algorithm>
#include <cmath>

#include "pixtok/error.hpp"

namespace pixtok {

namespace {

constexpr float kFill = 128.0f;

// Nearest-neighbour resample where `src_of(r, c)` maps an output pixel to
// source coordinates; out-of-range sources take the fill value.
template <typename F>
Image remap(const Image& img, F src_of) {
  Image out(img.height, img.width, img.range);
  out.normalization = img.normalization;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const auto [sr, sc] = src_of(r, c);
      const bool inside = sr >= 0 && sr < img.height && sc >= 0 && sc < img.width;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        out.at(r, c, ch) = inside ? img.at(sr, sc, ch) : kFill;
      }
    }
  }
  return out;
}

float clamp_pixel(double v) { return static_cast<float>(std::clamp(v, 0.0, 255.0)); }

}  // namespace

AugmentationConfig AugmentationConfig::crop_flip() {
  AugmentationConfig cfg;
  cfg.random_crop = true;
  cfg.crop_padding = 4;
  cfg.hflip_prob = 0.5;
  return cfg;
}

Image hflip(const Image& img) {
  Image out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < Image::kChannels; ++ch)
        out.at(r, c, ch) = img.at(r, img.width - 1 - c, ch);
  return out;
}

Image pad_crop(const Image& img, int padding, int top, int left) {
  if (padding < 0 || top < 0 || left < 0 || top > 2 * padding || left > 2 * padding) {
    throw ConfigError("crop offset outside the padded image");
  }
  Image out = img;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const int sr = r + top - padding;
      const int sc = c + left - padding;
      const bool inside = sr >= 0 && sr < img.height && sc >= 0 && sc < img.width;
      for (int ch = 0; ch < Image::kChannels; ++ch) {
        out.at(r, c, ch) = inside ? img.at(sr, sc, ch) : 0.0f;
      }
    }
  }
  return out;
}

Image basic_augment(const Image& img, const AugmentationConfig& cfg, Rng& rng) {
  Image out = img;
  if (cfg.random_crop) {
    const auto span = static_cast<std::uint64_t>(2 * cfg.crop_padding + 1);
    const int top = static_cast<int>(uniform_index(rng, span));
    const int left = static_cast<int>(uniform_index(rng, span));
    out = pad_crop(out, cfg.crop_padding, top, left);
  }
  if (cfg.hflip_prob > 0.0 && uniform01(rng) < cfg.hflip_prob) out = hflip(out);
  if (cfg.randaug) {
    out = rand_augment(out, cfg.randaug_ops, cfg.randaug_magnitude, cfg.randaug_magnitude_std, rng);
  }
  return out;
}

Image apply_randaug_op(const Image& img, RandAugOp op, double magnitude, bool negate) {
  const double level = std::clamp(magnitude, 0.0, 10.0) / 10.0;
  const double sign = negate ? -1.0 : 1.0;
  switch (op) {
    case RandAugOp::kTranslateX: {
      const int shift = static_cast<int>(std::lround(sign * level * 0.45 * img.width));
      return remap(img, [&](int r, int c) { return std::pair{r, c - shift}; });
    }
    case RandAugOp::kTranslateY: {
      const int shift = static_cast<int>(std::lround(sign * level * 0.45 * img.height));
      return remap(img, [&](int r, int c) { return std::pair{r - shift, c}; });
    }
    case RandAugOp::kShearX: {
      const double k = sign * level * 0.3;
      const double cy = (img.height - 1) / 2.0;
      return remap(img, [&](int r, int c) {
        return std::pair{r, static_cast<int>(std::lround(c + k * (r - cy)))};
      });
    }
    case RandAugOp::kShearY: {
      const double k = sign * level * 0.3;
      const double cx = (img.width - 1) / 2.0;
      return remap(img, [&](int r, int c) {
        return std::pair{static_cast<int>(std::lround(r + k * (c - cx))), c};
      });
    }
    case RandAugOp::kBrightness: {
      const double f = 1.0 + sign * level * 0.9;
      Image out = img;
      for (auto& v : out.values) v = clamp_pixel(v * f);
      return out;
    }
    case RandAugOp::kContrast: {
      const double f = 1.0 + sign * level * 0.9;
      double gray = 0.0;
      for (int p = 0; p < img.pixels(); ++p) {
        gray += 0.299 * img.values[p * 3] + 0.587 * img.values[p * 3 + 1] +
                0.114 * img.values[p * 3 + 2];
      }
      gray /= img.pixels();
      Image out = img;
      for (auto& v : out.values) v = clamp_pixel(gray + (v - gray) * f);
      return out;
    }
    case RandAugOp::kSolarize: {
      const double threshold = 256.0 - level * 256.0;
      Image out = img;
      for (auto& v : out.values)
        if (v >= threshold) v = 255.0f - v;
      return out;
    }
    case RandAugOp::kPosterize: {
      const int bits = 8 - static_cast<int>(level * 4.0);
      const int mask = (0xFF << (8 - bits)) & 0xFF;
      Image out = img;
      for (auto& v : out.values) {
        const int b = static_cast<int>(std::clamp(std::lround(v), 0L, 255L));
        v = static_cast<float>(b & mask);
      }
      return out;
    }
  }
  throw ConfigError("unknown RandAugment op");
}

Image rand_augment(const Image& img, int ops, double magnitude, double magnitude_std, Rng& rng) {
  Image out = img;
  for (int i = 0; i < ops; ++i) {
    const auto op = static_cast<RandAugOp>(uniform_index(rng, kRandAugOpCount));
    const bool apply = uniform01(rng) < 0.5;
    const double m = std::clamp(normal(rng, magnitude, magnitude_std), 0.0, 10.0);
    const bool negate = uniform01(rng) < 0.5;
    if (apply) out = apply_randaug_op(out, op, m, negate);
  }
  return out;
}

void set_one_hot(Batch& batch) {
  const std::size_t n = batch.labels.size();
  batch.soft_labels.assign(n * batch.num_classes, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    const int y = batch.labels[i];
    if (y < 0 || y >= batch.num_classes) throw ConfigError("label outside the class range");
    batch.soft_labels[i * batch.num_classes + y] = 1.0f;
  }
  batch.mix_lambda = 1.0;
}

Batch mixup_with_lambda(const Batch& batch, double lambda) {
  Batch out = batch;
  const std::size_t n = batch.size();
  const std::size_t classes = batch.num_classes;
  const auto lam = static_cast<float>(lambda);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    auto& dst = out.images[i].values;
    const auto& a = batch.images[i].values;
    const auto& b = batch.images[j].values;
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] = lam * a[k] + (1.0f - lam) * b[k];
    for (std::size_t c = 0; c < classes; ++c) {
      out.soft_labels[i * classes + c] = lam * batch.soft_labels[i * classes + c] +
                                         (1.0f - lam) * batch.soft_labels[j * classes + c];
    }
  }
  out.mix_lambda = lambda;
  return out;
}

Batch mixup(const Batch& batch, double alpha, Rng& rng) {
  return mixup_with_lambda(batch, beta_symmetric(rng, alpha));
}

Batch cutmix_with_box(const Batch& batch, int top, int left, int box_h, int box_w) {
  if (batch.images.empty()) return batch;
  const int h = batch.images[0].height, w = batch.images[0].width;
  const int bottom = std::clamp(top + box_h, 0, h), right = std::clamp(left + box_w, 0, w);
  top = std::clamp(top, 0, h);
  left = std::clamp(left, 0, w);
  Batch out = batch;
  const std::size_t n = batch.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& partner = batch.images[n - 1 - i];
    for (int r = top; r < bottom; ++r)
      for (int c = left; c < right; ++c)
        for (int ch = 0; ch < Image::kChannels; ++ch)
          out.images[i].at(r, c, ch) = partner.at(r, c, ch);
  }
  const double area = static_cast<double>(bottom - top) * (right - left);
  const double lambda = 1.0 - area / (static_cast<double>(h) * w);
  const std::size_t classes = batch.num_classes;
  const auto lam = static_cast<float>(lambda);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    for (std::size_t c = 0; c < classes; ++c) {
      out.soft_labels[i * classes + c] = lam * batch.soft_labels[i * classes + c] +
                                         (1.0f - lam) * batch.soft_labels[j * classes + c];
    }
  }
  out.mix_lambda = lambda;
  out.box_top = top;
  out.box_bottom = bottom;
  out.box_left = left;
  out.box_right = right;
  return out;
}

Batch cutmix(const Batch& batch, double alpha, Rng& rng) {
  if (batch.images.empty()) return batch;
  const int h = batch.images[0].height, w = batch.images[0].width;
  const double lambda = beta_symmetric(rng, alpha);
  const double ratio = std::sqrt(1.0 - lambda);
  const int cut_h = static_cast<int>(h * ratio), cut_w = static_cast<int>(w * ratio);
  const int cy = static_cast<int>(uniform_index(rng, h));
  const int cx = static_cast<int>(uniform_index(rng, w));
  const int top = std::clamp(cy - cut_h / 2, 0, h), bottom = std::clamp(cy + cut_h / 2, 0, h);
  const int left = std::clamp(cx - cut_w / 2, 0, w), right = std::clamp(cx + cut_w / 2, 0, w);
  return cutmix_with_box(batch, top, left, bottom - top, right - left);
}

}  // namespace pixtok
