#pragma once

#include <cstdint>
#include <vector>

#include "pixtok/image.hpp"
#include "pixtok/rng.hpp"

namespace pixtok {

struct AugmentationConfig {
  bool random_crop = false;
  int crop_padding = 4;
  double hflip_prob = 0.0;
  double mixup_alpha = 0.0;   // 0 disables
  double cutmix_alpha = 0.0;  // 0 disables
  bool randaug = false;
  int randaug_ops = 2;
  double randaug_magnitude = 9.0;
  double randaug_magnitude_std = 0.5;

  // Recipe of the supervised from-scratch runs: crop with padding 4 and flips.
  static AugmentationConfig crop_flip();
  bool any_per_image() const { return random_crop || hflip_prob > 0.0 || randaug; }
  bool operator==(const AugmentationConfig&) const = default;
};

Image hflip(const Image& img);
// Zero-pads by `padding` on every side and crops back to the original size at
// (top, left) in padded coordinates.
Image pad_crop(const Image& img, int padding, int top, int left);

// Random crop + horizontal flip (+ RandAugment when enabled). Raw images in,
// raw images out. Identity when every option is off.
Image basic_augment(const Image& img, const AugmentationConfig& cfg, Rng& rng);

enum class RandAugOp {
  kTranslateX,
  kTranslateY,
  kShearX,
  kShearY,
  kBrightness,
  kContrast,
  kSolarize,
  kPosterize,
};
inline constexpr int kRandAugOpCount = 8;

// magnitude in [0, 10].
Image apply_randaug_op(const Image& img, RandAugOp op, double magnitude, bool negate);
// `ops` draws, each applied with probability 0.5, magnitude ~ N(m, mstd)
// clipped to [0, 10].
Image rand_augment(const Image& img, int ops, double magnitude, double magnitude_std, Rng& rng);

// A batch of model inputs with soft labels.
struct Batch {
  std::vector<Image> images;
  std::vector<float> soft_labels;  // [B, C], rows on the simplex
  std::vector<int> labels;         // hard labels before mixing
  int num_classes = 0;
  std::vector<std::uint64_t> sample_seeds;
  double mix_lambda = 1.0;
  // Cutmix box in pixels [top, bottom) x [left, right); empty when unused.
  int box_top = 0, box_bottom = 0, box_left = 0, box_right = 0;

  std::size_t size() const { return images.size(); }
};

void set_one_hot(Batch& batch);

// Sample i is mixed with sample B - 1 - i.
Batch mixup_with_lambda(const Batch& batch, double lambda);
Batch mixup(const Batch& batch, double alpha, Rng& rng);
// Pastes the same box from the partner into every image; labels are mixed with
// the area-corrected lambda = 1 - box area / image area.
Batch cutmix_with_box(const Batch& batch, int top, int left, int box_h, int box_w);
Batch cutmix(const Batch& batch, double alpha, Rng& rng);

}  // namespace pixtok
