#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pixtok/image.hpp"

namespace pixtok {

// Images stored as raw bytes, H x W x 3 interleaved.
struct Dataset {
  int height = 0;
  int width = 0;
  int num_classes = 0;
  std::vector<std::uint8_t> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_bytes() const { return static_cast<std::size_t>(height) * width * 3; }
  const std::uint8_t* image_data(std::size_t i) const { return pixels.data() + i * image_bytes(); }
  Image image(std::size_t i) const { return Image::from_bytes(height, width, image_data(i)); }
  void push_back(const std::uint8_t* hwc, int label);

  // Per-channel mean/stddev over every pixel, in raw units.
  Normalization statistics() const;
};

// CIFAR-100 binary: records of [coarse u8][fine u8][1024 R][1024 G][1024 B],
// planes row-major, 3074 bytes each. The fine label is the class.
constexpr std::size_t kCifarRecordBytes = 3074;
Dataset load_cifar100(const std::filesystem::path& path);
// `coarse` may be empty (written as 0).
void save_cifar100(const std::filesystem::path& path, const Dataset& data,
                   const std::vector<int>& coarse = {});

// index.tsv lines "relative/path<TAB>label"; each file is exactly H*W*3 bytes.
Dataset load_raw_folder(const std::filesystem::path& dir, int height, int width, int num_classes);
void save_raw_folder(const std::filesystem::path& dir, const Dataset& data);

enum class SyntheticKind { kQuadrant, kColor };
std::string to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(std::string_view text);

// 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right.
int quadrant_class(int row, int col, int height, int width);
int synthetic_classes(SyntheticKind kind);

// quadrant: a bright square blob on a dim noisy background; the class is the
//   quadrant containing the blob (locality sensitive).
// color: a noisy image whose dominant channel is the class
//   (locality insensitive).
// Labels are drawn uniformly. Same (kind, n, seed, size) gives the same bytes.
Dataset synthetic_dataset(SyntheticKind kind, int count, std::uint64_t seed, int image_size = 8);

// Writes a quadrant-style blob whose top-left corner is (row, col).
void draw_blob(Image& img, int row, int col, int blob, float value);

}  // namespace pixtok
