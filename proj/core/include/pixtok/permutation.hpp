#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pixtok/image.hpp"

namespace pixtok {

// Chebyshev distance max(|dr|, |dc|) between flat raster indices on a grid.
int grid_distance(int width, int a, int b);

// A bijection on the H*W pixel indices built from disjoint, distance-bounded
// transpositions. Pixel i of the source lands at mapping()[i]. Immutable.
//
// `delta` == nullopt means unbounded; otherwise every swapped pair satisfies
// grid_distance < delta, so delta = 2 is the 2x2 (8-connected) neighbourhood.
class PermutationMap {
 public:
  using Swap = std::pair<std::int32_t, std::int32_t>;

  static PermutationMap identity(int height, int width);
  // Validates the swaps (range, disjointness, distance bound) and builds the map.
  static PermutationMap from_swaps(int height, int width, std::optional<int> delta,
                                   std::uint64_t seed, std::vector<Swap> swaps);

  int height() const { return height_; }
  int width() const { return width_; }
  int size() const { return height_ * width_; }
  int swap_count() const { return static_cast<int>(swaps_.size()); }
  std::optional<int> delta() const { return delta_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Swap>& swaps() const { return swaps_; }
  const std::vector<std::int32_t>& mapping() const { return mapping_; }
  bool is_identity() const { return swaps_.empty(); }

  PermutationMap inverse() const;

  bool operator==(const PermutationMap& other) const {
    return height_ == other.height_ && width_ == other.width_ && delta_ == other.delta_ &&
           seed_ == other.seed_ && swaps_ == other.swaps_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::optional<int> delta_;
  std::uint64_t seed_ = 0;
  std::vector<Swap> swaps_;
  std::vector<std::int32_t> mapping_;
};

// Largest T accepted by generate_permutation: floor(H * W / 2).
int max_swaps(int height, int width);

// Samples T disjoint transpositions, each within the distance bound. Sampling
// is rejection based with a budget of 1000 * T attempts; exhausting the budget
// throws ConfigError. Deterministic given the seed.
PermutationMap generate_permutation(int height, int width, int swaps, std::optional<int> delta,
                                    std::uint64_t seed);

// out[mapping[i]] = in[i] for every pixel.
Image apply_permutation(const Image& img, const PermutationMap& perm);

// Text format: header "PERM v1 H W T delta seed" (delta is "inf" when
// unbounded), then one "i j" line per transposition.
void write_permutation(std::ostream& os, const PermutationMap& perm);
void save_permutation(const std::string& path, const PermutationMap& perm);
// Validates bijection and distance bound; throws FormatError with the line number.
PermutationMap read_permutation(std::istream& is);
PermutationMap load_permutation(const std::string& path);

std::string delta_str(std::optional<int> delta);
std::optional<int> parse_delta(const std::string& text);

}  // namespace pixtok
