#pragma once

#include <cstdint>
#include <vector>

#include "pixtok/augment.hpp"
#include "pixtok/dataset.hpp"

namespace pixtok {

// Deterministic epoch-wise batching. The shuffle order depends only on
// (seed, epoch) and each sample's augmentation stream on (seed, epoch, index),
// so any batch can be rebuilt independently, in any order or in parallel.
class DataLoader {
 public:
  DataLoader(const Dataset& data, int batch_size, bool shuffle, AugmentationConfig augment,
             Normalization stats, std::uint64_t seed);

  std::int64_t num_batches() const;
  std::vector<std::size_t> epoch_order(std::int64_t epoch) const;
  // Augments, mixes (when enabled) and normalizes batch `index` of `epoch`.
  Batch batch(std::int64_t epoch, std::int64_t index) const;

  const Dataset& dataset() const { return *data_; }
  const Normalization& normalization() const { return stats_; }

 private:
  const Dataset* data_;
  int batch_size_;
  bool shuffle_;
  AugmentationConfig augment_;
  Normalization stats_;
  std::uint64_t seed_;
};

}  // namespace pixtok
