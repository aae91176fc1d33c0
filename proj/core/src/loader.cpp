#include "pixtok/loader.hpp"

#include <numeric>

#include "pixtok/error.hpp"
#include "pixtok/parallel.hpp"

namespace pixtok {

DataLoader::DataLoader(const Dataset& data, int batch_size, bool shuffle,
                       AugmentationConfig augment, Normalization stats, std::uint64_t seed)
    : data_(&data),
      batch_size_(batch_size),
      shuffle_(shuffle),
      augment_(augment),
      stats_(stats),
      seed_(seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (data.size() == 0) throw ConfigError("dataset is empty");
}

std::int64_t DataLoader::num_batches() const {
  const auto n = static_cast<std::int64_t>(data_->size());
  return (n + batch_size_ - 1) / batch_size_;
}

std::vector<std::size_t> DataLoader::epoch_order(std::int64_t epoch) const {
  std::vector<std::size_t> order(data_->size());
  std::iota(order.begin(), order.end(), 0);
  if (!shuffle_) return order;
  auto rng = make_rng(seed_, {hash_name("shuffle"), static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return order;
}

Batch DataLoader::batch(std::int64_t epoch, std::int64_t index) const {
  if (index < 0 || index >= num_batches()) throw ConfigError("batch index out of range");
  const auto order = epoch_order(epoch);
  const std::size_t begin = static_cast<std::size_t>(index) * batch_size_;
  const std::size_t end = std::min(order.size(), begin + batch_size_);
  Batch batch;
  batch.num_classes = data_->num_classes;
  batch.images.resize(end - begin);
  batch.labels.resize(end - begin);
  batch.sample_seeds.resize(end - begin);
  const auto e = static_cast<std::uint64_t>(epoch);
  parallel_for(static_cast<std::int64_t>(end - begin), [&](std::int64_t k) {
    const std::size_t idx = order[begin + k];
    batch.labels[k] = data_->labels[idx];
    batch.sample_seeds[k] = derive_seed(seed_, {hash_name("sample"), e, idx});
    Image img = data_->image(idx);
    if (augment_.any_per_image()) {
      Rng rng(batch.sample_seeds[k]);
      img = basic_augment(img, augment_, rng);
    }
    batch.images[k] = std::move(img);
  });
  set_one_hot(batch);
  const bool use_mixup = augment_.mixup_alpha > 0.0;
  const bool use_cutmix = augment_.cutmix_alpha > 0.0;
  if (use_mixup || use_cutmix) {
    auto rng = make_rng(seed_, {hash_name("mix"), e, static_cast<std::uint64_t>(index)});
    const bool pick_cutmix = use_cutmix && (!use_mixup || uniform01(rng) < 0.5);
    batch = pick_cutmix ? cutmix(batch, augment_.cutmix_alpha, rng)
                        : mixup(batch, augment_.mixup_alpha, rng);
  }
  for (auto& img : batch.images) img = normalize(img, stats_);
  return batch;
}

}  // namespace pixtok
