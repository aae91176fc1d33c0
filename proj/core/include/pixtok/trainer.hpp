#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pixtok/checkpoint.hpp"
#include "pixtok/config.hpp"
#include "pixtok/loader.hpp"
#include "pixtok/mae.hpp"
#include "pixtok/model.hpp"
#include "pixtok/optim.hpp"

namespace pixtok {

struct EvalResult {
  double loss = 0.0;
  double acc1 = 0.0;
  double acc5 = 0.0;
  std::int64_t samples = 0;
};

struct EpochResult {
  double loss = 0.0;  // sample-weighted mean over the epoch
  double acc1 = 0.0;  // against the unmixed labels (classifier only)
  double acc5 = 0.0;
  double lr = 0.0;    // at the last step of the epoch
  std::int64_t steps = 0;
  std::vector<double> step_losses;
};

// Number of rows whose label is among the k largest logits. Ties are broken
// towards the lower class index.
std::int64_t topk_hits(std::span<const float> logits, std::span<const int> labels, int classes,
                       int k);

// Mean cross-entropy and top-1/top-5 accuracy without augmentation or grad.
EvalResult evaluate_classifier(const VisionTransformer& model, const Dataset& data,
                               const Normalization& stats, int batch_size);

// Seeds derived from the experiment seed for the independent streams of a run.
std::uint64_t init_seed(std::uint64_t seed);
std::uint64_t loader_seed(std::uint64_t seed);

// Supervised classifier training. All randomness (shuffle, augmentation, drop
// path) is keyed by (seed, epoch, step/sample), so a run restored from a
// checkpoint continues exactly as the uninterrupted one.
class SupervisedTrainer {
 public:
  SupervisedTrainer(const ExperimentConfig& cfg, const Dataset& train, Normalization stats);

  EpochResult train_epoch();
  // One optimizer step on a prepared batch at the current global step.
  double train_step(const Batch& batch);
  EvalResult evaluate(const Dataset& data) const;

  std::int64_t epoch() const { return epoch_; }
  std::int64_t step() const { return optimizer_->steps(); }
  double current_lr() const;
  VisionTransformer& model() { return *model_; }
  const VisionTransformer& model() const { return *model_; }
  AdamW& optimizer() { return *optimizer_; }
  const DataLoader& loader() const { return loader_; }
  const ScheduleConfig& schedule() const { return schedule_; }

  Checkpoint checkpoint(const Json& extra = Json::object()) const;
  // Restores parameters, optimizer moments, EMA and the epoch counter.
  void restore(const Checkpoint& ckpt);
  // Copies only matching encoder weights (embed.*, blocks.*, norm.*).
  void load_encoder(const Checkpoint& ckpt);

 private:
  Tensor run_step(const Batch& batch, Tensor* logits_out = nullptr);

  ExperimentConfig cfg_;
  std::unique_ptr<VisionTransformer> model_;
  std::unique_ptr<AdamW> optimizer_;
  std::optional<EmaState> ema_;
  DataLoader loader_;
  ScheduleConfig schedule_;
  std::int64_t epoch_ = 0;
};

// Masked-autoencoder pre-training with the same determinism contract.
class MaeTrainer {
 public:
  MaeTrainer(const ExperimentConfig& cfg, const Dataset& train, Normalization stats);

  EpochResult train_epoch();
  // Masked MSE on `data` with masks drawn from a fixed evaluation stream, so
  // successive evaluations are comparable.
  double evaluate(const Dataset& data) const;

  std::int64_t epoch() const { return epoch_; }
  std::int64_t step() const { return optimizer_->steps(); }
  MaskedAutoencoder& model() { return *model_; }
  const MaskedAutoencoder& model() const { return *model_; }

  Checkpoint checkpoint(const Json& extra = Json::object()) const;
  void restore(const Checkpoint& ckpt);

 private:
  ExperimentConfig cfg_;
  std::unique_ptr<MaskedAutoencoder> model_;
  std::unique_ptr<AdamW> optimizer_;
  std::optional<EmaState> ema_;
  DataLoader loader_;
  ScheduleConfig schedule_;
  std::int64_t epoch_ = 0;
};

}  // namespace pixtok
