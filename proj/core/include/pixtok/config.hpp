#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pixtok/augment.hpp"
#include "pixtok/dataset.hpp"
#include "pixtok/mae.hpp"
#include "pixtok/model.hpp"
#include "pixtok/optim.hpp"

namespace pixtok {

enum class Study {
  kSupervised,
  kMaePretrain,
  kMaeFinetune,
  kPeAblation,
  kPermutationStudy,
  kTrendSweep,
  kLrSweep,
};
std::string to_string(Study study);
Study parse_study(std::string_view text);

enum class DataSource { kSynthetic, kCifar100, kRawFolder };
std::string to_string(DataSource source);
DataSource parse_data_source(std::string_view text);

struct DatasetSpec {
  DataSource source = DataSource::kSynthetic;
  SyntheticKind synthetic_kind = SyntheticKind::kQuadrant;
  int train_count = 64;
  int val_count = 64;
  // Evaluate on the (unaugmented) training images instead of a held-out split.
  bool val_same_as_train = false;
  std::optional<std::uint64_t> seed;  // defaults to the experiment seed
  int image_size = 8;                 // synthetic generation / raw folder size
  int num_classes = 0;                // raw folder only
  std::string train_path;             // cifar100 file or raw folder
  std::string val_path;
  // Unset: CIFAR-100 statistics for cifar100, training-set statistics otherwise.
  std::optional<Normalization> normalization;

  bool operator==(const DatasetSpec&) const = default;
};

struct TrainConfig {
  int batch_size = 64;
  int eval_interval = 10;         // epochs between evaluations
  double target_acc1 = 0.0;       // stop once eval acc@1 reaches this (0 disables)
  double target_loss_ratio = 0.0; // MAE: stop once eval loss <= ratio * initial (0 disables)
  std::string init_checkpoint;    // mae-finetune: pretrained encoder
  std::string resume_from;        // continue a run from its checkpoint
  bool compare_random_init = false;
  bool save_checkpoints = true;

  bool operator==(const TrainConfig&) const = default;
};

struct PermutationStudyConfig {
  std::vector<int> swaps{0, -1};  // -1 means the maximum, H*W/2
  std::vector<std::optional<int>> deltas{std::nullopt};
  std::vector<std::uint64_t> seeds;  // empty: the experiment seed only
  bool include_baseline = true;

  bool operator==(const PermutationStudyConfig&) const = default;
};

enum class TrendMode { kFixedSequenceLength, kFixedInputSize };
std::string to_string(TrendMode mode);
TrendMode parse_trend_mode(std::string_view text);

struct TrendSweepConfig {
  TrendMode mode = TrendMode::kFixedInputSize;
  int sequence_length = 196;
  int input_size = 32;
  std::vector<int> patch_sizes{8, 4, 2, 1};

  bool operator==(const TrendSweepConfig&) const = default;
};

struct LrSweepConfig {
  std::vector<double> lrs{1e-4, 1e-3, 4e-3};
  std::int64_t steps = 100;
  double divergence_factor = 10.0;

  bool operator==(const LrSweepConfig&) const = default;
};

struct ExperimentConfig {
  Study study = Study::kSupervised;
  std::uint64_t seed = 0;
  std::string output_dir;  // empty: nothing is written to disk
  ModelConfig model;
  std::string permutation_file;  // loaded into model.permutation
  MaeConfig mae;
  OptimizerConfig optimizer;
  ScheduleConfig schedule;
  DatasetSpec data;
  AugmentationConfig augmentation;
  TrainConfig train;
  PermutationStudyConfig permutation_study;
  TrendSweepConfig trend_sweep;
  LrSweepConfig lr_sweep;

  // Model/optimizer/schedule checks plus study-specific requirements.
  void validate() const;
  std::uint64_t data_seed() const { return data.seed.value_or(seed); }
  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace pixtok
