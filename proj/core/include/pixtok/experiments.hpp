#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pixtok/checkpoint.hpp"
#include "pixtok/config.hpp"
#include "pixtok/metrics_log.hpp"
#include "pixtok/trainer.hpp"

namespace pixtok {

struct DataBundle {
  Dataset train;
  Dataset val;
  Normalization stats;
};

// Generates or loads the train/val splits described by cfg.data. Images are
// resized bilinearly when the source size differs from model.image_size.
DataBundle prepare_data(const ExperimentConfig& cfg);
Dataset resize_dataset(const Dataset& data, int size);

struct RunResult {
  MetricsLog log;
  std::int64_t epochs_run = 0;
  bool stopped_early = false;
  EvalResult final_eval;         // classifier runs
  double best_acc1 = 0.0;
  double initial_loss = 0.0;     // MAE: eval loss before training
  double final_loss = 0.0;       // MAE: eval loss after the last epoch
  std::optional<Checkpoint> last;
  std::filesystem::path output_dir;
};

// Each runner writes metrics.csv, summary.json and checkpoints under
// cfg.output_dir, or nothing when it is empty. Overloads taking a DataBundle
// skip data preparation.
RunResult run_supervised(const ExperimentConfig& cfg);
RunResult run_supervised(const ExperimentConfig& cfg, const DataBundle& data);

RunResult run_mae_pretrain(const ExperimentConfig& cfg);
RunResult run_mae_pretrain(const ExperimentConfig& cfg, const DataBundle& data);

struct FinetuneResult {
  RunResult pretrained;
  std::optional<RunResult> random_init;  // when train.compare_random_init
};
// Encoder from train.init_checkpoint, fresh head.
FinetuneResult run_mae_finetune(const ExperimentConfig& cfg);
FinetuneResult run_mae_finetune(const ExperimentConfig& cfg, const DataBundle& data);

struct PeAblationRow {
  PeMode pe = PeMode::kLearned;
  EvalResult eval;
  std::int64_t epochs = 0;
};
// sincos, learned, none, with everything else shared.
std::vector<PeAblationRow> run_pe_ablation(const ExperimentConfig& cfg);
std::vector<PeAblationRow> run_pe_ablation(const ExperimentConfig& cfg, const DataBundle& data);

struct PermutationStudyRow {
  std::string label;  // "baseline" (unpermuted tokenizer) or "permuted"
  std::uint64_t seed = 0;
  int swaps = 0;
  std::optional<int> delta;
  EvalResult eval;
  double delta_acc1 = 0.0;  // versus the T = 0 row of the same seed and delta
  std::string permutation_file;
};
// One shared permutation per (seed, T, delta), applied to training and
// evaluation images alike.
std::vector<PermutationStudyRow> run_permutation_study(const ExperimentConfig& cfg);
std::vector<PermutationStudyRow> run_permutation_study(const ExperimentConfig& cfg,
                                                       const DataBundle& data);
std::uint64_t permutation_seed(std::uint64_t seed, int swaps, std::optional<int> delta);

struct TrendPoint {
  int input_size = 0;
  int patch_size = 0;
  int sequence_length = 0;  // (input / patch)^2
  bool operator==(const TrendPoint&) const = default;
};
// fixed_sequence_length: input = sqrt(L) * p for each p; fixed_input_size:
// L = (input / p)^2. Patch sizes that do not fit raise ConfigError.
std::vector<TrendPoint> trend_grid(const TrendSweepConfig& cfg);

struct TrendRow {
  TrendPoint point;
  EvalResult eval;
};
std::vector<TrendRow> run_trend_sweep(const ExperimentConfig& cfg);

struct LrCurve {
  double lr = 0.0;
  std::vector<double> losses;  // one per optimizer step
  bool diverged = false;
  std::int64_t diverged_at = -1;
  std::string reason;  // "non-finite" or "loss above threshold"
};
// Divergence: a non-finite value anywhere in the step, or a loss above
// divergence_factor times the first step's loss. The curve stops there.
std::vector<LrCurve> run_lr_sweep(const ExperimentConfig& cfg);
std::vector<LrCurve> run_lr_sweep(const ExperimentConfig& cfg, const DataBundle& data);

// Table writers (CSV) used by the runners and the CLI.
std::string pe_ablation_csv(const std::vector<PeAblationRow>& rows);
std::string permutation_study_csv(const std::vector<PermutationStudyRow>& rows);
std::string trend_sweep_csv(const std::vector<TrendRow>& rows);
std::string lr_sweep_csv(const std::vector<LrCurve>& curves);

}  // namespace pixtok
