#include "pixtok/config.hpp"

#include <algorithm>

#include "pixtok/error.hpp"

namespace pixtok {

std::string to_string(Study study) {
  switch (study) {
    case Study::kSupervised: return "supervised";
    case Study::kMaePretrain: return "mae_pretrain";
    case Study::kMaeFinetune: return "mae_finetune";
    case Study::kPeAblation: return "pe_ablation";
    case Study::kPermutationStudy: return "permutation_study";
    case Study::kTrendSweep: return "trend_sweep";
    case Study::kLrSweep: return "lr_sweep";
  }
  return "?";
}

Study parse_study(std::string_view text) {
  std::string key(text);
  std::replace(key.begin(), key.end(), '-', '_');
  for (auto s : {Study::kSupervised, Study::kMaePretrain, Study::kMaeFinetune, Study::kPeAblation,
                 Study::kPermutationStudy, Study::kTrendSweep, Study::kLrSweep}) {
    if (key == to_string(s)) return s;
  }
  throw ConfigError("unknown study '" + std::string(text) + "'");
}

std::string to_string(DataSource source) {
  switch (source) {
    case DataSource::kSynthetic: return "synthetic";
    case DataSource::kCifar100: return "cifar100";
    case DataSource::kRawFolder: return "raw_folder";
  }
  return "?";
}

DataSource parse_data_source(std::string_view text) {
  if (text == "synthetic") return DataSource::kSynthetic;
  if (text == "cifar100") return DataSource::kCifar100;
  if (text == "raw_folder") return DataSource::kRawFolder;
  throw ConfigError("unknown data source '" + std::string(text) +
                    "' (expected synthetic, cifar100 or raw_folder)");
}

std::string to_string(TrendMode mode) {
  return mode == TrendMode::kFixedSequenceLength ? "fixed_sequence_length" : "fixed_input_size";
}

TrendMode parse_trend_mode(std::string_view text) {
  if (text == "fixed_sequence_length") return TrendMode::kFixedSequenceLength;
  if (text == "fixed_input_size") return TrendMode::kFixedInputSize;
  throw ConfigError("unknown trend mode '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  model.validate();
  optimizer.validate();
  schedule.validate();
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
  if (data.source == DataSource::kSynthetic) {
    if (data.train_count < 1) throw ConfigError("data.train_count must be >= 1");
    if (!data.val_same_as_train && data.val_count < 1) {
      throw ConfigError("data.val_count must be >= 1 unless val_same_as_train is set");
    }
  } else if (data.train_path.empty()) {
    throw ConfigError("data.train_path is required for " + to_string(data.source));
  }
  if (data.source == DataSource::kRawFolder && data.num_classes < 1) {
    throw ConfigError("data.num_classes is required for raw_folder");
  }
  switch (study) {
    case Study::kMaePretrain:
      mae.validate(model);
      break;
    case Study::kMaeFinetune:
      if (train.init_checkpoint.empty()) {
        throw ConfigError("mae_finetune requires train.init_checkpoint");
      }
      break;
    case Study::kPermutationStudy:
      if (permutation_study.swaps.empty() || permutation_study.deltas.empty()) {
        throw ConfigError("permutation_study requires non-empty T and delta lists");
      }
      if (model.tokenizer == TokenizerMode::kPermutedPatch) {
        throw ConfigError("permutation_study sets the permutation itself; use a pixel or patch tokenizer");
      }
      break;
    case Study::kTrendSweep:
      if (trend_sweep.patch_sizes.empty()) throw ConfigError("trend_sweep.patch_sizes is empty");
      break;
    case Study::kLrSweep:
      if (lr_sweep.lrs.empty() || lr_sweep.steps < 1) {
        throw ConfigError("lr_sweep requires lrs and steps >= 1");
      }
      break;
    default:
      break;
  }
}

}  // namespace pixtok
