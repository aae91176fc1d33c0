#include "pixtok/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pixtok/error.hpp"
#include "pixtok/figures.hpp"

namespace pixtok {

namespace fs = std::filesystem;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

MetricsLog open_log(const fs::path& out) {
  return out.empty() ? MetricsLog() : MetricsLog(out / "metrics.csv");
}

void write_json(const fs::path& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

std::int64_t total_epochs(const ExperimentConfig& cfg) {
  return static_cast<std::int64_t>(std::ceil(cfg.schedule.total_epochs));
}

Json eval_json(const EvalResult& e) {
  return Json{{"loss", e.loss}, {"acc1", e.acc1}, {"acc5", e.acc5}, {"samples", e.samples}};
}

fs::path subdir(const fs::path& out, const std::string& name) {
  return out.empty() ? fs::path() : out / name;
}

ExperimentConfig with_output(const ExperimentConfig& cfg, const fs::path& out) {
  ExperimentConfig c = cfg;
  c.output_dir = out.string();
  return c;
}

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

RunResult train_classifier(const ExperimentConfig& cfg, const DataBundle& data,
                           const Checkpoint* encoder_init) {
  const fs::path out = cfg.output_dir;
  SupervisedTrainer trainer(cfg, data.train, data.stats);
  if (!cfg.train.resume_from.empty()) {
    trainer.restore(load_checkpoint(cfg.train.resume_from));
    spdlog::info("resumed from {} at epoch {}", cfg.train.resume_from, trainer.epoch());
  } else if (encoder_init) {
    trainer.load_encoder(*encoder_init);
  }
  RunResult result;
  result.output_dir = out;
  result.log = open_log(out);
  result.best_acc1 = -1.0;
  Stopwatch clock;
  const auto epochs = total_epochs(cfg);
  const bool save = !out.empty() && cfg.train.save_checkpoints;
  while (trainer.epoch() < epochs) {
    const EpochResult e = trainer.train_epoch();
    const auto epoch = trainer.epoch();
    result.log.add({epoch, "train", e.loss, e.acc1, e.acc5, e.lr, clock.seconds()});
    spdlog::debug("epoch {} train loss {:.5f} acc1 {:.4f}", epoch, e.loss, e.acc1);
    const bool last = epoch == epochs;
    if (epoch % cfg.train.eval_interval != 0 && !last) continue;
    const EvalResult ev = trainer.evaluate(data.val);
    result.final_eval = ev;
    result.log.add({epoch, "val", ev.loss, ev.acc1, ev.acc5, e.lr, clock.seconds()});
    spdlog::info("epoch {} val loss {:.5f} acc1 {:.4f} acc5 {:.4f}", epoch, ev.loss, ev.acc1,
                 ev.acc5);
    const bool stop = cfg.train.target_acc1 > 0.0 && ev.acc1 >= cfg.train.target_acc1;
    if (ev.acc1 > result.best_acc1) {
      result.best_acc1 = ev.acc1;
      if (save) save_checkpoint(out / "checkpoint_best.pitc", trainer.checkpoint({{"acc1", ev.acc1}}));
    }
    if (save) save_checkpoint(out / "checkpoint_last.pitc", trainer.checkpoint({{"acc1", ev.acc1}}));
    if (stop) {
      result.stopped_early = !last;
      break;
    }
  }
  result.epochs_run = trainer.epoch();
  result.best_acc1 = std::max(result.best_acc1, 0.0);
  result.last = trainer.checkpoint({{"acc1", result.final_eval.acc1}});
  if (!out.empty()) {
    write_json(out / "summary.json",
               Json{{"study", to_string(cfg.study)},
                    {"seed", cfg.seed},
                    {"epochs_run", result.epochs_run},
                    {"stopped_early", result.stopped_early},
                    {"final", eval_json(result.final_eval)},
                    {"best_acc1", result.best_acc1},
                    {"checkpoint", save ? "checkpoint_last.pitc" : ""}});
  }
  return result;
}

}  // namespace

Dataset resize_dataset(const Dataset& data, int size) {
  if (data.height == size && data.width == size) return data;
  Dataset out;
  out.height = out.width = size;
  out.num_classes = data.num_classes;
  std::vector<std::uint8_t> bytes(out.image_bytes());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Image img = resize_bilinear(data.image(i), size, size);
    std::transform(img.values.begin(), img.values.end(), bytes.begin(), to_byte);
    out.push_back(bytes.data(), data.labels[i]);
  }
  return out;
}

DataBundle prepare_data(const ExperimentConfig& cfg) {
  const auto& spec = cfg.data;
  DataBundle b;
  switch (spec.source) {
    case DataSource::kSynthetic: {
      const int size = cfg.model.image_size;
      b.train = synthetic_dataset(spec.synthetic_kind, spec.train_count, cfg.data_seed(), size);
      if (!spec.val_same_as_train) {
        b.val = synthetic_dataset(spec.synthetic_kind, spec.val_count,
                                  derive_seed(cfg.data_seed(), {hash_name("val")}), size);
      }
      break;
    }
    case DataSource::kCifar100:
      b.train = load_cifar100(spec.train_path);
      if (!spec.val_same_as_train) {
        if (spec.val_path.empty()) throw ConfigError("data.val_path is required for cifar100");
        b.val = load_cifar100(spec.val_path);
      }
      break;
    case DataSource::kRawFolder:
      b.train = load_raw_folder(spec.train_path, spec.image_size, spec.image_size, spec.num_classes);
      if (!spec.val_same_as_train) {
        if (spec.val_path.empty()) throw ConfigError("data.val_path is required for raw_folder");
        b.val = load_raw_folder(spec.val_path, spec.image_size, spec.image_size, spec.num_classes);
      }
      break;
  }
  b.train = resize_dataset(b.train, cfg.model.image_size);
  b.val = spec.val_same_as_train ? b.train : resize_dataset(b.val, cfg.model.image_size);
  if (spec.normalization) {
    b.stats = *spec.normalization;
  } else if (spec.source == DataSource::kCifar100) {
    b.stats = Normalization::cifar100();
  } else {
    b.stats = b.train.statistics();
  }
  return b;
}

RunResult run_supervised(const ExperimentConfig& cfg) { return run_supervised(cfg, prepare_data(cfg)); }

RunResult run_supervised(const ExperimentConfig& cfg, const DataBundle& data) {
  return train_classifier(cfg, data, nullptr);
}

RunResult run_mae_pretrain(const ExperimentConfig& cfg) {
  return run_mae_pretrain(cfg, prepare_data(cfg));
}

RunResult run_mae_pretrain(const ExperimentConfig& cfg, const DataBundle& data) {
  const fs::path out = cfg.output_dir;
  MaeTrainer trainer(cfg, data.train, data.stats);
  if (!cfg.train.resume_from.empty()) trainer.restore(load_checkpoint(cfg.train.resume_from));
  RunResult result;
  result.output_dir = out;
  result.log = open_log(out);
  Stopwatch clock;
  result.initial_loss = trainer.evaluate(data.val);
  result.final_loss = result.initial_loss;
  result.log.add({trainer.epoch(), "val", result.initial_loss, {}, {}, 0.0, clock.seconds()});
  const auto epochs = total_epochs(cfg);
  const bool save = !out.empty() && cfg.train.save_checkpoints;
  while (trainer.epoch() < epochs) {
    const EpochResult e = trainer.train_epoch();
    const auto epoch = trainer.epoch();
    result.log.add({epoch, "train", e.loss, {}, {}, e.lr, clock.seconds()});
    const bool last = epoch == epochs;
    if (epoch % cfg.train.eval_interval != 0 && !last) continue;
    result.final_loss = trainer.evaluate(data.val);
    result.log.add({epoch, "val", result.final_loss, {}, {}, e.lr, clock.seconds()});
    spdlog::info("epoch {} masked mse {:.5f} ({:.1f}% of initial)", epoch, result.final_loss,
                 100.0 * result.final_loss / result.initial_loss);
    if (save) save_checkpoint(out / "checkpoint_last.pitc", trainer.checkpoint());
    if (cfg.train.target_loss_ratio > 0.0 &&
        result.final_loss <= cfg.train.target_loss_ratio * result.initial_loss) {
      result.stopped_early = !last;
      break;
    }
  }
  result.epochs_run = trainer.epoch();
  result.last = trainer.checkpoint();
  if (!out.empty()) {
    write_json(out / "summary.json", Json{{"study", to_string(cfg.study)},
                                          {"seed", cfg.seed},
                                          {"epochs_run", result.epochs_run},
                                          {"stopped_early", result.stopped_early},
                                          {"initial_loss", result.initial_loss},
                                          {"final_loss", result.final_loss},
                                          {"checkpoint", save ? "checkpoint_last.pitc" : ""}});
  }
  return result;
}

FinetuneResult run_mae_finetune(const ExperimentConfig& cfg) {
  return run_mae_finetune(cfg, prepare_data(cfg));
}

FinetuneResult run_mae_finetune(const ExperimentConfig& cfg, const DataBundle& data) {
  if (cfg.train.init_checkpoint.empty()) {
    throw ConfigError("mae_finetune requires train.init_checkpoint");
  }
  const Checkpoint init = load_checkpoint(cfg.train.init_checkpoint);
  const fs::path out = cfg.output_dir;
  FinetuneResult r;
  if (!cfg.train.compare_random_init) {
    r.pretrained = train_classifier(cfg, data, &init);
    return r;
  }
  r.pretrained = train_classifier(with_output(cfg, subdir(out, "pretrained")), data, &init);
  r.random_init = train_classifier(with_output(cfg, subdir(out, "random_init")), data, nullptr);
  if (!out.empty()) {
    Figure fig{"fine-tuning from pretrained vs random init", "epoch", "val acc@1", {}, true};
    for (const auto* run : {&r.pretrained, &*r.random_init}) {
      Series s{run == &r.pretrained ? "pretrained" : "random init", {}, {}};
      for (const auto& row : run->log.rows_for("val")) {
        s.x.push_back(static_cast<double>(row.epoch));
        s.y.push_back(row.acc1.value_or(0.0));
      }
      fig.series.push_back(std::move(s));
    }
    export_figure(fig, out / "finetune_curves");
  }
  return r;
}

std::vector<PeAblationRow> run_pe_ablation(const ExperimentConfig& cfg) {
  return run_pe_ablation(cfg, prepare_data(cfg));
}

std::vector<PeAblationRow> run_pe_ablation(const ExperimentConfig& cfg, const DataBundle& data) {
  const fs::path out = cfg.output_dir;
  std::vector<PeAblationRow> rows;
  for (PeMode pe : {PeMode::kSinCos2d, PeMode::kLearned, PeMode::kNone}) {
    ExperimentConfig c = with_output(cfg, subdir(out, "pe_" + to_string(pe)));
    c.model.pe = pe;
    spdlog::info("pe ablation: {}", to_string(pe));
    const RunResult run = train_classifier(c, data, nullptr);
    rows.push_back({pe, run.final_eval, run.epochs_run});
  }
  if (!out.empty()) write_text_file(out / "pe_ablation.csv", pe_ablation_csv(rows));
  return rows;
}

std::uint64_t permutation_seed(std::uint64_t seed, int swaps, std::optional<int> delta) {
  return derive_seed(seed, {hash_name("permutation"), static_cast<std::uint64_t>(swaps),
                            static_cast<std::uint64_t>(delta.value_or(0))});
}

std::vector<PermutationStudyRow> run_permutation_study(const ExperimentConfig& cfg) {
  return run_permutation_study(cfg, prepare_data(cfg));
}

std::vector<PermutationStudyRow> run_permutation_study(const ExperimentConfig& cfg,
                                                       const DataBundle& data) {
  const fs::path out = cfg.output_dir;
  const auto& study = cfg.permutation_study;
  const int side = cfg.model.image_size;
  std::vector<std::uint64_t> seeds = study.seeds;
  if (seeds.empty()) seeds.push_back(cfg.seed);
  // The T = 0 row is always present; it is the reference for delta_acc1.
  std::vector<int> swap_list;
  for (const int requested : study.swaps) {
    const int swaps = requested < 0 ? max_swaps(side, side) : requested;
    if (std::find(swap_list.begin(), swap_list.end(), swaps) == swap_list.end()) {
      swap_list.push_back(swaps);
    }
  }
  if (std::find(swap_list.begin(), swap_list.end(), 0) == swap_list.end()) {
    swap_list.insert(swap_list.begin(), 0);
  }
  std::vector<PermutationStudyRow> rows;
  for (const auto seed : seeds) {
    ExperimentConfig base = cfg;
    base.seed = seed;
    const std::string seed_tag = fmt::format("seed{}", seed);
    if (study.include_baseline) {
      spdlog::info("permutation study: seed {} unpermuted baseline", seed);
      const RunResult run =
          train_classifier(with_output(base, subdir(out, seed_tag + "/baseline")), data, nullptr);
      rows.push_back({"baseline", seed, 0, std::nullopt, run.final_eval, 0.0, ""});
    }
    for (const auto delta : study.deltas) {
      std::optional<EvalResult> reference;
      const std::size_t first_row = rows.size();
      for (const int swaps : swap_list) {
        const auto perm =
            swaps == 0 ? PermutationMap::from_swaps(side, side, delta, 0, {})
                       : generate_permutation(side, side, swaps, delta,
                                              permutation_seed(seed, swaps, delta));
        const std::string tag = fmt::format("{}/T{}_delta{}", seed_tag, swaps, delta_str(delta));
        const fs::path dir = subdir(out, tag);
        std::string perm_file;
        if (!dir.empty()) {
          fs::create_directories(dir);
          perm_file = (dir / "permutation.txt").string();
          save_permutation(perm_file, perm);
          load_permutation(perm_file);  // re-validates what was written
        }
        ExperimentConfig c = with_output(base, dir);
        c.model.patch_size = cfg.model.effective_patch();
        c.model.tokenizer = TokenizerMode::kPermutedPatch;
        c.model.permutation = perm;
        spdlog::info("permutation study: seed {} T={} delta={}", seed, swaps, delta_str(delta));
        const RunResult run = train_classifier(c, data, nullptr);
        if (swaps == 0) reference = run.final_eval;
        rows.push_back({"permuted", seed, swaps, delta, run.final_eval, 0.0, perm_file});
      }
      if (reference) {
        for (std::size_t i = first_row; i < rows.size(); ++i) {
          if (rows[i].label == "permuted") rows[i].delta_acc1 = rows[i].eval.acc1 - reference->acc1;
        }
      }
    }
  }
  if (!out.empty()) {
    write_text_file(out / "permutation_study.csv", permutation_study_csv(rows));
    Figure fig{"accuracy under pixel permutation", "swaps T", "acc@1", {}, true};
    for (const auto delta : study.deltas) {
      for (const auto seed : seeds) {
        Series s{fmt::format("delta={} seed={}", delta_str(delta), seed), {}, {}};
        for (const auto& r : rows) {
          if (r.label == "permuted" && r.delta == delta && r.seed == seed) {
            s.x.push_back(r.swaps);
            s.y.push_back(r.eval.acc1);
          }
        }
        fig.series.push_back(std::move(s));
      }
    }
    export_figure(fig, out / "permutation_study");
  }
  return rows;
}

std::vector<TrendPoint> trend_grid(const TrendSweepConfig& cfg) {
  std::vector<TrendPoint> grid;
  auto patch_sizes = cfg.patch_sizes;
  // p = 1 (pixel tokens) is always part of the sweep.
  if (std::find(patch_sizes.begin(), patch_sizes.end(), 1) == patch_sizes.end()) {
    patch_sizes.push_back(1);
  }
  for (const int p : patch_sizes) {
    if (p < 1) throw ConfigError("trend_sweep patch sizes must be >= 1");
    TrendPoint t;
    t.patch_size = p;
    if (cfg.mode == TrendMode::kFixedSequenceLength) {
      const int side = static_cast<int>(std::lround(std::sqrt(cfg.sequence_length)));
      if (side * side != cfg.sequence_length) {
        throw ConfigError("trend_sweep.sequence_length must be a perfect square");
      }
      t.input_size = side * p;
    } else {
      if (cfg.input_size % p != 0) {
        throw ConfigError(fmt::format("patch size {} does not divide input size {}", p,
                                      cfg.input_size));
      }
      t.input_size = cfg.input_size;
    }
    const int grid_side = t.input_size / p;
    t.sequence_length = grid_side * grid_side;
    grid.push_back(t);
  }
  return grid;
}

std::vector<TrendRow> run_trend_sweep(const ExperimentConfig& cfg) {
  const fs::path out = cfg.output_dir;
  std::vector<TrendRow> rows;
  for (const auto& point : trend_grid(cfg.trend_sweep)) {
    ExperimentConfig c = with_output(
        cfg, subdir(out, fmt::format("input{}_p{}", point.input_size, point.patch_size)));
    c.model.image_size = point.input_size;
    c.model.tokenizer = point.patch_size == 1 ? TokenizerMode::kPixel : TokenizerMode::kPatch;
    c.model.patch_size = point.patch_size;
    c.model.permutation.reset();
    spdlog::info("trend sweep: input {} patch {} (L={})", point.input_size, point.patch_size,
                 point.sequence_length);
    const RunResult run = train_classifier(c, prepare_data(c), nullptr);
    rows.push_back({point, run.final_eval});
  }
  if (!out.empty()) {
    write_text_file(out / "trend_sweep.csv", trend_sweep_csv(rows));
    Figure fig{cfg.trend_sweep.mode == TrendMode::kFixedSequenceLength
                   ? "fixed sequence length"
                   : "fixed input size",
               "patch size", "acc@1", {}, true};
    Series s{"acc@1", {}, {}};
    for (const auto& r : rows) {
      s.x.push_back(r.point.patch_size);
      s.y.push_back(r.eval.acc1);
    }
    fig.series.push_back(std::move(s));
    export_figure(fig, out / "trend_sweep");
  }
  return rows;
}

std::vector<LrCurve> run_lr_sweep(const ExperimentConfig& cfg) {
  return run_lr_sweep(cfg, prepare_data(cfg));
}

std::vector<LrCurve> run_lr_sweep(const ExperimentConfig& cfg, const DataBundle& data) {
  const fs::path out = cfg.output_dir;
  const auto& sweep = cfg.lr_sweep;
  std::vector<LrCurve> curves;
  for (const double lr : sweep.lrs) {
    ExperimentConfig c = with_output(cfg, "");
    c.optimizer.lr = lr;
    const auto batches = (static_cast<std::int64_t>(data.train.size()) + c.train.batch_size - 1) /
                         c.train.batch_size;
    c.schedule.total_epochs = std::max<double>(
        c.schedule.warmup_epochs + 1.0, std::ceil(static_cast<double>(sweep.steps) / batches));
    LrCurve curve;
    curve.lr = lr;
    SupervisedTrainer trainer(c, data.train, data.stats);
    try {
      for (std::int64_t step = 0; step < sweep.steps; ++step) {
        const auto epoch = step / batches;
        const double loss = trainer.train_step(trainer.loader().batch(epoch, step % batches));
        if (!std::isfinite(loss)) throw NumericError("loss", "non-finite loss");
        curve.losses.push_back(loss);
        if (loss > sweep.divergence_factor * curve.losses.front()) {
          curve.diverged = true;
          curve.diverged_at = step;
          curve.reason = "loss above threshold";
          break;
        }
      }
    } catch (const NumericError&) {
      curve.diverged = true;
      curve.diverged_at = static_cast<std::int64_t>(curve.losses.size());
      curve.reason = "non-finite";
    }
    spdlog::info("lr sweep: lr {} {}", lr, curve.diverged ? "diverged (" + curve.reason + ")" : "ok");
    if (!out.empty()) {
      std::string csv = "step,loss\n";
      for (std::size_t i = 0; i < curve.losses.size(); ++i) {
        csv += fmt::format("{},{:.9g}\n", i, curve.losses[i]);
      }
      write_text_file(out / fmt::format("lr_{:g}.csv", lr), csv);
    }
    curves.push_back(std::move(curve));
  }
  if (!out.empty()) {
    write_text_file(out / "lr_sweep.csv", lr_sweep_csv(curves));
    Figure fig{"training loss by learning rate", "step", "loss", {}, false};
    for (const auto& curve : curves) {
      Series s{fmt::format("lr={:g}", curve.lr), {}, {}};
      for (std::size_t i = 0; i < curve.losses.size(); ++i) {
        if (!std::isfinite(curve.losses[i])) break;
        s.x.push_back(static_cast<double>(i));
        s.y.push_back(curve.losses[i]);
      }
      fig.series.push_back(std::move(s));
    }
    export_figure(fig, out / "lr_sweep");
  }
  return curves;
}

std::string pe_ablation_csv(const std::vector<PeAblationRow>& rows) {
  std::string out = "pe,loss,acc1,acc5,epochs\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{:.9g},{:.9g},{:.9g},{}\n", to_string(r.pe), r.eval.loss, r.eval.acc1,
                       r.eval.acc5, r.epochs);
  }
  return out;
}

std::string permutation_study_csv(const std::vector<PermutationStudyRow>& rows) {
  std::string out = "label,seed,T,delta,loss,acc1,acc5,delta_acc1,permutation_file\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{:.9g},{:.9g},{:.9g},{:.9g},{}\n", r.label, r.seed, r.swaps,
                       r.label == "baseline" ? "" : delta_str(r.delta), r.eval.loss, r.eval.acc1,
                       r.eval.acc5, r.delta_acc1, r.permutation_file);
  }
  return out;
}

std::string trend_sweep_csv(const std::vector<TrendRow>& rows) {
  std::string out = "patch_size,input_size,sequence_length,loss,acc1,acc5\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.9g},{:.9g},{:.9g}\n", r.point.patch_size, r.point.input_size,
                       r.point.sequence_length, r.eval.loss, r.eval.acc1, r.eval.acc5);
  }
  return out;
}

std::string lr_sweep_csv(const std::vector<LrCurve>& curves) {
  std::string out = "lr,steps,first_loss,last_loss,diverged,diverged_at,reason\n";
  for (const auto& c : curves) {
    const double first = c.losses.empty() ? 0.0 : c.losses.front();
    const double last = c.losses.empty() ? 0.0 : c.losses.back();
    out += fmt::format("{:g},{},{:.9g},{:.9g},{},{},{}\n", c.lr, c.losses.size(), first, last,
                       c.diverged ? 1 : 0, c.diverged_at, c.reason);
  }
  return out;
}

}  // namespace pixtok
