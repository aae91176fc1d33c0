#include "pixtok/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pixtok/error.hpp"
#include "pixtok/ops.hpp"

namespace pixtok {

namespace {

ScheduleConfig make_schedule(const ExperimentConfig& cfg, const DataLoader& loader) {
  ScheduleConfig s = cfg.schedule;
  s.steps_per_epoch = loader.num_batches();
  s.validate();
  return s;
}

std::optional<EmaState> make_ema(const OptimizerConfig& cfg, const ParamList& params) {
  if (cfg.ema_decay <= 0.0) return std::nullopt;
  return EmaState::from_params(params, cfg.ema_decay);
}

Json training_meta(const ExperimentConfig& cfg, std::int64_t epoch, std::int64_t step,
                   const Json& extra) {
  Json t{{"epoch", epoch}, {"step", step}, {"seed", cfg.seed}, {"study", to_string(cfg.study)}};
  for (const auto& item : extra.items()) t[item.key()] = item.value();
  return t;
}

// Checkpoints hold copies so later steps do not write through to them.
void append(ParamList& dst, const ParamList& src) {
  for (const auto& p : src) dst.push_back({p.name, p.tensor.clone()});
}

void restore_common(const Checkpoint& ckpt, const ParamList& params, AdamW& opt,
                    std::optional<EmaState>& ema, std::int64_t& epoch) {
  load_parameters(ckpt, params);
  const auto& training = ckpt.header.value("training", Json::object());
  const auto step = training.value("step", std::int64_t{0});
  epoch = training.value("epoch", std::int64_t{0});
  opt.load_state(ckpt.tensors, step);
  if (ema) {
    ParamList shadow = ckpt.with_prefix("ema.");
    Checkpoint view;
    view.tensors = std::move(shadow);
    load_parameters(view, ema->shadow);
  }
}

void after_step(AdamW& opt, std::optional<EmaState>& ema, const ParamList& params,
                const OptimizerConfig& cfg, double lr) {
  if (cfg.grad_clip_norm > 0.0) clip_grad_norm(params, cfg.grad_clip_norm);
  opt.step(lr);
  if (ema) ema_update(*ema, params);
}

}  // namespace

std::int64_t topk_hits(std::span<const float> logits, std::span<const int> labels, int classes,
                       int k) {
  std::int64_t hits = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const float* row = logits.data() + b * classes;
    const int y = labels[b];
    // Rank of y = classes strictly better, plus lower-index ties.
    int better = 0;
    for (int c = 0; c < classes; ++c) {
      if (row[c] > row[y] || (row[c] == row[y] && c < y)) ++better;
    }
    if (better < k) ++hits;
  }
  return hits;
}

EvalResult evaluate_classifier(const VisionTransformer& model, const Dataset& data,
                               const Normalization& stats, int batch_size) {
  NoGradGuard guard;
  EvalResult out;
  const int classes = model.config().num_classes;
  double loss_sum = 0.0;
  std::int64_t hit1 = 0, hit5 = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    std::vector<Image> images;
    std::vector<int> labels;
    std::vector<float> targets((end - begin) * classes, 0.0f);
    for (std::size_t i = begin; i < end; ++i) {
      images.push_back(normalize(data.image(i), stats));
      labels.push_back(data.labels[i]);
      targets[(i - begin) * classes + data.labels[i]] = 1.0f;
    }
    ForwardContext ctx;
    const Tensor logits = model.forward_classifier(images, ctx);
    const auto n = static_cast<std::int64_t>(end - begin);
    const Tensor loss = ops::cross_entropy(logits, Tensor::from({n, classes}, std::move(targets)));
    loss_sum += static_cast<double>(loss.item()) * static_cast<double>(n);
    hit1 += topk_hits(logits.data(), labels, classes, 1);
    hit5 += topk_hits(logits.data(), labels, classes, std::min(5, classes));
  }
  out.samples = static_cast<std::int64_t>(data.size());
  if (out.samples > 0) {
    out.loss = loss_sum / out.samples;
    out.acc1 = static_cast<double>(hit1) / out.samples;
    out.acc5 = static_cast<double>(hit5) / out.samples;
  }
  return out;
}

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, {hash_name("init")}); }
std::uint64_t loader_seed(std::uint64_t seed) { return derive_seed(seed, {hash_name("loader")}); }

// ---------------------------------------------------------------------------

SupervisedTrainer::SupervisedTrainer(const ExperimentConfig& cfg, const Dataset& train,
                                     Normalization stats)
    : cfg_(cfg),
      model_(std::make_unique<VisionTransformer>(cfg.model, init_seed(cfg.seed))),
      loader_(train, cfg.train.batch_size, true, cfg.augmentation, stats, loader_seed(cfg.seed)),
      schedule_(make_schedule(cfg, loader_)) {
  if (train.num_classes != cfg.model.num_classes) {
    throw ConfigError("dataset has " + std::to_string(train.num_classes) +
                      " classes but the model is configured for " +
                      std::to_string(cfg.model.num_classes));
  }
  if (train.height != cfg.model.image_size || train.width != cfg.model.image_size) {
    throw ConfigError("dataset images are " + std::to_string(train.height) + "x" +
                      std::to_string(train.width) + " but model.image_size is " +
                      std::to_string(cfg.model.image_size));
  }
  const auto params = model_->parameters();
  optimizer_ = std::make_unique<AdamW>(make_param_slots(params, cfg.optimizer, cfg.model.layers),
                                       cfg.optimizer);
  ema_ = make_ema(cfg.optimizer, params);
}

double SupervisedTrainer::current_lr() const {
  return lr_at(optimizer_->steps(), schedule_, cfg_.optimizer.lr);
}

double SupervisedTrainer::train_step(const Batch& batch) { return run_step(batch).item(); }

Tensor SupervisedTrainer::run_step(const Batch& batch, Tensor* logits_out) {
  const auto step = optimizer_->steps();
  const double lr = lr_at(step, schedule_, cfg_.optimizer.lr);
  auto rng = make_rng(cfg_.seed, {hash_name("drop_path"), static_cast<std::uint64_t>(step)});
  ForwardContext ctx;
  ctx.training = true;
  ctx.rng = &rng;
  const auto n = static_cast<std::int64_t>(batch.size());
  optimizer_->zero_grad();
  const Tensor logits = model_->forward_classifier(batch.images, ctx);
  const Tensor loss =
      ops::cross_entropy(logits, Tensor::from({n, batch.num_classes}, batch.soft_labels));
  backward(loss);
  after_step(*optimizer_, ema_, model_->parameters(), cfg_.optimizer, lr);
  if (logits_out) *logits_out = logits;
  return loss;
}

EpochResult SupervisedTrainer::train_epoch() {
  EpochResult r;
  double loss_sum = 0.0;
  std::int64_t seen = 0, hit1 = 0, hit5 = 0;
  const int classes = cfg_.model.num_classes;
  for (std::int64_t b = 0; b < loader_.num_batches(); ++b) {
    const Batch batch = loader_.batch(epoch_, b);
    r.lr = current_lr();
    const auto n = static_cast<std::int64_t>(batch.size());
    Tensor logits;
    const Tensor loss = run_step(batch, &logits);
    const double l = loss.item();
    r.step_losses.push_back(l);
    loss_sum += l * static_cast<double>(n);
    seen += n;
    hit1 += topk_hits(logits.data(), batch.labels, classes, 1);
    hit5 += topk_hits(logits.data(), batch.labels, classes, std::min(5, classes));
    ++r.steps;
  }
  ++epoch_;
  r.loss = loss_sum / static_cast<double>(seen);
  r.acc1 = static_cast<double>(hit1) / static_cast<double>(seen);
  r.acc5 = static_cast<double>(hit5) / static_cast<double>(seen);
  return r;
}

EvalResult SupervisedTrainer::evaluate(const Dataset& data) const {
  return evaluate_classifier(*model_, data, loader_.normalization(), cfg_.train.batch_size);
}

Checkpoint SupervisedTrainer::checkpoint(const Json& extra) const {
  Checkpoint ckpt;
  ckpt.header["format"] = "pixtok-checkpoint";
  ckpt.header["kind"] = "classifier";
  ckpt.header["model"] = to_json(cfg_.model);
  ckpt.header["training"] = training_meta(cfg_, epoch_, optimizer_->steps(), extra);
  append(ckpt.tensors, model_->parameters());
  append(ckpt.tensors, optimizer_->state());
  if (ema_) append(ckpt.tensors, ema_->state());
  return ckpt;
}

void SupervisedTrainer::restore(const Checkpoint& ckpt) {
  if (ckpt.header.value("kind", "") != "classifier") {
    throw CheckpointMismatch("kind", "expected a classifier checkpoint");
  }
  check_model_compatible(cfg_.model, checkpoint_model_config(ckpt), false);
  restore_common(ckpt, model_->parameters(), *optimizer_, ema_, epoch_);
}

void SupervisedTrainer::load_encoder(const Checkpoint& ckpt) {
  check_model_compatible(cfg_.model, checkpoint_model_config(ckpt), true);
  ParamList encoder;
  for (const auto& p : model_->parameters()) {
    if (p.name.rfind("head.", 0) != 0) encoder.push_back(p);
  }
  load_parameters(ckpt, encoder);
  if (ema_) *ema_ = EmaState::from_params(model_->parameters(), ema_->decay);
}

// ---------------------------------------------------------------------------

MaeTrainer::MaeTrainer(const ExperimentConfig& cfg, const Dataset& train, Normalization stats)
    : cfg_(cfg),
      model_(std::make_unique<MaskedAutoencoder>(cfg.model, cfg.mae, init_seed(cfg.seed))),
      loader_(train, cfg.train.batch_size, true, cfg.augmentation, stats, loader_seed(cfg.seed)),
      schedule_(make_schedule(cfg, loader_)) {
  if (train.height != cfg.model.image_size || train.width != cfg.model.image_size) {
    throw ConfigError("dataset image size does not match model.image_size");
  }
  const auto params = model_->parameters();
  optimizer_ = std::make_unique<AdamW>(make_param_slots(params, cfg.optimizer, cfg.model.layers),
                                       cfg.optimizer);
  ema_ = make_ema(cfg.optimizer, params);
}

EpochResult MaeTrainer::train_epoch() {
  EpochResult r;
  double loss_sum = 0.0;
  std::int64_t seen = 0;
  for (std::int64_t b = 0; b < loader_.num_batches(); ++b) {
    const Batch batch = loader_.batch(epoch_, b);
    const auto step = static_cast<std::uint64_t>(optimizer_->steps());
    r.lr = lr_at(optimizer_->steps(), schedule_, cfg_.optimizer.lr);
    auto dp_rng = make_rng(cfg_.seed, {hash_name("drop_path"), step});
    auto mask_rng = make_rng(cfg_.seed, {hash_name("mask"), step});
    ForwardContext ctx;
    ctx.training = true;
    ctx.rng = &dp_rng;
    optimizer_->zero_grad();
    const MaeOutput out = model_->forward(batch.images, ctx, mask_rng);
    backward(out.loss);
    after_step(*optimizer_, ema_, model_->parameters(), cfg_.optimizer, r.lr);
    const double l = out.loss.item();
    const auto n = static_cast<std::int64_t>(batch.size());
    r.step_losses.push_back(l);
    loss_sum += l * static_cast<double>(n);
    seen += n;
    ++r.steps;
  }
  ++epoch_;
  r.loss = loss_sum / static_cast<double>(seen);
  return r;
}

double MaeTrainer::evaluate(const Dataset& data) const {
  NoGradGuard guard;
  double loss_sum = 0.0;
  const int bs = cfg_.train.batch_size;
  for (std::size_t begin = 0, index = 0; begin < data.size(); begin += bs, ++index) {
    const std::size_t end = std::min(data.size(), begin + bs);
    std::vector<Image> images;
    for (std::size_t i = begin; i < end; ++i) {
      images.push_back(normalize(data.image(i), loader_.normalization()));
    }
    auto mask_rng = make_rng(cfg_.seed, {hash_name("mae_eval"), index});
    ForwardContext ctx;
    const MaeOutput out = model_->forward(images, ctx, mask_rng);
    loss_sum += static_cast<double>(out.loss.item()) * static_cast<double>(end - begin);
  }
  return data.size() ? loss_sum / static_cast<double>(data.size()) : 0.0;
}

Checkpoint MaeTrainer::checkpoint(const Json& extra) const {
  Checkpoint ckpt;
  ckpt.header["format"] = "pixtok-checkpoint";
  ckpt.header["kind"] = "mae";
  ckpt.header["model"] = to_json(cfg_.model);
  ckpt.header["mae"] = to_json(cfg_.mae);
  ckpt.header["training"] = training_meta(cfg_, epoch_, optimizer_->steps(), extra);
  append(ckpt.tensors, model_->parameters());
  append(ckpt.tensors, optimizer_->state());
  if (ema_) append(ckpt.tensors, ema_->state());
  return ckpt;
}

void MaeTrainer::restore(const Checkpoint& ckpt) {
  if (ckpt.header.value("kind", "") != "mae") {
    throw CheckpointMismatch("kind", "expected an MAE checkpoint");
  }
  check_model_compatible(cfg_.model, checkpoint_model_config(ckpt), true);
  restore_common(ckpt, model_->parameters(), *optimizer_, ema_, epoch_);
}

}  // namespace pixtok
