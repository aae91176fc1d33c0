#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pixtok/nn.hpp"

namespace pixtok {

struct OptimizerConfig {
  double lr = 0.004;  // peak learning rate
  double beta1 = 0.9;
  double beta2 = 0.95;
  double eps = 1e-8;
  double weight_decay = 0.3;
  double layer_decay = 1.0;     // 1 disables layer-wise decay
  double grad_clip_norm = 0.0;  // 0 disables clipping
  double ema_decay = 0.0;       // 0 disables the parameter EMA

  void validate() const;
  bool operator==(const OptimizerConfig&) const = default;
};

// 1-D tensors (norm gains, biases), position embeddings, cls and mask tokens.
bool is_no_decay(const std::string& name, const Tensor& t);

struct ParamSlot {
  std::string name;
  Tensor param;
  bool decay = true;
  double lr_scale = 1.0;
};

// Decay flags from is_no_decay and lr scales from layerwise_lr over
// parameter_depth.
std::vector<ParamSlot> make_param_slots(const ParamList& params, const OptimizerConfig& cfg,
                                        int layers);

// One AdamW update of a single tensor at (1-based) step t:
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p (1 - lr wd)                      [decay set only]
//   p <- p - lr * m_hat / (sqrt(v_hat) + eps)
void adamw_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                  std::span<float> v, std::int64_t t, const OptimizerConfig& cfg, double lr,
                  bool decay);

// AdamW with decoupled weight decay over a fixed set of parameters.
class AdamW {
 public:
  // Throws ConfigError if a slot in the no-decay set is marked for decay.
  AdamW(std::vector<ParamSlot> slots, OptimizerConfig cfg);

  // Applies one update with base learning rate `lr` (scaled per slot).
  void step(double lr);
  void zero_grad();
  std::int64_t steps() const { return steps_; }
  const OptimizerConfig& config() const { return cfg_; }
  const std::vector<ParamSlot>& slots() const { return slots_; }

  // Moments as named tensors "opt.m.<name>" / "opt.v.<name>".
  ParamList state() const;
  void load_state(const ParamList& tensors, std::int64_t steps);

 private:
  std::vector<ParamSlot> slots_;
  OptimizerConfig cfg_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::int64_t steps_ = 0;
};

// Scales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
double clip_grad_norm(const ParamList& params, double max_norm);

struct EmaState {
  double decay = 0.9999;
  ParamList shadow;  // names mirror the tracked parameters

  static EmaState from_params(const ParamList& params, double decay);
  static EmaState zeros_like(const ParamList& params, double decay);
  // Shadow tensors renamed "ema.<name>".
  ParamList state() const;
};

// shadow <- decay * shadow + (1 - decay) * param
void ema_update(EmaState& ema, const ParamList& params);

struct ScheduleConfig {
  double warmup_epochs = 20;
  double total_epochs = 2400;
  double min_lr = 1e-6;
  std::int64_t steps_per_epoch = 1;

  std::int64_t warmup_steps() const;
  std::int64_t total_steps() const;
  void validate() const;
  bool operator==(const ScheduleConfig&) const = default;
};

// Linear 0 -> peak over the warmup steps, then half-cosine from peak at the
// end of warmup to min_lr at the final step (total_steps - 1).
double lr_at(std::int64_t step, const ScheduleConfig& sched, double peak);

// base_lr * decay^(layers + 1 - depth): depth 0 is the embedding, layers + 1
// the head.
double layerwise_lr(double base_lr, int depth, int layers, double decay);

}  // namespace pixtok
