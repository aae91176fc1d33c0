#include "pixtok/optim.hpp"

#include <cmath>

#include "pixtok/error.hpp"
#include "pixtok/model.hpp"

namespace pixtok {

void OptimizerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("optimizer config: " + what); };
  if (lr < 0.0) fail("lr must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    fail("betas must lie in [0, 1)");
  }
  if (eps <= 0.0) fail("eps must be > 0");
  if (weight_decay < 0.0) fail("weight_decay must be >= 0");
  if (layer_decay <= 0.0 || layer_decay > 1.0) fail("layer_decay must lie in (0, 1]");
  if (grad_clip_norm < 0.0) fail("grad_clip_norm must be >= 0");
  if (ema_decay < 0.0 || ema_decay >= 1.0) fail("ema_decay must lie in [0, 1)");
}

bool is_no_decay(const std::string& name, const Tensor& t) {
  if (t.rank() <= 1) return true;
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  return ends_with(".pe") || ends_with(".cls") || ends_with("mask_token");
}

std::vector<ParamSlot> make_param_slots(const ParamList& params, const OptimizerConfig& cfg,
                                        int layers) {
  std::vector<ParamSlot> slots;
  slots.reserve(params.size());
  for (const auto& [name, tensor] : params) {
    ParamSlot s;
    s.name = name;
    s.param = tensor;
    s.decay = !is_no_decay(name, tensor);
    s.lr_scale = layerwise_lr(1.0, parameter_depth(name, layers), layers, cfg.layer_decay);
    slots.push_back(std::move(s));
  }
  return slots;
}

void adamw_update(std::span<float> param, std::span<const float> grad, std::span<float> m,
                  std::span<float> v, std::int64_t t, const OptimizerConfig& cfg, double lr,
                  bool decay) {
  const double b1 = cfg.beta1, b2 = cfg.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
  const double shrink = decay ? 1.0 - lr * cfg.weight_decay : 1.0;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = b1 * m[i] + (1.0 - b1) * g;
    const double vi = b2 * v[i] + (1.0 - b2) * g * g;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps);
    param[i] = static_cast<float>(param[i] * shrink - lr * update);
  }
}

AdamW::AdamW(std::vector<ParamSlot> slots, OptimizerConfig cfg)
    : slots_(std::move(slots)), cfg_(cfg) {
  cfg_.validate();
  for (const auto& s : slots_) {
    if (s.decay && cfg_.weight_decay > 0.0 && is_no_decay(s.name, s.param)) {
      throw ConfigError("parameter '" + s.name +
                        "' belongs to the no-decay set but is marked for weight decay");
    }
    m_.push_back(Tensor::zeros(s.param.shape()));
    v_.push_back(Tensor::zeros(s.param.shape()));
  }
}

void AdamW::step(double lr) {
  ++steps_;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    auto& s = slots_[i];
    if (!s.param.has_grad()) continue;
    adamw_update(s.param.data(), s.param.grad(), m_[i].data(), v_[i].data(), steps_, cfg_,
                 lr * s.lr_scale, s.decay);
  }
}

void AdamW::zero_grad() {
  for (auto& s : slots_) s.param.zero_grad();
}

ParamList AdamW::state() const {
  ParamList out;
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    out.push_back({"opt.m." + slots_[i].name, m_[i]});
    out.push_back({"opt.v." + slots_[i].name, v_[i]});
  }
  return out;
}

void AdamW::load_state(const ParamList& tensors, std::int64_t steps) {
  auto find = [&](const std::string& name) -> const Tensor& {
    for (const auto& t : tensors)
      if (t.name == name) return t.tensor;
    throw CheckpointMismatch(name, "optimizer state missing tensor '" + name + "'");
  };
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    for (auto [prefix, dst] : {std::pair{"opt.m.", &m_[i]}, std::pair{"opt.v.", &v_[i]}}) {
      const auto name = prefix + slots_[i].name;
      const auto& src = find(name);
      if (src.shape() != dst->shape()) {
        throw CheckpointMismatch(name, "optimizer state shape mismatch for '" + name + "'");
      }
      std::copy(src.data().begin(), src.data().end(), dst->data().begin());
    }
  }
  steps_ = steps;
}

double clip_grad_norm(const ParamList& params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (float g : p.tensor.grad()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const float scale = static_cast<float>(max_norm / (norm + 1e-6));
    for (auto p : params) {
      if (!p.tensor.has_grad()) continue;
      for (auto& g : p.tensor.grad()) g *= scale;
    }
  }
  return norm;
}

EmaState EmaState::from_params(const ParamList& params, double decay) {
  EmaState e;
  e.decay = decay;
  for (const auto& p : params) e.shadow.push_back({p.name, p.tensor.detach()});
  return e;
}

EmaState EmaState::zeros_like(const ParamList& params, double decay) {
  EmaState e;
  e.decay = decay;
  for (const auto& p : params) e.shadow.push_back({p.name, Tensor::zeros(p.tensor.shape())});
  return e;
}

ParamList EmaState::state() const {
  ParamList out;
  for (const auto& s : shadow) out.push_back({"ema." + s.name, s.tensor});
  return out;
}

void ema_update(EmaState& ema, const ParamList& params) {
  if (ema.shadow.size() != params.size()) throw ShapeError("EMA tracks a different parameter set");
  const double d = ema.decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto dst = ema.shadow[i].tensor.data();
    auto src = params[i].tensor.data();
    if (dst.size() != src.size()) throw ShapeError("EMA shape mismatch for " + params[i].name);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      dst[j] = static_cast<float>(d * dst[j] + (1.0 - d) * src[j]);
    }
  }
}

}  // namespace pixtok
