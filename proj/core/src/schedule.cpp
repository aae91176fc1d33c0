#include <algorithm>
#include <cmath>

#include "pixtok/error.hpp"
#include "pixtok/optim.hpp"

namespace pixtok {

std::int64_t ScheduleConfig::warmup_steps() const {
  return static_cast<std::int64_t>(std::llround(warmup_epochs * steps_per_epoch));
}

std::int64_t ScheduleConfig::total_steps() const {
  return static_cast<std::int64_t>(std::llround(total_epochs * steps_per_epoch));
}

void ScheduleConfig::validate() const {
  if (steps_per_epoch < 1) throw ConfigError("schedule: steps_per_epoch must be >= 1");
  if (total_epochs <= 0) throw ConfigError("schedule: total_epochs must be > 0");
  if (warmup_epochs < 0 || warmup_epochs >= total_epochs) {
    throw ConfigError("schedule: warmup must be shorter than training");
  }
  if (min_lr < 0) throw ConfigError("schedule: min_lr must be >= 0");
}

double lr_at(std::int64_t step, const ScheduleConfig& sched, double peak) {
  const auto warmup = sched.warmup_steps();
  const auto last = sched.total_steps() - 1;
  if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
  const double floor = std::min(sched.min_lr, peak);
  if (step >= last) return last > warmup ? floor : peak;
  const double progress =
      static_cast<double>(step - warmup) / static_cast<double>(last - warmup);
  return floor + 0.5 * (peak - floor) * (1.0 + std::cos(M_PI * progress));
}

double layerwise_lr(double base_lr, int depth, int layers, double decay) {
  if (depth < 0 || depth > layers + 1) {
    throw ConfigError("layer depth " + std::to_string(depth) + " outside [0, " +
                      std::to_string(layers + 1) + "]");
  }
  return base_lr * std::pow(decay, layers + 1 - depth);
}

}  // namespace pixtok
