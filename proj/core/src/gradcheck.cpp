#include "pixtok/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "pixtok/error.hpp"

namespace pixtok {

GradCheckReport finite_diff_check(const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params, std::vector<std::string> names,
                                  double step) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  Tensor loss = loss_fn();
  if (loss.numel() != 1) throw ShapeError("finite_diff_check: loss must be a scalar");
  backward(loss);

  GradCheckReport report;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    auto values = p.data();
    auto analytic = p.grad();
    double diff_sq = 0.0, a_sq = 0.0, n_sq = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float original = values[i];
      values[i] = static_cast<float>(original + step);
      const double plus = loss_fn().item();
      values[i] = static_cast<float>(original - step);
      const double minus = loss_fn().item();
      values[i] = original;
      // Use the step actually representable in f32.
      const double h = (static_cast<double>(static_cast<float>(original + step)) -
                        static_cast<double>(static_cast<float>(original - step)));
      const double numeric = (plus - minus) / h;
      const double diff = numeric - analytic[i];
      diff_sq += diff * diff;
      a_sq += static_cast<double>(analytic[i]) * analytic[i];
      n_sq += numeric * numeric;
      max_abs = std::max(max_abs, std::abs(diff));
    }
    GradCheckEntry entry;
    entry.name = pi < names.size() ? names[pi] : "param" + std::to_string(pi);
    const double denom = std::max({std::sqrt(a_sq), std::sqrt(n_sq), 1e-12});
    entry.relative_error = std::sqrt(diff_sq) / denom;
    entry.max_abs_error = max_abs;
    report.max_relative_error = std::max(report.max_relative_error, entry.relative_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace pixtok
