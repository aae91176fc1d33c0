#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pixtok/tensor.hpp"

namespace pixtok {

struct GradCheckEntry {
  std::string name;
  double relative_error = 0.0;  // ||autodiff - numeric|| / max(||autodiff||, ||numeric||)
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_relative_error = 0.0;
  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

// Compares autodiff gradients of the scalar `loss_fn()` with respect to
// `params` against central differences of step `step`. The numeric side is
// evaluated with grad recording disabled. Errors are norm-wise per parameter
// tensor; the report carries the maximum over tensors.
GradCheckReport finite_diff_check(const std::function<Tensor()>& loss_fn,
                                  std::vector<Tensor> params,
                                  std::vector<std::string> names = {},
                                  double step = 1e-3);

}  // namespace pixtok
