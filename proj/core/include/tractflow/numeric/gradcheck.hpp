#pragma once

#include <functional>
#include <string>

#include "tractflow/numeric/autodiff.hpp"

namespace tractflow {

struct GradCheckResult {
  double max_relative_error = 0.0;  // over entries whose absolute error exceeds the floor
  double max_absolute_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Compares reverse-mode gradients of a scalar loss against central finite
/// differences for every entry of every parameter in the store. The builder
/// records the loss on a fresh tape each time it is called.
GradCheckResult check_gradients(ParamStore& params, const std::function<Var(Tape&)>& build_loss,
                                double step = 1e-5, double rel_tol = 1e-4, double abs_floor = 1e-6);

}  // namespace tractflow
