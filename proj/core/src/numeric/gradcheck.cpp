#include "tractflow/numeric/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tractflow {

GradCheckResult check_gradients(ParamStore& params, const std::function<Var(Tape&)>& build_loss,
                                double step, double rel_tol, double abs_floor) {
  params.zero_grad();
  {
    Tape tape;
    Var loss = build_loss(tape);
    tape.backward(loss);
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const auto& e : params.entries()) analytic.push_back(e.grad);
  params.zero_grad();

  auto eval = [&] {
    Tape tape;
    return tape.value(build_loss(tape))[0];
  };

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& entry = params.entry(p);
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const double saved = entry.value[i];
      entry.value[i] = saved + step;
      const double up = eval();
      entry.value[i] = saved - step;
      const double down = eval();
      entry.value[i] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double abs_err = std::abs(a - numeric);
      ++result.checked;
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      if (abs_err <= abs_floor) continue;
      const double rel = abs_err / std::max(std::abs(a), std::abs(numeric));
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = entry.name;
        result.worst_index = i;
      }
    }
  }
  result.passed = result.max_relative_error <= rel_tol;
  return result;
}

}  // namespace tractflow
