#pragma once

#include <string_view>

#include "tractflow/numeric/autodiff.hpp"

namespace tractflow {

/// p <- p - lr * (g + weight_decay * p), then gradients are zeroed.
void sgd_step(ParamStore& params, double lr, double weight_decay = 0.0);

enum class OptimizerKind { Sgd, Adam };

OptimizerKind parse_optimizer_kind(std::string_view name);
std::string_view to_string(OptimizerKind kind) noexcept;

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.9;  // SGD only; 0 disables
  double beta1 = 0.9;     // Adam only
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global L2 norm bound on the gradient; 0 disables clipping.
  double clip_norm = 0.0;
};

/// Stateful optimizer driving the per-parameter buffers held in a ParamStore.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  /// Applies one update with the current learning rate and zeros gradients.
  void step(ParamStore& params);

  double learning_rate() const noexcept { return config_.lr; }
  void set_learning_rate(double lr) noexcept { config_.lr = lr; }
  const OptimizerConfig& config() const noexcept { return config_; }

 private:
  OptimizerConfig config_;
  long steps_ = 0;
};

}  // namespace tractflow
