#include "tractflow/numeric/optimizer.hpp"

#include <cmath>
#include <string>

#include "tractflow/error.hpp"

namespace tractflow {

void sgd_step(ParamStore& params, double lr, double weight_decay) {
  for (auto& e : params.entries()) {
    for (std::size_t i = 0; i < e.value.size(); ++i) {
      e.value[i] -= lr * (e.grad[i] + weight_decay * e.value[i]);
    }
  }
  params.zero_grad();
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw Error(Errc::InvalidArgument, "unknown optimizer '" + std::string(name) + "'");
}

std::string_view to_string(OptimizerKind kind) noexcept {
  return kind == OptimizerKind::Adam ? "adam" : "sgd";
}

void Optimizer::step(ParamStore& params) {
  ++steps_;
  double clip = 1.0;
  if (config_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& e : params.entries()) {
      for (double g : e.grad.values()) sq += g * g;
    }
    const double norm = std::sqrt(sq);
    if (norm > config_.clip_norm) clip = config_.clip_norm / norm;
  }

  for (auto& e : params.entries()) {
    if (e.velocity.empty()) e.velocity = Matrix(e.value.rows(), e.value.cols());
    if (config_.kind == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = clip * e.grad[i] + config_.weight_decay * e.value[i];
        e.velocity[i] = config_.momentum * e.velocity[i] + g;
        e.value[i] -= config_.lr * e.velocity[i];
      }
    } else {
      if (e.second.empty()) e.second = Matrix(e.value.rows(), e.value.cols());
      const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
      const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
      for (std::size_t i = 0; i < e.value.size(); ++i) {
        const double g = clip * e.grad[i] + config_.weight_decay * e.value[i];
        e.velocity[i] = config_.beta1 * e.velocity[i] + (1.0 - config_.beta1) * g;
        e.second[i] = config_.beta2 * e.second[i] + (1.0 - config_.beta2) * g * g;
        const double mhat = e.velocity[i] / c1;
        const double vhat = e.second[i] / c2;
        e.value[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.epsilon);
      }
    }
  }
  params.zero_grad();
}

}  // namespace tractflow
