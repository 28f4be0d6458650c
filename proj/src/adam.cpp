#include "sparsereg/adam.hpp"

#include <cmath>

#include "sparsereg/error.hpp"

namespace sparsereg {

AdamState adam_init(Eigen::Index size) {
  return {Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size), 0};
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               double weight_decay, const AdamHyper& hyper) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    fail(ErrorCode::ShapeMismatch, "Adam parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grads;
  state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grads.cwiseAbs2();
  const double step_size =
      lr * std::sqrt(1.0 - std::pow(hyper.beta2, t)) / (1.0 - std::pow(hyper.beta1, t));
  params.array() -= lr * weight_decay * params.array() +
                    step_size * state.m.array() / (state.v.array().sqrt() + hyper.eps);
}

}  // namespace sparsereg
