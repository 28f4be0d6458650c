#pragma once

#include <Eigen/Core>

namespace sparsereg {

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
};

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState adam_init(Eigen::Index size);

/// One Adam update with the bias correction folded into the step size,
///   theta -= lr * sqrt(1 - b2^t) / (1 - b1^t) * m / (sqrt(v) + eps),
/// plus decoupled weight decay theta -= lr * weight_decay * theta evaluated
/// at the pre-step parameters. Throws ShapeMismatch.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
               double weight_decay, const AdamHyper& hyper = {});

}  // namespace sparsereg
