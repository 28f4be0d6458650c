#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsereg/loss.hpp"
#include "sparsereg/network.hpp"
#include "sparsereg/rng.hpp"

namespace sparsereg {

struct CheckLine {
  std::string name;
  double value = 0.0;  // worst observed error
  double tolerance = 0.0;
  bool pass = false;
};

/// Random canonical unit quaternion (uniform on the sphere, w >= 0).
UnitQuaternion random_quaternion(Rng& rng);

/// max |loss1 - loss2| over `pairs` random canonical same-hemisphere pairs.
CheckLine check_loss_identity(std::uint64_t seed, int pairs = 10000, double tol = 1e-12);

/// Worst central-difference relative error of the loss gradient w.r.t. the
/// 7 raw outputs over `points` random points kept away from kinks, the
/// hemisphere boundary and the alpha switch.
CheckLine check_loss_gradients(LossVariant variant, std::uint64_t seed, int points = 100,
                               double tol = 1e-5);

/// Small network used for the full finite-difference check: 8 x 8 input,
/// two stride-2 convolutions, fc width 16.
RegressorConfig tiny_network_config();

/// Worst relative error of the full network gradient over every parameter at
/// `points` random (params, input, pose) points, cycling the loss variants.
/// Components below floor_fraction of the largest numeric component are
/// compared against that floor.
CheckLine check_network_gradients(std::uint64_t seed, int points = 100, double tol = 1e-4,
                                  double floor_fraction = 0.0);

/// Everything above with default sizes.
std::vector<CheckLine> run_loss_checks(std::uint64_t seed);

}  // namespace sparsereg
