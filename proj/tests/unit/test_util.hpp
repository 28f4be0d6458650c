#pragma once

#include <Eigen/Geometry>

#include "sparsereg/pose_math.hpp"
#include "sparsereg/rng.hpp"

namespace testutil {

using sparsereg::Rng;
using sparsereg::UnitQuaternion;
using sparsereg::Vec3;

// Eigen's own axis-angle quaternion, independent of pose_math.
inline UnitQuaternion eigen_rot(const Vec3& axis, double radians) {
  const Eigen::Quaterniond q(Eigen::AngleAxisd(radians, axis.normalized()));
  return UnitQuaternion::from_components(q.w(), q.x(), q.y(), q.z());
}

inline Vec3 random_axis(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline UnitQuaternion random_rotation(Rng& rng) {
  return eigen_rot(random_axis(rng), rng.uniform(0.0, sparsereg::kPi));
}

}  // namespace testutil
