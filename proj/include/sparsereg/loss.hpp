#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "sparsereg/pose_math.hpp"

namespace sparsereg {

using Vec7 = Eigen::Matrix<double, 7, 1>;

enum class LossVariant { QuatL2, QuatL1, AxisAngleL2, AxisAngleL1 };

/// Tokens: quat_l2, quat_l1, aa_l2, aa_l1.
std::string_view to_string(LossVariant variant);
/// Throws InvalidArgument on an unknown token.
LossVariant parse_loss_variant(std::string_view token);

/// Network output (t, q_raw) with the normalized rotation.
struct PosePrediction {
  Vec3 t = Vec3::Zero();
  Vec4 q_raw = Vec4(1, 0, 0, 0);
  UnitQuaternion q;

  /// Throws ZeroQuaternion when |q_raw| <= 1e-8.
  static PosePrediction from_raw(const Vec3& t, const Vec4& q_raw);
};

struct LossWeights {
  double alpha = 500.0;
  double alpha_boosted = 1e4;
  double boost_threshold = 1e-4;  // on the squared rotation residual

  bool operator==(const LossWeights&) const = default;
};

struct LossValue {
  double total = 0.0;
  double translation_term = 0.0;
  double rotation_term = 0.0;
  double alpha = 0.0;  // the scheduled weight actually used
  /// d total / d (t, rotation slice); the rotation slice is q_raw for the
  /// quaternion forms and the raw (theta, v) 4-vector for axis-angle forms.
  Vec7 grad = Vec7::Zero();
  /// Set when a norm argument was exactly zero and the zero subgradient was used.
  bool norm_singular = false;
};

/// |t_g - t_p|_2 + alpha |q_g - q_p|_2, with q_p moved onto the hemisphere of q_g.
LossValue loss_quat_l2(const PosePrediction& pred, const RigidTransform& gt,
                       const LossWeights& w = {});
/// |t_g - t_p|_1 + alpha |q_g - q_p|_1.
LossValue loss_quat_l1(const PosePrediction& pred, const RigidTransform& gt,
                       const LossWeights& w = {});
/// Translation term plus alpha times the norm of the raw (theta, v) difference
/// to the canonical ground-truth axis-angle. The predicted axis is not
/// normalized.
LossValue loss_axis_angle_l2(const Vec3& t, const Vec4& aa_raw, const RigidTransform& gt,
                             const LossWeights& w = {});
LossValue loss_axis_angle_l1(const Vec3& t, const Vec4& aa_raw, const RigidTransform& gt,
                             const LossWeights& w = {});

/// Dispatches on the variant; output = (t, 4 rotation values).
LossValue evaluate_loss(LossVariant variant, const Vec7& output, const RigidTransform& gt,
                        const LossWeights& w = {});

/// The rotation a raw output encodes under the variant. Axis-angle outputs
/// with a zero axis decode to the identity.
UnitQuaternion decode_rotation(LossVariant variant, const Vec4& raw);

/// loss1 = |q_g * q_p^-1 - (1,0,0,0)|^2 and loss2 = |q_g - q_p|^2. For
/// same-hemisphere inputs both equal 2 - 2 cos(theta_e / 2).
std::pair<double, double> loss_rotation_identity_check(const UnitQuaternion& q_g,
                                                       const UnitQuaternion& q_p);

/// Value and gradient of a scalar function; grad may be null.
using ValueAndGrad = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  Eigen::Index worst_index = 0;
};

/// Compares the analytic gradient with central differences per coordinate.
/// Relative error is |a - n| / max(|a|, |n|, floor) where floor is
/// floor_fraction times the largest numeric component (or 1e-300).
GradCheckResult grad_check(const ValueAndGrad& fn, const Eigen::VectorXd& point,
                           double eps = 1e-5, double floor_fraction = 0.0);

}  // namespace sparsereg
