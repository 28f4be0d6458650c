#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <numbers>

#include "sparsereg/point_cloud.hpp"

namespace sparsereg {

using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = std::numbers::pi;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

/// Sign-resolves a quaternion (w, x, y, z) onto the w >= 0 hemisphere. When
/// w == 0 the first nonzero imaginary component is made positive.
Vec4 canonicalize(const Vec4& q);

/// Rotation as a unit quaternion in canonical form. Every constructor
/// normalizes and canonicalizes, so the invariants hold for all instances.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;

  /// Throws ZeroQuaternion when the norm is below 1e-12.
  static UnitQuaternion from_components(double w, double x, double y, double z);
  static UnitQuaternion from_vector(const Vec4& wxyz);
  static UnitQuaternion identity() { return {}; }

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Vec4 coeffs() const { return {w_, x_, y_, z_}; }
  Vec3 vec() const { return {x_, y_, z_}; }

  bool operator==(const UnitQuaternion&) const = default;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

/// Angle in radians, in [0, pi], about a unit axis.
struct AxisAngle {
  double theta = 0.0;
  Vec3 axis = Vec3::UnitZ();
};

/// Roll about z, pitch about x, yaw about y, in degrees. Applied to points
/// extrinsically in the order roll, pitch, yaw: R = Ry(yaw) Rx(pitch) Rz(roll).
struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

/// p' = q p q^-1 + t, translation in millimeters.
struct RigidTransform {
  Vec3 t = Vec3::Zero();
  UnitQuaternion q;

  static RigidTransform identity() { return {}; }
  Vec3 apply(const Vec3& p) const;
  RigidTransform inverse() const;
};

/// Hamilton product a*b: rotation b followed by a.
UnitQuaternion quat_compose(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion quat_inverse(const UnitQuaternion& q);
Vec3 rotate_point(const UnitQuaternion& q, const Vec3& p);

UnitQuaternion axis_angle_to_quat(const AxisAngle& aa);
/// Null rotations map to theta = 0 about (0, 0, 1).
AxisAngle quat_to_axis_angle(const UnitQuaternion& q);

UnitQuaternion euler_to_quat(const EulerAngles& e);
/// Inverse of euler_to_quat for |pitch| < 90 degrees.
EulerAngles quat_to_euler(const UnitQuaternion& q);

Mat3 quat_to_matrix(const UnitQuaternion& q);
/// Nearest rotation for a proper orthonormal matrix.
UnitQuaternion matrix_to_quat(const Mat3& r);

/// Angle in degrees, in [0, 180], of q_g * q_p^-1.
double rotation_error(const UnitQuaternion& q_g, const UnitQuaternion& q_p);
/// Euclidean distance in millimeters.
double translation_error(const Vec3& t_g, const Vec3& t_p);

/// Transform b applied after a.
RigidTransform compose(const RigidTransform& b, const RigidTransform& a);
PointCloud apply_transform(const RigidTransform& transform, const PointCloud& cloud);

void to_json(nlohmann::json& j, const RigidTransform& transform);
void from_json(const nlohmann::json& j, RigidTransform& transform);

}  // namespace sparsereg
