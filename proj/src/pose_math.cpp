#include "sparsereg/pose_math.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

#include "sparsereg/error.hpp"

namespace sparsereg {

Vec4 canonicalize(const Vec4& q) {
  if (q[0] > 0.0) return q;
  if (q[0] < 0.0) return -q;
  for (int i = 1; i < 4; ++i) {
    if (q[i] > 0.0) return q;
    if (q[i] < 0.0) {
      Vec4 out = -q;
      out[0] = 0.0;  // avoid -0.0
      return out;
    }
  }
  return q;
}

UnitQuaternion UnitQuaternion::from_components(double w, double x, double y, double z) {
  return from_vector(Vec4(w, x, y, z));
}

UnitQuaternion UnitQuaternion::from_vector(const Vec4& wxyz) {
  const double n = wxyz.norm();
  if (!(n > 1e-12) || !std::isfinite(n)) {
    fail(ErrorCode::ZeroQuaternion, "quaternion norm too small to normalize");
  }
  const Vec4 c = canonicalize(wxyz / n);
  UnitQuaternion q;
  q.w_ = c[0];
  q.x_ = c[1];
  q.y_ = c[2];
  q.z_ = c[3];
  return q;
}

UnitQuaternion quat_compose(const UnitQuaternion& a, const UnitQuaternion& b) {
  const Vec3 av = a.vec();
  const Vec3 bv = b.vec();
  const double w = a.w() * b.w() - av.dot(bv);
  const Vec3 v = a.w() * bv + b.w() * av + av.cross(bv);
  return UnitQuaternion::from_components(w, v.x(), v.y(), v.z());
}

UnitQuaternion quat_inverse(const UnitQuaternion& q) {
  return UnitQuaternion::from_components(q.w(), -q.x(), -q.y(), -q.z());
}

Vec3 rotate_point(const UnitQuaternion& q, const Vec3& p) {
  // q p q^-1 expanded for a unit quaternion.
  const Vec3 u = q.vec();
  const Vec3 uv = u.cross(p);
  return p + 2.0 * q.w() * uv + 2.0 * u.cross(uv);
}

UnitQuaternion axis_angle_to_quat(const AxisAngle& aa) {
  const double half = 0.5 * aa.theta;
  const Vec3 axis = aa.axis.normalized();
  const double s = std::sin(half);
  return UnitQuaternion::from_components(std::cos(half), s * axis.x(), s * axis.y(),
                                         s * axis.z());
}

AxisAngle quat_to_axis_angle(const UnitQuaternion& q) {
  const Vec3 v = q.vec();
  const double vn = v.norm();
  AxisAngle aa;
  // atan2 keeps full precision near the identity where acos(w) does not.
  aa.theta = 2.0 * std::atan2(vn, q.w());
  if (aa.theta > 1e-15 && vn > 0.0) {
    aa.axis = v / vn;
  } else {
    aa.theta = 0.0;
    aa.axis = Vec3::UnitZ();
  }
  return aa;
}

UnitQuaternion euler_to_quat(const EulerAngles& e) {
  const auto qz = axis_angle_to_quat({deg_to_rad(e.roll), Vec3::UnitZ()});
  const auto qx = axis_angle_to_quat({deg_to_rad(e.pitch), Vec3::UnitX()});
  const auto qy = axis_angle_to_quat({deg_to_rad(e.yaw), Vec3::UnitY()});
  return quat_compose(qy, quat_compose(qx, qz));
}

EulerAngles quat_to_euler(const UnitQuaternion& q) {
  // R = Ry(yaw) Rx(pitch) Rz(roll):
  //   R(1,2) = -sin(pitch), R(1,0) = cos(pitch) sin(roll), R(1,1) = cos(pitch) cos(roll),
  //   R(0,2) = sin(yaw) cos(pitch), R(2,2) = cos(yaw) cos(pitch).
  const Mat3 r = quat_to_matrix(q);
  EulerAngles e;
  e.pitch = rad_to_deg(std::asin(std::clamp(-r(1, 2), -1.0, 1.0)));
  e.roll = rad_to_deg(std::atan2(r(1, 0), r(1, 1)));
  e.yaw = rad_to_deg(std::atan2(r(0, 2), r(2, 2)));
  return e;
}

Mat3 quat_to_matrix(const UnitQuaternion& q) {
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

UnitQuaternion matrix_to_quat(const Mat3& r) {
  const Eigen::Quaterniond q(r);
  return UnitQuaternion::from_components(q.w(), q.x(), q.y(), q.z());
}

double rotation_error(const UnitQuaternion& q_g, const UnitQuaternion& q_p) {
  const UnitQuaternion qe = quat_compose(q_g, quat_inverse(q_p));
  // Equivalent to 2 acos(|w|) for unit quaternions; |w| resolves double cover.
  return rad_to_deg(2.0 * std::atan2(qe.vec().norm(), std::abs(qe.w())));
}

double translation_error(const Vec3& t_g, const Vec3& t_p) { return (t_g - t_p).norm(); }

Vec3 RigidTransform::apply(const Vec3& p) const { return rotate_point(q, p) + t; }

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.q = quat_inverse(q);
  inv.t = -rotate_point(inv.q, t);
  return inv;
}

RigidTransform compose(const RigidTransform& b, const RigidTransform& a) {
  RigidTransform out;
  out.q = quat_compose(b.q, a.q);
  out.t = rotate_point(b.q, a.t) + b.t;
  return out;
}

PointCloud apply_transform(const RigidTransform& transform, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = transform.apply(p);
  return out;
}

void to_json(nlohmann::json& j, const RigidTransform& transform) {
  j = nlohmann::json{{"t", {transform.t.x(), transform.t.y(), transform.t.z()}},
                     {"q", {transform.q.w(), transform.q.x(), transform.q.y(), transform.q.z()}}};
}

void from_json(const nlohmann::json& j, RigidTransform& transform) {
  const auto& t = j.at("t");
  const auto& q = j.at("q");
  if (t.size() != 3 || q.size() != 4) {
    fail(ErrorCode::CorruptDataset, "transform JSON needs t[3] and q[4]");
  }
  transform.t = Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>());
  transform.q = UnitQuaternion::from_components(q[0].get<double>(), q[1].get<double>(),
                                                q[2].get<double>(), q[3].get<double>());
}

}  // namespace sparsereg
