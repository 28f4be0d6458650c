#include "sparsereg/loss.hpp"

#include <algorithm>
#include <cmath>

#include "sparsereg/error.hpp"

namespace sparsereg {

std::string_view to_string(LossVariant variant) {
  switch (variant) {
    case LossVariant::QuatL2: return "quat_l2";
    case LossVariant::QuatL1: return "quat_l1";
    case LossVariant::AxisAngleL2: return "aa_l2";
    case LossVariant::AxisAngleL1: return "aa_l1";
  }
  return "unknown";
}

LossVariant parse_loss_variant(std::string_view token) {
  for (auto v : {LossVariant::QuatL2, LossVariant::QuatL1, LossVariant::AxisAngleL2,
                 LossVariant::AxisAngleL1}) {
    if (token == to_string(v)) return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown loss variant '" + std::string(token) + "'");
}

PosePrediction PosePrediction::from_raw(const Vec3& t, const Vec4& q_raw) {
  if (!(q_raw.norm() > 1e-8)) fail(ErrorCode::ZeroQuaternion, "predicted quaternion is zero");
  PosePrediction p;
  p.t = t;
  p.q_raw = q_raw;
  p.q = UnitQuaternion::from_vector(q_raw);
  return p;
}

namespace {

enum class Norm { L1, L2 };

double signum(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Value of |d| and its gradient with respect to d; a zero argument yields the
// zero subgradient and raises the flag.
template <int N>
double norm_term(const Eigen::Matrix<double, N, 1>& d, Norm norm,
                 Eigen::Matrix<double, N, 1>& grad, bool& singular) {
  if (norm == Norm::L1) {
    grad = d.unaryExpr([](double v) { return signum(v); });
    if (d.isZero(0.0)) singular = true;
    return d.template lpNorm<1>();
  }
  const double n = d.norm();
  if (n == 0.0) {
    grad.setZero();
    singular = true;
    return 0.0;
  }
  grad = d / n;
  return n;
}

double schedule(double residual_sq, const LossWeights& w) {
  return residual_sq < w.boost_threshold ? w.alpha_boosted : w.alpha;
}

LossValue combine(const Vec3& t_pred, const Vec3& t_gt, const Vec4& r_gt, const Vec4& r_pred,
                  Norm norm, const LossWeights& w) {
  LossValue out;
  const Vec3 dt = t_pred - t_gt;
  const Vec4 dr = r_pred - r_gt;
  Vec3 gt_dt;
  Vec4 g_dr;
  out.translation_term = norm_term<3>(dt, norm, gt_dt, out.norm_singular);
  out.rotation_term = norm_term<4>(dr, norm, g_dr, out.norm_singular);
  out.alpha = schedule(dr.squaredNorm(), w);
  out.total = out.translation_term + out.alpha * out.rotation_term;
  out.grad.head<3>() = gt_dt;
  out.grad.tail<4>() = out.alpha * g_dr;
  return out;
}

LossValue quat_loss(const PosePrediction& pred, const RigidTransform& gt, Norm norm,
                    const LossWeights& w) {
  const Vec4 q_g = gt.q.coeffs();
  const double r = pred.q_raw.norm();
  const Vec4 q_unit = pred.q_raw / r;
  // Double-cover guard: difference against the representative nearest q_g.
  const double s = q_unit.dot(q_g) < 0.0 ? -1.0 : 1.0;
  LossValue out = combine(pred.t, gt.t, q_g, s * q_unit, norm, w);
  // Chain through q_aligned = s * q_raw / |q_raw|.
  const Vec4 g_unit = out.grad.tail<4>();
  out.grad.tail<4>() = s * (g_unit - q_unit * q_unit.dot(g_unit)) / r;
  return out;
}

Vec4 canonical_axis_angle(const UnitQuaternion& q) {
  const AxisAngle aa = quat_to_axis_angle(q);
  return {aa.theta, aa.axis.x(), aa.axis.y(), aa.axis.z()};
}

}  // namespace

LossValue loss_quat_l2(const PosePrediction& pred, const RigidTransform& gt, const LossWeights& w) {
  return quat_loss(pred, gt, Norm::L2, w);
}

LossValue loss_quat_l1(const PosePrediction& pred, const RigidTransform& gt, const LossWeights& w) {
  return quat_loss(pred, gt, Norm::L1, w);
}

LossValue loss_axis_angle_l2(const Vec3& t, const Vec4& aa_raw, const RigidTransform& gt,
                             const LossWeights& w) {
  return combine(t, gt.t, canonical_axis_angle(gt.q), aa_raw, Norm::L2, w);
}

LossValue loss_axis_angle_l1(const Vec3& t, const Vec4& aa_raw, const RigidTransform& gt,
                             const LossWeights& w) {
  return combine(t, gt.t, canonical_axis_angle(gt.q), aa_raw, Norm::L1, w);
}

LossValue evaluate_loss(LossVariant variant, const Vec7& output, const RigidTransform& gt,
                        const LossWeights& w) {
  const Vec3 t = output.head<3>();
  const Vec4 rot = output.tail<4>();
  switch (variant) {
    case LossVariant::QuatL2: return loss_quat_l2(PosePrediction::from_raw(t, rot), gt, w);
    case LossVariant::QuatL1: return loss_quat_l1(PosePrediction::from_raw(t, rot), gt, w);
    case LossVariant::AxisAngleL2: return loss_axis_angle_l2(t, rot, gt, w);
    case LossVariant::AxisAngleL1: return loss_axis_angle_l1(t, rot, gt, w);
  }
  fail(ErrorCode::InvalidArgument, "unknown loss variant");
}

UnitQuaternion decode_rotation(LossVariant variant, const Vec4& raw) {
  if (variant == LossVariant::QuatL2 || variant == LossVariant::QuatL1) {
    if (!(raw.norm() > 1e-8)) fail(ErrorCode::ZeroQuaternion, "predicted quaternion is zero");
    return UnitQuaternion::from_vector(raw);
  }
  const Vec3 v = raw.tail<3>();
  const double n = v.norm();
  if (!(n > 1e-12)) return UnitQuaternion::identity();
  const double half = 0.5 * raw[0];
  const Vec3 axis = v / n;
  return UnitQuaternion::from_components(std::cos(half), std::sin(half) * axis.x(),
                                         std::sin(half) * axis.y(), std::sin(half) * axis.z());
}

std::pair<double, double> loss_rotation_identity_check(const UnitQuaternion& q_g,
                                                       const UnitQuaternion& q_p) {
  const Vec4 q_e = quat_compose(q_g, quat_inverse(q_p)).coeffs();
  const double loss1 = (q_e - Vec4(1, 0, 0, 0)).squaredNorm();
  const double loss2 = (q_g.coeffs() - q_p.coeffs()).squaredNorm();
  return {loss1, loss2};
}

GradCheckResult grad_check(const ValueAndGrad& fn, const Eigen::VectorXd& point, double eps,
                           double floor_fraction) {
  Eigen::VectorXd analytic(point.size());
  fn(point, &analytic);
  Eigen::VectorXd numeric(point.size());
  Eigen::VectorXd x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    x[i] = point[i] + eps;
    const double up = fn(x, nullptr);
    x[i] = point[i] - eps;
    const double down = fn(x, nullptr);
    x[i] = point[i];
    numeric[i] = (up - down) / (2.0 * eps);
  }
  const double floor = std::max(floor_fraction * numeric.lpNorm<Eigen::Infinity>(), 1e-300);
  GradCheckResult result;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double a = analytic[i], n = numeric[i];
    const double rel = std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = i;
    }
  }
  return result;
}

}  // namespace sparsereg
