#include "sparsereg/selfcheck.hpp"

#include <algorithm>
#include <cmath>

namespace sparsereg {

namespace {

Vec3 normal3(Rng& rng, double sd) {
  return {rng.normal(0.0, sd), rng.normal(0.0, sd), rng.normal(0.0, sd)};
}

RigidTransform random_pose(Rng& rng) {
  RigidTransform p;
  p.q = random_quaternion(rng);
  p.t = Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10));
  return p;
}

double min_abs(const Eigen::VectorXd& v) { return v.cwiseAbs().minCoeff(); }

// Central differences with step eps carry a truncation error of roughly
// (eps / d)^2 at distance d from a norm's kink, so points closer than
// kKinkMargin steps are redrawn.
constexpr double kKinkMargin = 300.0;

// Whether a raw output is at least `margin` (in raw units) from every kink of
// the loss: norm and absolute-value kinks, the hemisphere boundary and the
// alpha switch.
bool away_from_kinks(LossVariant variant, const LossWeights& w, double margin,
                     const RigidTransform& gt, const Vec7& out) {
  const Eigen::VectorXd dt = out.head<3>() - gt.t;
  Vec4 delta;
  double raw_scale = 1.0;  // a raw step eps moves the unit quaternion by eps / |q_raw|
  if (variant == LossVariant::QuatL2 || variant == LossVariant::QuatL1) {
    const Vec4 raw = out.tail<4>();
    raw_scale = raw.norm();
    if (raw_scale <= 1e-8) return false;
    const Vec4 unit = raw / raw_scale;
    const double dot = unit.dot(gt.q.coeffs());
    if (std::abs(dot) < 1e-3) return false;
    delta = gt.q.coeffs() - (dot < 0 ? -unit : unit);
  } else {
    const AxisAngle aa = quat_to_axis_angle(gt.q);
    delta = Vec4(aa.theta, aa.axis.x(), aa.axis.y(), aa.axis.z()) - out.tail<4>();
  }
  const bool l1 = variant == LossVariant::QuatL1 || variant == LossVariant::AxisAngleL1;
  if (l1 && (min_abs(dt) < margin || min_abs(delta) * raw_scale < margin)) return false;
  if (dt.norm() < margin || delta.norm() * raw_scale < margin) return false;
  return std::abs(delta.squaredNorm() - w.boost_threshold) > 1e-6;
}

// Output near the ground truth with a rotation offset spanning both sides of
// the alpha switch. Returns false when the point should be redrawn.
bool draw_loss_point(LossVariant variant, const LossWeights& w, double eps, Rng& rng,
                     RigidTransform& gt, Vec7& out) {
  gt = random_pose(rng);
  static constexpr double kSpreads[] = {0.002, 0.02, 0.3};
  const double spread = kSpreads[rng.index(3)];
  out.head<3>() = gt.t + normal3(rng, 2.0);
  if (variant == LossVariant::QuatL2 || variant == LossVariant::QuatL1) {
    Vec4 raw = gt.q.coeffs();
    for (int i = 0; i < 4; ++i) raw[i] += rng.normal(0.0, spread);
    raw *= rng.uniform(0.5, 2.0);
    if (rng.uniform() < 0.5) raw = -raw;  // exercises the hemisphere flip
    out.tail<4>() = raw;
  } else {
    const AxisAngle aa = quat_to_axis_angle(gt.q);
    Vec4 raw(aa.theta, aa.axis.x(), aa.axis.y(), aa.axis.z());
    for (int i = 0; i < 4; ++i) raw[i] += rng.normal(0.0, spread);
    out.tail<4>() = raw;
  }
  return away_from_kinks(variant, w, kKinkMargin * eps, gt, out);
}

}  // namespace

UnitQuaternion random_quaternion(Rng& rng) {
  Vec4 v;
  do {
    v = Vec4(rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1), rng.normal(0, 1));
  } while (v.norm() < 1e-6);
  return UnitQuaternion::from_vector(v);
}

CheckLine check_loss_identity(std::uint64_t seed, int pairs, double tol) {
  Rng rng(derive_seed(seed, 0x1d));
  double worst = 0.0;
  for (int k = 0; k < pairs;) {
    const UnitQuaternion a = random_quaternion(rng);
    const UnitQuaternion b = random_quaternion(rng);
    if (a.coeffs().dot(b.coeffs()) < 0.0) continue;
    const auto [l1, l2] = loss_rotation_identity_check(a, b);
    worst = std::max(worst, std::abs(l1 - l2));
    ++k;
  }
  return {"loss identity", worst, tol, worst < tol};
}

CheckLine check_loss_gradients(LossVariant variant, std::uint64_t seed, int points, double tol) {
  Rng rng(derive_seed(seed, 0x9a + static_cast<std::uint64_t>(variant)));
  const LossWeights w;
  const double eps = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < points;) {
    RigidTransform gt;
    Vec7 out;
    if (!draw_loss_point(variant, w, eps, rng, gt, out)) continue;
    const ValueAndGrad fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      const LossValue v = evaluate_loss(variant, x, gt, w);
      if (g) *g = v.grad;
      return v.total;
    };
    worst = std::max(worst, grad_check(fn, out, eps).max_rel_error);
    ++k;
  }
  return {"loss gradient " + std::string(to_string(variant)), worst, tol, worst < tol};
}

RegressorConfig tiny_network_config() {
  RegressorConfig c;
  c.input_resolution = 8;
  c.conv_spec = {{4, 3, 2}, {6, 3, 2}};
  c.fc_width = 16;
  return c;
}

CheckLine check_network_gradients(std::uint64_t seed, int points, double tol,
                                  double floor_fraction) {
  static constexpr LossVariant kVariants[] = {LossVariant::QuatL2, LossVariant::QuatL1,
                                              LossVariant::AxisAngleL2, LossVariant::AxisAngleL1};
  RegressorConfig config = tiny_network_config();
  const Eigen::Index pixels = static_cast<Eigen::Index>(config.input_resolution) *
                              config.input_resolution;
  const double eps = 1e-5;
  const double margin = kKinkMargin * eps;
  double worst = 0.0;
  Rng rng(derive_seed(seed, 0x7e70000ULL));
  for (int k = 0; k < points;) {
    config.loss_variant = kVariants[k % 4];
    const RegressorParams params = init_params(config, rng.next());
    Eigen::MatrixXd input(RegressorConfig::kInputChannels, pixels);
    for (Eigen::Index i = 0; i < input.size(); ++i) input(i) = rng.uniform(-1.0, 1.0);
    RigidTransform gt;
    gt.q = euler_to_quat({rng.uniform(-40, 40), rng.uniform(-20, 20), rng.uniform(-30, 30)});
    gt.t = Vec3(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    // A ReLU or loss kink inside the difference stencil is a point where the
    // function is not differentiable; redraw instead.
    ForwardCache cache;
    const Vec7 out = forward(config, params, input, &cache);
    if (cache.min_abs_preactivation < margin ||
        !away_from_kinks(config.loss_variant, config.loss_weights, margin, gt, out)) {
      continue;
    }
    const ValueAndGrad fn = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
      RegressorParams p = params;
      p.values = x;
      ExampleGradient r = example_gradient(config, p, input, gt);
      if (g) *g = std::move(r.grad);
      return r.loss.total;
    };
    worst = std::max(worst, grad_check(fn, params.values, eps, floor_fraction).max_rel_error);
    ++k;
  }
  return {"network gradient", worst, tol, worst < tol};
}

std::vector<CheckLine> run_loss_checks(std::uint64_t seed) {
  std::vector<CheckLine> out{check_loss_identity(seed)};
  for (LossVariant v : {LossVariant::QuatL2, LossVariant::QuatL1, LossVariant::AxisAngleL2,
                        LossVariant::AxisAngleL1}) {
    out.push_back(check_loss_gradients(v, seed));
  }
  out.push_back(check_network_gradients(seed));
  return out;
}

}  // namespace sparsereg
