#include "sparsereg/icp.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sparsereg/error.hpp"
#include "sparsereg/spatial_index.hpp"

namespace sparsereg {

RigidTransform fit_rigid(std::span<const Vec3> from, std::span<const Vec3> to) {
  if (from.size() != to.size() || from.size() < 3) {
    fail(ErrorCode::TooFewPoints, "rigid fit needs >= 3 matched pairs");
  }
  const double n = static_cast<double>(from.size());
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    ca += from[i];
    cb += to[i];
  }
  ca /= n;
  cb /= n;
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < from.size(); ++i) {
    h += (from[i] - ca) * (to[i] - cb).transpose();
  }
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s[0] > 0.0) || s[1] <= 1e-10 * s[0]) {
    fail(ErrorCode::DegenerateGeometry, "matched points are collinear");
  }
  const Mat3 u = svd.matrixU();
  const Mat3 v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * d * u.transpose();

  RigidTransform out;
  out.q = matrix_to_quat(r);
  out.t = cb - rotate_point(out.q, ca);
  return out;
}

namespace {

// Registration state as one 7-vector (q_w, q_x, q_y, q_z, t) so that steps can
// be compared and extrapolated.
using State = Eigen::Matrix<double, 7, 1>;

State to_state(const RigidTransform& t, const State* hemisphere) {
  State s;
  s << t.q.w(), t.q.x(), t.q.y(), t.q.z(), t.t;
  if (hemisphere && s.head<4>().dot(hemisphere->head<4>()) < 0.0) s.head<4>() *= -1.0;
  return s;
}

RigidTransform from_state(const State& s) {
  RigidTransform t;
  t.q = UnitQuaternion::from_vector(s.head<4>());
  t.t = s.tail<3>();
  return t;
}

class Matcher {
 public:
  Matcher(const PointCloud& source, const PointCloud& target, double trim_fraction)
      : source_(source), target_(target), index_(target.points),
        // Rigid motion preserves spacing, so the source cell size is fixed.
        source_cell_(2.0 * median_nn_spacing(source.points)), n_(source.size()),
        moved_(n_), from_index_(n_ + target.size()), to_index_(n_ + target.size()),
        dist_sq_(n_ + target.size()), order_(n_ + target.size()) {
    const std::size_t total = n_ + target.size();
    keep_ = std::max<std::size_t>(
        3, total - static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(total))));
  }

  // Pairs every source point with its nearest target point and every target
  // point with its nearest moved source point; returns the trimmed RMS.
  double match(const RigidTransform& transform) {
    for (std::size_t i = 0; i < n_; ++i) {
      moved_[i] = transform.apply(source_.points[i]);
      const auto hit = index_.nearest(moved_[i]);
      from_index_[i] = i;
      to_index_[i] = hit.index;
      dist_sq_[i] = hit.distance_sq;
    }
    const VoxelHashIndex back(moved_, source_cell_);
    for (std::size_t j = 0; j < target_.size(); ++j) {
      const auto hit = back.nearest(target_.points[j]);
      from_index_[n_ + j] = hit.index;
      to_index_[n_ + j] = j;
      dist_sq_[n_ + j] = hit.distance_sq;
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return dist_sq_[a] < dist_sq_[b]; });
    double sum = 0.0;
    for (std::size_t k = 0; k < keep_; ++k) sum += dist_sq_[order_[k]];
    return std::sqrt(sum / static_cast<double>(keep_));
  }

  // Closed-form update over the kept pairs of the last match() call.
  RigidTransform update(const RigidTransform& transform) const {
    std::vector<Vec3> from(keep_), to(keep_);
    for (std::size_t k = 0; k < keep_; ++k) {
      from[k] = moved_[from_index_[order_[k]]];
      to[k] = target_.points[to_index_[order_[k]]];
    }
    return compose(fit_rigid(from, to), transform);
  }

 private:
  const PointCloud& source_;
  const PointCloud& target_;
  VoxelHashIndex index_;
  double source_cell_;
  std::size_t n_;
  std::size_t keep_ = 0;
  std::vector<Vec3> moved_;
  std::vector<std::size_t> from_index_, to_index_;
  std::vector<double> dist_sq_;
  std::vector<std::size_t> order_;
};

// Extrapolated step length along the latest direction, fitted to the last
// three residuals against arc length; 0 when no step is warranted.
double extrapolation_length(double d0, double d1, double d2, double len0, double len1) {
  const double v1 = -len0, v2 = -len0 - len1;
  const double v_max = 25.0 * len0;
  // Line through (v2, d2) and (0, d0).
  const double slope = (d0 - d2) / (0.0 - v2);
  const double linear = slope < 0.0 ? -d0 / slope : 0.0;
  // Parabola through the three points; vertex if convex.
  const double a = ((d1 - d0) / v1 - (d2 - d0) / v2) / (v1 - v2);
  const double b = (d1 - d0) / v1 - a * v1;
  const double vertex = a > 0.0 ? -b / (2.0 * a) : 0.0;
  if (vertex > 0.0 && vertex < linear && linear < v_max) return vertex;
  if (linear > 0.0 && linear < v_max) return linear;
  if (linear >= v_max) return v_max;
  return 0.0;
}

}  // namespace

IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpConfig& config) {
  if (source.size() < 10 || target.size() < 10) {
    fail(ErrorCode::TooFewPoints, "ICP needs >= 10 points in each cloud");
  }
  if (!(config.trim_fraction >= 0.0 && config.trim_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "trim_fraction must lie in [0, 1)");
  }
  constexpr double kAlignedCos = 0.98480775301220802;  // cos 10 deg

  Matcher matcher(source, target, config.trim_fraction);
  IcpResult result;
  double rms = matcher.match(result.transform);
  State prev_state = to_state(result.transform, nullptr);
  State prev_step = State::Zero();

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    result.iterations = iter;
    result.final_residual = rms;
    result.residual_history.push_back(rms);
    const std::size_t h = result.residual_history.size();
    if (h >= 2 && result.residual_history[h - 2] - rms < config.convergence_tol) {
      result.converged = true;
      break;
    }
    if (iter == config.max_iterations) break;

    RigidTransform next = matcher.update(result.transform);
    double next_rms = matcher.match(next);
    const State state = to_state(next, &prev_state);
    const State step = state - prev_state;

    // Accelerate when two consecutive steps point the same way; keep the
    // extrapolated state only if it lowers the residual.
    const double len0 = step.norm(), len1 = prev_step.norm();
    if (h >= 2 && len0 > 0.0 && len1 > 0.0 && step.dot(prev_step) > kAlignedCos * len0 * len1) {
      const double v = extrapolation_length(next_rms, rms, result.residual_history[h - 2],
                                            len0, len1);
      if (v > 0.0) {
        const RigidTransform jump = from_state(state + (v / len0) * step);
        const double jump_rms = matcher.match(jump);
        if (jump_rms < next_rms) {
          next = jump;
          next_rms = jump_rms;
        } else {
          matcher.match(next);
        }
      }
    }
    prev_step = to_state(next, &prev_state) - prev_state;
    prev_state = to_state(next, &prev_state);
    result.transform = next;
    rms = next_rms;
  }
  return result;
}

double icp_failure_rate(std::span<const std::pair<IcpResult, RigidTransform>> results) {
  if (results.empty()) fail(ErrorCode::InvalidArgument, "failure rate of empty batch");
  std::size_t failures = 0;
  for (const auto& [result, gt] : results) {
    if (rotation_error(gt.q, result.transform.q) > kFailureThresholdDeg) ++failures;
  }
  return static_cast<double>(failures) / static_cast<double>(results.size());
}

void to_json(nlohmann::json& j, const IcpResult& result) {
  j = nlohmann::json{{"transform", result.transform},
                     {"iterations", result.iterations},
                     {"final_residual", result.final_residual},
                     {"converged", result.converged}};
}

}  // namespace sparsereg
