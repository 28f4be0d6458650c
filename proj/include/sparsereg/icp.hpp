#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsereg/point_cloud.hpp"
#include "sparsereg/pose_math.hpp"

namespace sparsereg {

struct IcpConfig {
  int max_iterations = 100;
  double convergence_tol = 1e-4;  // mm, change in trimmed RMS residual
  double trim_fraction = 0.1;     // worst pooled matches dropped each iteration
  std::uint64_t seed = 0;         // reserved; the baseline starts from identity
};

struct IcpResult {
  RigidTransform transform;  // source -> target
  int iterations = 0;
  double final_residual = 0.0;  // trimmed RMS, mm
  bool converged = false;
  /// Residual at each matching step; non-increasing.
  std::vector<double> residual_history;
};

/// Trimmed point-to-point ICP from the identity. Each iteration matches every
/// transformed source point to its nearest target point and every target
/// point to its nearest transformed source point, keeps the best
/// (1 - trim_fraction) of the pooled matches and solves the rigid update in
/// closed form.
/// Throws TooFewPoints (< 10 points) or DegenerateGeometry (collinear matches).
IcpResult icp_register(const PointCloud& source, const PointCloud& target,
                       const IcpConfig& config = {});

/// Closed-form rigid transform minimizing sum |R a_i + t - b_i|^2 via SVD of
/// the cross-covariance with reflection correction.
RigidTransform fit_rigid(std::span<const Vec3> from, std::span<const Vec3> to);

/// Rotation error above which a registration counts as failed, degrees.
inline constexpr double kFailureThresholdDeg = 20.0;

/// Fraction of results whose rotation error exceeds the failure threshold.
double icp_failure_rate(std::span<const std::pair<IcpResult, RigidTransform>> results);

void to_json(nlohmann::json& j, const IcpResult& result);

}  // namespace sparsereg
