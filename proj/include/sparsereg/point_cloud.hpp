#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace sparsereg {

using Vec3 = Eigen::Vector3d;

/// Ordered list of 3D points in millimeters.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::string> id;
  std::optional<int> frame_index;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

Vec3 centroid(const PointCloud& cloud);

/// Throws EmptyCloud on empty input and InvalidArgument on non-finite coordinates.
void validate(const PointCloud& cloud);

}  // namespace sparsereg
