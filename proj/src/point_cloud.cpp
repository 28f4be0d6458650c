#include "sparsereg/point_cloud.hpp"

#include "sparsereg/error.hpp"

namespace sparsereg {

Vec3 centroid(const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "centroid of empty cloud");
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return sum / static_cast<double>(cloud.size());
}

void validate(const PointCloud& cloud) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "cloud has no points");
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) fail(ErrorCode::InvalidArgument, "cloud has non-finite coordinates");
  }
}

}  // namespace sparsereg
