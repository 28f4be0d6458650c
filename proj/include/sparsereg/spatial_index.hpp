#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "sparsereg/point_cloud.hpp"

namespace sparsereg {

/// Voxel hash over a fixed point set for exact nearest-neighbor queries.
/// Immutable after construction; queries are safe from any thread.
class VoxelHashIndex {
 public:
  /// Cell size defaults to twice the median nearest-neighbor spacing.
  explicit VoxelHashIndex(std::span<const Vec3> points, double cell_size = 0.0);

  struct Hit {
    std::size_t index;
    double distance_sq;
  };

  /// Searches the 3x3x3 block around the query cell; the result is exact
  /// whenever the best distance found is within one cell, otherwise the
  /// query falls back to a linear scan.
  Hit nearest(const Vec3& query) const;

  double cell_size() const { return cell_; }

 private:
  std::int64_t key(long long ix, long long iy, long long iz) const;

  std::vector<Vec3> points_;
  double cell_ = 1.0;
  std::unordered_map<std::int64_t, std::vector<std::uint32_t>> cells_;
};

/// Median over points of the distance to their nearest other point.
double median_nn_spacing(std::span<const Vec3> points);

/// Uniform grid over x-y for fixed-radius neighbor queries.
class GridIndex2D {
 public:
  GridIndex2D(std::span<const Vec3> points, double cell_size);

  /// Calls fn(j) for every point j != self with planar distance <= radius.
  /// Pass self = SIZE_MAX to include all points.
  template <typename Fn>
  void for_each_within(const Vec3& center, double radius, std::size_t self, Fn&& fn) const {
    const double r2 = radius * radius;
    const long long reach = static_cast<long long>(std::ceil(radius / cell_));
    const long long cx = cell_coord(center.x(), min_x_);
    const long long cy = cell_coord(center.y(), min_y_);
    for (long long gy = cy - reach; gy <= cy + reach; ++gy) {
      if (gy < 0 || gy >= ny_) continue;
      for (long long gx = cx - reach; gx <= cx + reach; ++gx) {
        if (gx < 0 || gx >= nx_) continue;
        const std::size_t cell = static_cast<std::size_t>(gy * nx_ + gx);
        for (std::uint32_t k = starts_[cell]; k < starts_[cell + 1]; ++k) {
          const std::uint32_t j = order_[k];
          if (j == self) continue;
          const double dx = points_[j].x() - center.x();
          const double dy = points_[j].y() - center.y();
          if (dx * dx + dy * dy <= r2) fn(static_cast<std::size_t>(j));
        }
      }
    }
  }

  std::span<const Vec3> points() const { return points_; }

 private:
  long long cell_coord(double v, double lo) const {
    return static_cast<long long>(std::floor((v - lo) / cell_));
  }

  std::span<const Vec3> points_;
  double cell_ = 1.0;
  double min_x_ = 0.0, min_y_ = 0.0;
  long long nx_ = 1, ny_ = 1;
  std::vector<std::uint32_t> starts_;
  std::vector<std::uint32_t> order_;
};

}  // namespace sparsereg
