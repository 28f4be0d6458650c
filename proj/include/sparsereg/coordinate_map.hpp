#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

#include "sparsereg/point_cloud.hpp"

namespace sparsereg {

enum class Exec { Serial, Parallel };

/// Rasterization settings. Defaults place a 180 mm face across ~200 px at 256.
struct RasterConfig {
  int resolution = 256;
  double scale = 0.9;  // mm per pixel
  int neighbors = 4;
  double gap_limit = 6.0;  // px
};

/// resolution x resolution grid of X, Y, Z planes with a validity mask.
/// Pixel (row, col) has its center at
///   origin + ((col - res/2 + 0.5) * scale, (row - res/2 + 0.5) * scale).
/// Masked pixels hold 0 in every plane.
struct CoordinateMap {
  int resolution = 0;
  double scale = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::vector<double> x, y, z;
  std::vector<std::uint8_t> mask;

  static CoordinateMap blank(int resolution, double scale, const Eigen::Vector2d& origin);

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * resolution + col;
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(resolution) * resolution; }
  std::size_t valid_count() const;
};

struct DepthMap {
  int resolution = 0;
  double scale = 1.0;
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::vector<double> depth;
  std::vector<std::uint8_t> mask;

  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * resolution + col;
  }
  std::size_t valid_count() const;
};

/// Per-pixel nearest point plus convex-support occupancy, before interpolation.
struct Occupancy {
  CoordinateMap map;
  /// Inclusive column span of the convex hull of occupied pixels for each
  /// row; empty rows have first > last.
  std::vector<int> hull_first, hull_last;
};

/// Orthographic projection along z onto a grid centered on the cloud's x-y
/// centroid (snapped to the pixel pitch). Occupied pixels store the point
/// nearest their center; throws EmptyCloud or InvalidArgument.
Occupancy project_occupancy(const PointCloud& cloud, const RasterConfig& config);

/// Full rasterization: occupancy followed by inverse-distance-weighted
/// filling of unoccupied pixels inside the convex support, using up to
/// config.neighbors nearest occupied pixels within config.gap_limit.
CoordinateMap rasterize_coordinate_map(const PointCloud& cloud, const RasterConfig& config,
                                       Exec exec = Exec::Parallel);
CoordinateMap rasterize_coordinate_map(const PointCloud& cloud, int resolution, double scale,
                                       Exec exec = Exec::Parallel);

DepthMap to_depth_map(const CoordinateMap& map);

/// Block average over valid pixels; throws BadFactor unless factor >= 1
/// divides the resolution.
CoordinateMap downsample_map(const CoordinateMap& map, int factor);

}  // namespace sparsereg
