#include "sparsereg/coordinate_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsereg/error.hpp"
#include "sparsereg/kernels.hpp"

namespace sparsereg {

namespace {

struct PixelPoint {
  long long col;
  long long row;
};

long long cross(const PixelPoint& o, const PixelPoint& a, const PixelPoint& b) {
  return (a.col - o.col) * (b.row - o.row) - (a.row - o.row) * (b.col - o.col);
}

// Andrew's monotone chain; returns the hull counter-clockwise without repeats.
std::vector<PixelPoint> convex_hull(std::vector<PixelPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](const PixelPoint& a, const PixelPoint& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  if (pts.size() < 3) return pts;
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    const auto& p = pts[i];
    while (k >= t && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

void hull_spans(const std::vector<PixelPoint>& hull, int resolution, std::vector<int>& first,
                std::vector<int>& last) {
  first.assign(resolution, std::numeric_limits<int>::max());
  last.assign(resolution, std::numeric_limits<int>::min());
  const std::size_t n = hull.size();
  for (std::size_t i = 0; i < n; ++i) {
    const PixelPoint& a = hull[i];
    const PixelPoint& b = hull[(i + 1) % n];
    const long long r0 = std::min(a.row, b.row);
    const long long r1 = std::max(a.row, b.row);
    for (long long r = r0; r <= r1; ++r) {
      double lo, hi;
      if (a.row == b.row) {
        lo = static_cast<double>(std::min(a.col, b.col));
        hi = static_cast<double>(std::max(a.col, b.col));
      } else {
        const double s = static_cast<double>(r - a.row) / static_cast<double>(b.row - a.row);
        lo = hi = static_cast<double>(a.col) + s * static_cast<double>(b.col - a.col);
      }
      const int c0 = static_cast<int>(std::ceil(lo - 1e-9));
      const int c1 = static_cast<int>(std::floor(hi + 1e-9));
      first[r] = std::min(first[r], c0);
      last[r] = std::max(last[r], c1);
    }
  }
}

}  // namespace

CoordinateMap CoordinateMap::blank(int resolution, double scale, const Eigen::Vector2d& origin) {
  CoordinateMap m;
  m.resolution = resolution;
  m.scale = scale;
  m.origin = origin;
  const std::size_t n = m.pixel_count();
  m.x.assign(n, 0.0);
  m.y.assign(n, 0.0);
  m.z.assign(n, 0.0);
  m.mask.assign(n, 0);
  return m;
}

std::size_t CoordinateMap::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Occupancy project_occupancy(const PointCloud& cloud, const RasterConfig& config) {
  validate(cloud);
  if (config.resolution < 16 || !(config.scale > 0.0)) {
    fail(ErrorCode::InvalidArgument, "raster resolution must be >= 16 and scale positive");
  }
  const int res = config.resolution;
  const double scale = config.scale;
  const Vec3 c = centroid(cloud);
  const Eigen::Vector2d origin(std::round(c.x() / scale) * scale,
                               std::round(c.y() / scale) * scale);

  Occupancy occ;
  occ.map = CoordinateMap::blank(res, scale, origin);
  std::vector<double> best(occ.map.pixel_count(), std::numeric_limits<double>::infinity());
  const double half = 0.5 * res;

  for (const auto& p : cloud.points) {
    const double u = (p.x() - origin.x()) / scale + half;
    const double v = (p.y() - origin.y()) / scale + half;
    if (!(u >= 0.0 && u < res && v >= 0.0 && v < res)) continue;
    const int col = static_cast<int>(std::floor(u));
    const int row = static_cast<int>(std::floor(v));
    const double du = u - (col + 0.5);
    const double dv = v - (row + 0.5);
    const double d2 = du * du + dv * dv;
    const std::size_t idx = occ.map.index(row, col);
    if (d2 < best[idx]) {
      best[idx] = d2;
      occ.map.x[idx] = p.x();
      occ.map.y[idx] = p.y();
      occ.map.z[idx] = p.z();
      occ.map.mask[idx] = 1;
    }
  }

  std::vector<PixelPoint> occupied;
  for (int row = 0; row < res; ++row) {
    for (int col = 0; col < res; ++col) {
      if (occ.map.mask[occ.map.index(row, col)]) occupied.push_back({col, row});
    }
  }
  hull_spans(convex_hull(std::move(occupied)), res, occ.hull_first, occ.hull_last);
  return occ;
}

CoordinateMap rasterize_coordinate_map(const PointCloud& cloud, const RasterConfig& config,
                                       Exec exec) {
  const Occupancy occ = project_occupancy(cloud, config);
  CoordinateMap out = occ.map;
  if (exec == Exec::Serial) {
    kernels::fill_idw_serial(occ, config, out);
  } else {
    kernels::fill_idw_omp(occ, config, out);
  }
  return out;
}

CoordinateMap rasterize_coordinate_map(const PointCloud& cloud, int resolution, double scale,
                                       Exec exec) {
  RasterConfig config;
  config.resolution = resolution;
  config.scale = scale;
  return rasterize_coordinate_map(cloud, config, exec);
}

DepthMap to_depth_map(const CoordinateMap& map) {
  DepthMap d;
  d.resolution = map.resolution;
  d.scale = map.scale;
  d.origin = map.origin;
  d.depth = map.z;
  d.mask = map.mask;
  return d;
}

CoordinateMap downsample_map(const CoordinateMap& map, int factor) {
  if (factor < 1 || map.resolution % factor != 0) {
    fail(ErrorCode::BadFactor, "factor " + std::to_string(factor) + " does not divide resolution " +
                                   std::to_string(map.resolution));
  }
  if (factor == 1) return map;
  const int res = map.resolution / factor;
  CoordinateMap out = CoordinateMap::blank(res, map.scale * factor, map.origin);
  for (int row = 0; row < res; ++row) {
    for (int col = 0; col < res; ++col) {
      double sx = 0.0, sy = 0.0, sz = 0.0;
      int n = 0;
      for (int dr = 0; dr < factor; ++dr) {
        for (int dc = 0; dc < factor; ++dc) {
          const std::size_t src = map.index(row * factor + dr, col * factor + dc);
          if (!map.mask[src]) continue;
          sx += map.x[src];
          sy += map.y[src];
          sz += map.z[src];
          ++n;
        }
      }
      if (n == 0) continue;
      const std::size_t dst = out.index(row, col);
      out.x[dst] = sx / n;
      out.y[dst] = sy / n;
      out.z[dst] = sz / n;
      out.mask[dst] = 1;
    }
  }
  return out;
}

}  // namespace sparsereg
