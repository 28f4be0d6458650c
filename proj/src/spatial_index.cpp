#include "sparsereg/spatial_index.hpp"

#include <algorithm>
#include <limits>

#include "sparsereg/error.hpp"

namespace sparsereg {

double median_nn_spacing(std::span<const Vec3> points) {
  const std::size_t n = points.size();
  if (n < 2) return 1.0;
  // Subsample queries on large sets; the median is stable well before 2000.
  const std::size_t stride = std::max<std::size_t>(1, n / 2000);
  std::vector<double> nn;
  nn.reserve(n / stride + 1);
  for (std::size_t i = 0; i < n; i += stride) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, (points[i] - points[j]).squaredNorm());
    }
    nn.push_back(best);
  }
  auto mid = nn.begin() + static_cast<std::ptrdiff_t>(nn.size() / 2);
  std::nth_element(nn.begin(), mid, nn.end());
  const double spacing = std::sqrt(*mid);
  return spacing > 1e-9 ? spacing : 1.0;
}

VoxelHashIndex::VoxelHashIndex(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()) {
  if (points_.empty()) fail(ErrorCode::EmptyCloud, "spatial index over empty cloud");
  cell_ = cell_size > 0.0 ? cell_size : 2.0 * median_nn_spacing(points_);
  cells_.reserve(points_.size());
  for (std::uint32_t i = 0; i < points_.size(); ++i) {
    const Vec3& p = points_[i];
    cells_[key(static_cast<long long>(std::floor(p.x() / cell_)),
               static_cast<long long>(std::floor(p.y() / cell_)),
               static_cast<long long>(std::floor(p.z() / cell_)))]
        .push_back(i);
  }
}

std::int64_t VoxelHashIndex::key(long long ix, long long iy, long long iz) const {
  constexpr long long kOffset = 1LL << 20;
  const auto ux = static_cast<std::uint64_t>(ix + kOffset) & 0x1FFFFF;
  const auto uy = static_cast<std::uint64_t>(iy + kOffset) & 0x1FFFFF;
  const auto uz = static_cast<std::uint64_t>(iz + kOffset) & 0x1FFFFF;
  return static_cast<std::int64_t>((ux << 42) | (uy << 21) | uz);
}

VoxelHashIndex::Hit VoxelHashIndex::nearest(const Vec3& query) const {
  const long long cx = static_cast<long long>(std::floor(query.x() / cell_));
  const long long cy = static_cast<long long>(std::floor(query.y() / cell_));
  const long long cz = static_cast<long long>(std::floor(query.z() / cell_));
  Hit best{0, std::numeric_limits<double>::infinity()};
  for (long long dx = -1; dx <= 1; ++dx) {
    for (long long dy = -1; dy <= 1; ++dy) {
      for (long long dz = -1; dz <= 1; ++dz) {
        const auto it = cells_.find(key(cx + dx, cy + dy, cz + dz));
        if (it == cells_.end()) continue;
        for (const std::uint32_t j : it->second) {
          const double d2 = (points_[j] - query).squaredNorm();
          if (d2 < best.distance_sq || (d2 == best.distance_sq && j < best.index)) {
            best = {j, d2};
          }
        }
      }
    }
  }
  // Anything outside the block is at least one cell away.
  if (best.distance_sq <= cell_ * cell_) return best;

  best = {0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < points_.size(); ++j) {
    const double d2 = (points_[j] - query).squaredNorm();
    if (d2 < best.distance_sq) best = {j, d2};
  }
  return best;
}

GridIndex2D::GridIndex2D(std::span<const Vec3> points, double cell_size)
    : points_(points), cell_(cell_size > 0.0 ? cell_size : 1.0) {
  if (points_.empty()) {
    starts_.assign(2, 0);
    return;
  }
  double max_x = points_[0].x(), max_y = points_[0].y();
  min_x_ = max_x;
  min_y_ = max_y;
  for (const auto& p : points_) {
    min_x_ = std::min(min_x_, p.x());
    min_y_ = std::min(min_y_, p.y());
    max_x = std::max(max_x, p.x());
    max_y = std::max(max_y, p.y());
  }
  nx_ = cell_coord(max_x, min_x_) + 1;
  ny_ = cell_coord(max_y, min_y_) + 1;
  const std::size_t cells = static_cast<std::size_t>(nx_ * ny_);
  std::vector<std::uint32_t> counts(cells + 1, 0);
  std::vector<std::uint32_t> cell_of(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    const auto c = static_cast<std::uint32_t>(cell_coord(points_[i].y(), min_y_) * nx_ +
                                              cell_coord(points_[i].x(), min_x_));
    cell_of[i] = c;
    ++counts[c + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) counts[c + 1] += counts[c];
  starts_ = counts;
  order_.resize(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    order_[counts[cell_of[i]]++] = static_cast<std::uint32_t>(i);
  }
}

}  // namespace sparsereg
