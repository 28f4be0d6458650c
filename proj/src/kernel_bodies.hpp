#pragma once

// Per-element bodies shared by the serial and OpenMP kernels so both paths
// run identical arithmetic.

#include <algorithm>
#include <cmath>
#include <vector>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/kernels.hpp"
#include "sparsereg/spatial_index.hpp"

namespace sparsereg::kernels::detail {

struct Offset {
  int dr;
  int dc;
  double dist_sq;
};

/// Offsets within the gap limit, nearest first; ties in row-major order.
inline std::vector<Offset> sorted_offsets(double gap_limit) {
  const int reach = static_cast<int>(std::floor(gap_limit));
  const double limit_sq = gap_limit * gap_limit;
  std::vector<Offset> out;
  for (int dr = -reach; dr <= reach; ++dr) {
    for (int dc = -reach; dc <= reach; ++dc) {
      const double d2 = static_cast<double>(dr * dr + dc * dc);
      if (d2 == 0.0 || d2 > limit_sq) continue;
      out.push_back({dr, dc, d2});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Offset& a, const Offset& b) { return a.dist_sq < b.dist_sq; });
  return out;
}

inline void fill_pixel(const CoordinateMap& src, const std::vector<Offset>& offsets, int k,
                       int row, int col, CoordinateMap& out) {
  const int res = src.resolution;
  double wsum = 0.0, sx = 0.0, sy = 0.0, sz = 0.0;
  int found = 0;
  for (const Offset& o : offsets) {
    const int r = row + o.dr;
    const int c = col + o.dc;
    if (r < 0 || r >= res || c < 0 || c >= res) continue;
    const std::size_t idx = src.index(r, c);
    if (!src.mask[idx]) continue;
    const double w = 1.0 / o.dist_sq;
    wsum += w;
    sx += w * src.x[idx];
    sy += w * src.y[idx];
    sz += w * src.z[idx];
    if (++found == k) break;
  }
  if (found == 0) return;
  const std::size_t dst = out.index(row, col);
  out.x[dst] = sx / wsum;
  out.y[dst] = sy / wsum;
  out.z[dst] = sz / wsum;
  out.mask[dst] = 1;
}

inline void fill_row(const Occupancy& occ, const std::vector<Offset>& offsets, int k, int row,
                     CoordinateMap& out) {
  const int first = std::max(occ.hull_first[row], 0);
  const int last = std::min(occ.hull_last[row], occ.map.resolution - 1);
  for (int col = first; col <= last; ++col) {
    if (occ.map.mask[occ.map.index(row, col)]) continue;
    fill_pixel(occ.map, offsets, k, row, col, out);
  }
}

inline void denoise_point(std::span<const Vec3> points, const GridIndex2D& index, double radius,
                          double threshold, std::size_t i, DenoiseDecisions& out) {
  double sum = 0.0;
  int count = 0;
  index.for_each_within(points[i], radius, i, [&](std::size_t j) {
    sum += points[j].z();
    ++count;
  });
  out.neighbor_count[i] = count;
  out.z[i] = points[i].z();
  out.changed[i] = 0;
  if (count == 0) return;
  const double z_mean = sum / count;
  if (std::abs(points[i].z() - z_mean) > threshold) {
    out.z[i] = z_mean;
    out.changed[i] = 1;
  }
}

inline void example_slot(const RegressorConfig& config, const RegressorParams& params,
                         std::span<const TrainingExample> examples,
                         std::span<const std::size_t> batch, std::size_t i,
                         std::vector<double>& losses, std::vector<Eigen::VectorXd>& grads) {
  const TrainingExample& ex = examples[batch[i]];
  const double scale = 1.0 / static_cast<double>(batch.size());
  ExampleGradient g = example_gradient(config, params, ex.input, ex.gt_centered, scale);
  losses[i] = g.loss.total;
  grads[i] = std::move(g.grad);
}

// Sums the per-example slots in batch order.
inline BatchGradient reduce_slots(const std::vector<double>& losses,
                                  const std::vector<Eigen::VectorXd>& grads, Eigen::Index size) {
  BatchGradient out;
  out.grad = Eigen::VectorXd::Zero(size);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    out.loss_sum += losses[i];
    out.grad += grads[i];
  }
  return out;
}

inline DenoiseDecisions make_decisions(std::size_t n) {
  DenoiseDecisions d;
  d.z.resize(n);
  d.changed.resize(n);
  d.neighbor_count.resize(n);
  return d;
}

}  // namespace sparsereg::kernels::detail
