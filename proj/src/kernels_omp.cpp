#include <omp.h>

#include <exception>

#include "kernel_bodies.hpp"

namespace sparsereg::kernels {

void fill_idw_omp(const Occupancy& occ, const RasterConfig& config, CoordinateMap& out) {
  const auto offsets = detail::sorted_offsets(config.gap_limit);
  const int res = occ.map.resolution;
  // Rows write disjoint pixels and read only the occupancy snapshot.
#pragma omp parallel for schedule(dynamic, 8)
  for (int row = 0; row < res; ++row) {
    detail::fill_row(occ, offsets, config.neighbors, row, out);
  }
}

DenoiseDecisions denoise_omp(std::span<const Vec3> points, const GridIndex2D& index,
                             double radius, double threshold) {
  auto out = detail::make_decisions(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    detail::denoise_point(points, index, radius, threshold, static_cast<std::size_t>(i), out);
  }
  return out;
}

BatchGradient batch_gradient_omp(const RegressorConfig& config, const RegressorParams& params,
                                 std::span<const TrainingExample> examples,
                                 std::span<const std::size_t> batch) {
  std::vector<double> losses(batch.size());
  std::vector<Eigen::VectorXd> grads(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
  // Exceptions cannot cross the parallel region; the first one is rethrown.
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      detail::example_slot(config, params, examples, batch, static_cast<std::size_t>(i), losses,
                           grads);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return detail::reduce_slots(losses, grads, params.values.size());
}

}  // namespace sparsereg::kernels
