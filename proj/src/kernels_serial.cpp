#include "kernel_bodies.hpp"

namespace sparsereg::kernels {

void fill_idw_serial(const Occupancy& occ, const RasterConfig& config, CoordinateMap& out) {
  const auto offsets = detail::sorted_offsets(config.gap_limit);
  for (int row = 0; row < occ.map.resolution; ++row) {
    detail::fill_row(occ, offsets, config.neighbors, row, out);
  }
}

DenoiseDecisions denoise_serial(std::span<const Vec3> points, const GridIndex2D& index,
                                double radius, double threshold) {
  auto out = detail::make_decisions(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    detail::denoise_point(points, index, radius, threshold, i, out);
  }
  return out;
}

BatchGradient batch_gradient_serial(const RegressorConfig& config, const RegressorParams& params,
                                    std::span<const TrainingExample> examples,
                                    std::span<const std::size_t> batch) {
  std::vector<double> losses(batch.size());
  std::vector<Eigen::VectorXd> grads(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    detail::example_slot(config, params, examples, batch, i, losses, grads);
  }
  return detail::reduce_slots(losses, grads, params.values.size());
}

}  // namespace sparsereg::kernels
