#pragma once

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the two produce bit-identical results and the serial one
// is what the tests compare against.

#include <cstdint>
#include <span>
#include <vector>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/network.hpp"
#include "sparsereg/point_cloud.hpp"

namespace sparsereg {
class GridIndex2D;
}

namespace sparsereg::kernels {

/// Inverse-distance fill of unoccupied pixels inside the hull spans.
/// `out` must start as a copy of occ.map.
void fill_idw_serial(const Occupancy& occ, const RasterConfig& config, CoordinateMap& out);
void fill_idw_omp(const Occupancy& occ, const RasterConfig& config, CoordinateMap& out);

struct DenoiseDecisions {
  std::vector<double> z;                // updated z per point
  std::vector<std::uint8_t> changed;    // 1 where |z - z_m| > threshold
  std::vector<int> neighbor_count;      // neighbors within radius, self excluded
};

/// Single pass over a snapshot: neighbor means come from the input z only.
DenoiseDecisions denoise_serial(std::span<const Vec3> points, const GridIndex2D& index,
                                double radius, double threshold);
DenoiseDecisions denoise_omp(std::span<const Vec3> points, const GridIndex2D& index,
                             double radius, double threshold);

struct TrainingExample {
  Eigen::MatrixXd input;
  RigidTransform gt_centered;  // target for the network
};

struct BatchGradient {
  double loss_sum = 0.0;
  Eigen::VectorXd grad;  // mean over the batch
};

/// Mean gradient over examples[batch[i]]. Per-example gradients are summed in
/// batch order, so both versions are bit-identical for any thread count.
BatchGradient batch_gradient_serial(const RegressorConfig& config, const RegressorParams& params,
                                    std::span<const TrainingExample> examples,
                                    std::span<const std::size_t> batch);
BatchGradient batch_gradient_omp(const RegressorConfig& config, const RegressorParams& params,
                                 std::span<const TrainingExample> examples,
                                 std::span<const std::size_t> batch);

}  // namespace sparsereg::kernels
