#pragma once

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sparsereg/loss.hpp"

namespace sparsereg {

struct ConvSpec {
  int out_channels = 8;
  int kernel = 3;
  int stride = 2;

  bool operator==(const ConvSpec&) const = default;
};

struct RegressorConfig {
  /// Source X, Y, Z, mask then target X, Y, Z, mask.
  static constexpr int kInputChannels = 8;

  int input_resolution = 32;
  std::vector<ConvSpec> conv_spec{{8, 3, 2}, {16, 3, 2}, {32, 3, 2}};
  int fc_width = 128;
  int output_dim = 7;
  double lr = 0.01;
  /// Cosine decay per epoch from lr down to lr * lr_min_fraction; 1 keeps lr constant.
  double lr_min_fraction = 0.01;
  double weight_decay = 5e-5;
  int batch_size = 32;
  int epochs = 30;
  std::uint64_t seed = 0;
  LossVariant loss_variant = LossVariant::QuatL2;
  LossWeights loss_weights;
  /// Maps are rasterized at raster_resolution and block-averaged down to
  /// input_resolution.
  int raster_resolution = 256;
  double raster_scale = 0.9;
  double coordinate_scale = 1.0 / 50.0;  // mm -> network units
  /// Share of training pairs that also contribute a refinement example: the
  /// source re-posed near the target by a random residual of at most
  /// refine_max_deg and refine_max_mm per axis, as seen by a second pass.
  double refine_fraction = 1.0;
  double refine_max_deg = 20.0;
  double refine_max_mm = 5.0;

  /// Throws ShapeMismatch or InvalidArgument.
  void validate() const;
  bool operator==(const RegressorConfig&) const = default;
};

void to_json(nlohmann::json& j, const RegressorConfig& config);
void from_json(const nlohmann::json& j, RegressorConfig& config);

struct ParamSlice {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 1;

  Eigen::Index size() const { return rows * cols; }
};

/// Flat parameter vector with named slices conv<i>.weight, conv<i>.bias,
/// fc0.weight, fc0.bias, fc1.weight, fc1.bias. Weights are column-major
/// (out x in) matrices.
struct RegressorParams {
  Eigen::VectorXd values;
  std::vector<ParamSlice> slices;

  const ParamSlice& slice(std::string_view name) const;
};

/// Slice layout and spatial sizes implied by a config.
struct NetworkShape {
  std::vector<int> sizes;  // spatial size entering each conv, then after the last
  int flat_features = 0;
  std::vector<ParamSlice> slices;
  Eigen::Index parameter_count = 0;
};

NetworkShape network_shape(const RegressorConfig& config);

/// Fan-in scaled uniform weights (He bound for ReLU layers, LeCun bound for
/// the output layer), zero biases; the quaternion variants start with an
/// output bias of (1, 0, 0, 0) on the rotation slice.
RegressorParams init_params(const RegressorConfig& config, std::uint64_t seed);
RegressorParams zero_params(const RegressorConfig& config);

/// Activations kept by forward for backward.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> columns;      // im2col matrix per conv
  std::vector<Eigen::MatrixXd> activations;  // post-ReLU output per conv
  Eigen::VectorXd hidden;                    // post-ReLU fc0 output
  /// Smallest |pre-activation| over every ReLU, i.e. the distance to a kink.
  double min_abs_preactivation = 0.0;
};

/// input: kInputChannels x (res * res), pixel index row * res + col.
/// Throws ShapeMismatch.
Vec7 forward(const RegressorConfig& config, const RegressorParams& params,
             const Eigen::MatrixXd& input, ForwardCache* cache = nullptr);

/// Accumulates d loss / d params into grad given d loss / d output.
void backward(const RegressorConfig& config, const RegressorParams& params,
              const ForwardCache& cache, const Vec7& grad_output, Eigen::Ref<Eigen::VectorXd> grad);

struct ExampleGradient {
  LossValue loss;
  Eigen::VectorXd grad;
};

/// Forward, loss under config.loss_variant scaled by loss_scale, and backward.
ExampleGradient example_gradient(const RegressorConfig& config, const RegressorParams& params,
                                 const Eigen::MatrixXd& input, const RigidTransform& gt,
                                 double loss_scale = 1.0);

}  // namespace sparsereg
