#include "sparsereg/network.hpp"

#include <cmath>
#include <limits>

#include "sparsereg/error.hpp"
#include "sparsereg/rng.hpp"

namespace sparsereg {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void RegressorConfig::validate() const {
  if (output_dim != 7) fail(ErrorCode::ShapeMismatch, "output_dim must be 7");
  if (input_resolution < 1 || fc_width < 1 || conv_spec.empty()) {
    fail(ErrorCode::ShapeMismatch, "network dimensions must be positive");
  }
  for (const auto& c : conv_spec) {
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) {
      fail(ErrorCode::ShapeMismatch, "conv layer dimensions must be positive");
    }
  }
  if (raster_resolution < input_resolution || raster_resolution % input_resolution != 0) {
    fail(ErrorCode::ShapeMismatch, "raster_resolution must be a multiple of input_resolution");
  }
  if (!(lr > 0.0) || !(weight_decay >= 0.0) || batch_size < 1 || epochs < 0) {
    fail(ErrorCode::InvalidArgument, "lr, weight_decay, batch_size or epochs out of range");
  }
  if (!(lr_min_fraction > 0.0 && lr_min_fraction <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "lr_min_fraction must lie in (0, 1]");
  }
  if (!(refine_fraction >= 0.0 && refine_fraction <= 1.0) || !(refine_max_deg >= 0.0) ||
      !(refine_max_mm >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "refinement settings out of range");
  }
  if (!(loss_weights.alpha > 0.0) || loss_weights.alpha_boosted < loss_weights.alpha) {
    fail(ErrorCode::InvalidArgument, "loss weights need alpha_boosted >= alpha > 0");
  }
}

void to_json(nlohmann::json& j, const RegressorConfig& c) {
  nlohmann::json conv = nlohmann::json::array();
  for (const auto& s : c.conv_spec) conv.push_back({s.out_channels, s.kernel, s.stride});
  j = nlohmann::json{{"input_resolution", c.input_resolution},
                     {"conv_spec", conv},
                     {"fc_width", c.fc_width},
                     {"output_dim", c.output_dim},
                     {"lr", c.lr},
                     {"lr_min_fraction", c.lr_min_fraction},
                     {"weight_decay", c.weight_decay},
                     {"batch_size", c.batch_size},
                     {"epochs", c.epochs},
                     {"seed", c.seed},
                     {"loss_variant", to_string(c.loss_variant)},
                     {"alpha", c.loss_weights.alpha},
                     {"alpha_boosted", c.loss_weights.alpha_boosted},
                     {"boost_threshold", c.loss_weights.boost_threshold},
                     {"raster_resolution", c.raster_resolution},
                     {"raster_scale", c.raster_scale},
                     {"coordinate_scale", c.coordinate_scale},
                     {"refine_fraction", c.refine_fraction},
                     {"refine_max_deg", c.refine_max_deg},
                     {"refine_max_mm", c.refine_max_mm}};
}

void from_json(const nlohmann::json& j, RegressorConfig& c) {
  c.input_resolution = j.at("input_resolution").get<int>();
  c.conv_spec.clear();
  for (const auto& s : j.at("conv_spec")) {
    c.conv_spec.push_back({s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()});
  }
  c.fc_width = j.at("fc_width").get<int>();
  c.output_dim = j.at("output_dim").get<int>();
  c.lr = j.at("lr").get<double>();
  c.lr_min_fraction = j.at("lr_min_fraction").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.loss_variant = parse_loss_variant(j.at("loss_variant").get<std::string>());
  c.loss_weights.alpha = j.at("alpha").get<double>();
  c.loss_weights.alpha_boosted = j.at("alpha_boosted").get<double>();
  c.loss_weights.boost_threshold = j.at("boost_threshold").get<double>();
  c.raster_resolution = j.at("raster_resolution").get<int>();
  c.raster_scale = j.at("raster_scale").get<double>();
  c.coordinate_scale = j.at("coordinate_scale").get<double>();
  c.refine_fraction = j.at("refine_fraction").get<double>();
  c.refine_max_deg = j.at("refine_max_deg").get<double>();
  c.refine_max_mm = j.at("refine_max_mm").get<double>();
}

const ParamSlice& RegressorParams::slice(std::string_view name) const {
  for (const auto& s : slices) {
    if (s.name == name) return s;
  }
  fail(ErrorCode::InvalidArgument, "no parameter slice '" + std::string(name) + "'");
}

namespace {

int conv_output_size(int in, const ConvSpec& c) {
  const int pad = c.kernel / 2;
  return (in + 2 * pad - c.kernel) / c.stride + 1;
}

// columns(ci*k*k + kr*k + kc, orow*out + ocol) = input(ci, irow*in + icol)
void im2col(const MatrixXd& input, int in, const ConvSpec& c, int out, MatrixXd& columns) {
  const int k = c.kernel, pad = k / 2;
  const Index channels = input.rows();
  columns.setZero(channels * k * k, static_cast<Index>(out) * out);
  for (int orow = 0; orow < out; ++orow) {
    for (int ocol = 0; ocol < out; ++ocol) {
      const Index col = static_cast<Index>(orow) * out + ocol;
      for (int kr = 0; kr < k; ++kr) {
        const int irow = orow * c.stride + kr - pad;
        if (irow < 0 || irow >= in) continue;
        for (int kc = 0; kc < k; ++kc) {
          const int icol = ocol * c.stride + kc - pad;
          if (icol < 0 || icol >= in) continue;
          const Index src = static_cast<Index>(irow) * in + icol;
          for (Index ci = 0; ci < channels; ++ci) {
            columns((ci * k + kr) * k + kc, col) = input(ci, src);
          }
        }
      }
    }
  }
}

// Adjoint of im2col.
void col2im(const MatrixXd& columns, int in, const ConvSpec& c, int out, MatrixXd& grad_input) {
  const int k = c.kernel, pad = k / 2;
  const Index channels = grad_input.rows();
  grad_input.setZero();
  for (int orow = 0; orow < out; ++orow) {
    for (int ocol = 0; ocol < out; ++ocol) {
      const Index col = static_cast<Index>(orow) * out + ocol;
      for (int kr = 0; kr < k; ++kr) {
        const int irow = orow * c.stride + kr - pad;
        if (irow < 0 || irow >= in) continue;
        for (int kc = 0; kc < k; ++kc) {
          const int icol = ocol * c.stride + kc - pad;
          if (icol < 0 || icol >= in) continue;
          const Index dst = static_cast<Index>(irow) * in + icol;
          for (Index ci = 0; ci < channels; ++ci) {
            grad_input(ci, dst) += columns((ci * k + kr) * k + kc, col);
          }
        }
      }
    }
  }
}

Eigen::Map<const MatrixXd> weights(const RegressorParams& p, std::size_t slice) {
  const ParamSlice& s = p.slices[slice];
  return {p.values.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const VectorXd> bias(const RegressorParams& p, std::size_t slice) {
  const ParamSlice& s = p.slices[slice];
  return {p.values.data() + s.offset, s.rows};
}

void check_params(const RegressorParams& params, const NetworkShape& shape) {
  if (params.values.size() != shape.parameter_count || params.slices.size() != shape.slices.size()) {
    fail(ErrorCode::ShapeMismatch, "parameters do not match the network config");
  }
}

}  // namespace

NetworkShape network_shape(const RegressorConfig& config) {
  config.validate();
  NetworkShape shape;
  int size = config.input_resolution;
  int channels = RegressorConfig::kInputChannels;
  Index offset = 0;
  const auto add = [&](std::string name, Index rows, Index cols) {
    shape.slices.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  for (std::size_t i = 0; i < config.conv_spec.size(); ++i) {
    const ConvSpec& c = config.conv_spec[i];
    shape.sizes.push_back(size);
    const std::string prefix = "conv" + std::to_string(i);
    add(prefix + ".weight", c.out_channels, static_cast<Index>(channels) * c.kernel * c.kernel);
    add(prefix + ".bias", c.out_channels, 1);
    size = conv_output_size(size, c);
    if (size < 1) fail(ErrorCode::ShapeMismatch, "conv stack shrinks the map below one pixel");
    channels = c.out_channels;
  }
  shape.sizes.push_back(size);
  shape.flat_features = channels * size * size;
  add("fc0.weight", config.fc_width, shape.flat_features);
  add("fc0.bias", config.fc_width, 1);
  add("fc1.weight", config.output_dim, config.fc_width);
  add("fc1.bias", config.output_dim, 1);
  shape.parameter_count = offset;
  return shape;
}

RegressorParams zero_params(const RegressorConfig& config) {
  NetworkShape shape = network_shape(config);
  RegressorParams p;
  p.values = VectorXd::Zero(shape.parameter_count);
  p.slices = std::move(shape.slices);
  return p;
}

RegressorParams init_params(const RegressorConfig& config, std::uint64_t seed) {
  RegressorParams p = zero_params(config);
  Rng rng(derive_seed(seed, 0x1417));
  const std::size_t last_weight = p.slices.size() - 2;
  for (std::size_t i = 0; i < p.slices.size(); i += 2) {
    const ParamSlice& s = p.slices[i];
    const double fan_in = static_cast<double>(s.cols);
    const double gain = i == last_weight ? 1.0 : 2.0;
    const double bound = std::sqrt(3.0 * gain / fan_in);
    for (Index k = 0; k < s.size(); ++k) p.values[s.offset + k] = rng.uniform(-bound, bound);
  }
  if (config.loss_variant == LossVariant::QuatL2 || config.loss_variant == LossVariant::QuatL1) {
    p.values[p.slices.back().offset + 3] = 1.0;
  }
  return p;
}

Vec7 forward(const RegressorConfig& config, const RegressorParams& params, const MatrixXd& input,
             ForwardCache* cache) {
  const NetworkShape shape = network_shape(config);
  check_params(params, shape);
  const Index pixels = static_cast<Index>(config.input_resolution) * config.input_resolution;
  if (input.rows() != RegressorConfig::kInputChannels || input.cols() != pixels) {
    fail(ErrorCode::ShapeMismatch, "input must be 8 x resolution^2");
  }
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  const std::size_t layers = config.conv_spec.size();
  fc.columns.resize(layers);
  fc.activations.resize(layers);
  fc.min_abs_preactivation = std::numeric_limits<double>::infinity();

  const MatrixXd* a = &input;
  for (std::size_t i = 0; i < layers; ++i) {
    const int in = shape.sizes[i], out = shape.sizes[i + 1];
    im2col(*a, in, config.conv_spec[i], out, fc.columns[i]);
    MatrixXd z = weights(params, 2 * i) * fc.columns[i];
    z.colwise() += bias(params, 2 * i + 1);
    fc.min_abs_preactivation = std::min(fc.min_abs_preactivation, z.cwiseAbs().minCoeff());
    fc.activations[i] = z.cwiseMax(0.0);
    a = &fc.activations[i];
  }
  const Eigen::Map<const VectorXd> flat(a->data(), a->size());
  const VectorXd h = weights(params, 2 * layers) * flat + bias(params, 2 * layers + 1);
  fc.min_abs_preactivation = std::min(fc.min_abs_preactivation, h.cwiseAbs().minCoeff());
  fc.hidden = h.cwiseMax(0.0);
  return weights(params, 2 * layers + 2) * fc.hidden + bias(params, 2 * layers + 3);
}

void backward(const RegressorConfig& config, const RegressorParams& params,
              const ForwardCache& cache, const Vec7& grad_output, Eigen::Ref<VectorXd> grad) {
  const NetworkShape shape = network_shape(config);
  check_params(params, shape);
  if (grad.size() != shape.parameter_count) fail(ErrorCode::ShapeMismatch, "gradient size");
  const std::size_t layers = config.conv_spec.size();
  const auto grad_slice = [&](std::size_t i) {
    const ParamSlice& s = params.slices[i];
    return Eigen::Map<MatrixXd>(grad.data() + s.offset, s.rows, s.cols);
  };

  // Output layer.
  grad_slice(2 * layers + 2).noalias() += grad_output * cache.hidden.transpose();
  grad_slice(2 * layers + 3) += grad_output;
  VectorXd d_hidden = weights(params, 2 * layers + 2).transpose() * grad_output;
  d_hidden = d_hidden.cwiseProduct((cache.hidden.array() > 0.0).cast<double>().matrix());

  // Hidden fc layer.
  const MatrixXd& last = cache.activations.back();
  const Eigen::Map<const VectorXd> flat(last.data(), last.size());
  grad_slice(2 * layers).noalias() += d_hidden * flat.transpose();
  grad_slice(2 * layers + 1) += d_hidden;
  VectorXd d_flat = weights(params, 2 * layers).transpose() * d_hidden;
  MatrixXd d_act = Eigen::Map<MatrixXd>(d_flat.data(), last.rows(), last.cols());

  for (std::size_t i = layers; i-- > 0;) {
    const MatrixXd d_z =
        d_act.cwiseProduct((cache.activations[i].array() > 0.0).cast<double>().matrix());
    grad_slice(2 * i).noalias() += d_z * cache.columns[i].transpose();
    grad_slice(2 * i + 1) += d_z.rowwise().sum();
    if (i == 0) break;
    const MatrixXd d_cols = weights(params, 2 * i).transpose() * d_z;
    d_act.setZero(cache.activations[i - 1].rows(), cache.activations[i - 1].cols());
    col2im(d_cols, shape.sizes[i], config.conv_spec[i], shape.sizes[i + 1], d_act);
  }
}

ExampleGradient example_gradient(const RegressorConfig& config, const RegressorParams& params,
                                 const MatrixXd& input, const RigidTransform& gt,
                                 double loss_scale) {
  ForwardCache cache;
  const Vec7 out = forward(config, params, input, &cache);
  ExampleGradient result;
  result.loss = evaluate_loss(config.loss_variant, out, gt, config.loss_weights);
  result.grad = VectorXd::Zero(params.values.size());
  backward(config, params, cache, loss_scale * result.loss.grad, result.grad);
  return result;
}

}  // namespace sparsereg
