#include "sparsereg/regressor.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>

#include "sparsereg/adam.hpp"
#include "sparsereg/error.hpp"
#include "sparsereg/rng.hpp"

namespace sparsereg {

namespace {

PointCloud shifted(const PointCloud& cloud, const Vec3& offset) {
  PointCloud out = cloud;
  for (auto& p : out.points) p -= offset;
  return out;
}

void write_channels(const CoordinateMap& map, double coord_scale, int first,
                    Eigen::MatrixXd& input) {
  for (std::size_t i = 0; i < map.pixel_count(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    input(first, col) = map.x[i] * coord_scale;
    input(first + 1, col) = map.y[i] * coord_scale;
    input(first + 2, col) = map.z[i] * coord_scale;
    input(first + 3, col) = map.mask[i] ? 1.0 : 0.0;
  }
}

CoordinateMap network_map(const PointCloud& centered, const RegressorConfig& config, Exec exec) {
  RasterConfig raster;
  raster.resolution = config.raster_resolution;
  raster.scale = config.raster_scale;
  const CoordinateMap full = rasterize_coordinate_map(centered, raster, exec);
  return downsample_map(full, config.raster_resolution / config.input_resolution);
}

struct Encoded {
  kernels::TrainingExample example;
  RigidTransform gt;
  Vec3 source_centroid;
  Vec3 target_centroid;
  bool validation = false;
};

Encoded encode_example(const PointCloud& source, const PointCloud& target,
                       const RigidTransform& gt, const RegressorConfig& config, bool validation) {
  const EncodedPair enc = encode_pair(source, target, config);
  Encoded e;
  e.example.input = enc.input;
  e.example.gt_centered = center_transform(gt, enc.source_centroid, enc.target_centroid);
  e.gt = gt;
  e.source_centroid = enc.source_centroid;
  e.target_centroid = enc.target_centroid;
  e.validation = validation;
  return e;
}

// Random axis, angle uniform in [0, refine_max_deg], translation uniform per axis.
RigidTransform draw_residual(Rng& rng, const RegressorConfig& config) {
  Vec3 axis;
  do {
    axis = Vec3(rng.normal(0.0, 1.0), rng.normal(0.0, 1.0), rng.normal(0.0, 1.0));
  } while (axis.norm() < 1e-9);
  RigidTransform r;
  r.q = axis_angle_to_quat({deg_to_rad(rng.uniform(0.0, config.refine_max_deg)), axis.normalized()});
  const double m = config.refine_max_mm;
  r.t = Vec3(rng.uniform(-m, m), rng.uniform(-m, m), rng.uniform(-m, m));
  return r;
}

}  // namespace

EncodedPair encode_pair(const PointCloud& source, const PointCloud& target,
                        const RegressorConfig& config, Exec exec) {
  config.validate();
  EncodedPair out;
  out.source_centroid = centroid(source);
  out.target_centroid = centroid(target);
  const int res = config.input_resolution;
  out.input.resize(RegressorConfig::kInputChannels, static_cast<Eigen::Index>(res) * res);
  write_channels(network_map(shifted(source, out.source_centroid), config, exec),
                 config.coordinate_scale, 0, out.input);
  write_channels(network_map(shifted(target, out.target_centroid), config, exec),
                 config.coordinate_scale, 4, out.input);
  return out;
}

RigidTransform center_transform(const RigidTransform& transform, const Vec3& source_centroid,
                                const Vec3& target_centroid) {
  RigidTransform out = transform;
  out.t = rotate_point(transform.q, source_centroid) + transform.t - target_centroid;
  return out;
}

RigidTransform uncenter_transform(const RigidTransform& centered, const Vec3& source_centroid,
                                  const Vec3& target_centroid) {
  RigidTransform out = centered;
  out.t = centered.t + target_centroid - rotate_point(centered.q, source_centroid);
  return out;
}

RigidTransform decode_output(LossVariant variant, const Vec7& output) {
  RigidTransform t;
  t.t = output.head<3>();
  t.q = decode_rotation(variant, output.tail<4>());
  return t;
}

RigidTransform predict(const Regressor& model, const PointCloud& source, const PointCloud& target) {
  const EncodedPair enc = encode_pair(source, target, model.config);
  const Vec7 out = forward(model.config, model.params, enc.input);
  if (!out.allFinite()) fail(ErrorCode::NumericFailure, "network output is not finite");
  return uncenter_transform(decode_output(model.config.loss_variant, out), enc.source_centroid,
                            enc.target_centroid);
}

TwiceResult register_twice(const Regressor& model, const PointCloud& source,
                           const PointCloud& target) {
  TwiceResult r;
  r.first = predict(model, source, target);
  r.second = predict(model, apply_transform(r.first, source), target);
  r.combined = compose(r.second, r.first);
  return r;
}

void write_report_csv(const std::filesystem::path& path, const TrainReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "epoch,loss_variant,mean_loss,val_mean_theta_deg,val_mean_t_mm\n";
  char line[256];
  for (const auto& e : report.epochs) {
    std::snprintf(line, sizeof(line), "%d,%s,%.10g,%.10g,%.10g\n", e.epoch,
                  std::string(to_string(report.loss_variant)).c_str(), e.mean_loss,
                  e.val_mean_theta, e.val_mean_t);
    out << line;
  }
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

double epoch_learning_rate(const RegressorConfig& config, int epoch) {
  if (config.epochs <= 1) return config.lr;
  const double progress = static_cast<double>(epoch - 1) / static_cast<double>(config.epochs - 1);
  const double floor = config.lr * config.lr_min_fraction;
  return floor + 0.5 * (config.lr - floor) * (1.0 + std::cos(kPi * progress));
}

std::vector<std::string> validation_identities(const PairSet& data, std::uint64_t seed) {
  std::set<std::string> unique;
  for (const auto& p : data.pairs) unique.insert(p.identity);
  std::vector<std::string> ids(unique.begin(), unique.end());
  if (ids.size() < 2) {
    fail(ErrorCode::EmptyDataset, "an identity split needs at least two identities");
  }
  Rng rng(derive_seed(seed, 0x5b11));
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.index(i + 1)]);
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(ids.size()))));
  ids.resize(count);
  std::sort(ids.begin(), ids.end());
  return ids;
}

TrainResult train(const RegressorConfig& config, const PairSet& data, const TrainOptions& options) {
  config.validate();
  if (data.pairs.empty()) fail(ErrorCode::EmptyDataset, "no training pairs");
  TrainResult result;
  result.model.config = config;
  TrainReport& report = result.report;
  report.loss_variant = config.loss_variant;
  report.validation_identities = validation_identities(data, config.seed);
  const std::set<std::string> held_out(report.validation_identities.begin(),
                                       report.validation_identities.end());

  // Slot 2i holds pair i, slot 2i + 1 its refinement example if drawn.
  std::vector<Encoded> encoded(2 * data.pairs.size());
  std::vector<char> present(encoded.size(), 0);
  std::exception_ptr error;
  const auto n = static_cast<std::ptrdiff_t>(data.pairs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      const RegistrationPair& pair = data.pairs[i];
      const bool validation = held_out.count(pair.identity) > 0;
      encoded[2 * i] = encode_example(pair.source, pair.target, pair.gt, config, validation);
      present[2 * i] = 1;
      Rng rng(derive_seed(config.seed ^ 0x4ef1e0ULL, static_cast<std::uint64_t>(i)));
      if (validation || !(rng.uniform() < config.refine_fraction)) continue;
      const RigidTransform residual = draw_residual(rng, config);
      const PointCloud moved = apply_transform(compose(residual, pair.gt), pair.source);
      encoded[2 * i + 1] = encode_example(moved, pair.target, residual.inverse(), config, false);
      present[2 * i + 1] = 1;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);

  std::vector<kernels::TrainingExample> examples;
  std::vector<std::size_t> train_index, val_index;
  for (std::size_t i = 0; i < encoded.size(); ++i) {
    if (!present[i]) continue;
    (encoded[i].validation ? val_index : train_index).push_back(examples.size());
    examples.push_back(encoded[i].example);
  }
  {
    std::vector<Encoded> kept;
    kept.reserve(examples.size());
    for (std::size_t i = 0; i < encoded.size(); ++i) {
      if (present[i]) kept.push_back(std::move(encoded[i]));
    }
    encoded = std::move(kept);
  }
  report.train_examples = train_index.size();
  report.validation_pairs = val_index.size();
  if (train_index.empty() || val_index.empty()) {
    fail(ErrorCode::EmptyDataset, "identity split left no training or validation pairs");
  }

  RegressorParams& params = result.model.params;
  if (options.initial) {
    params = *options.initial;
    if (params.values.size() != network_shape(config).parameter_count) {
      fail(ErrorCode::ShapeMismatch, "initial parameters do not match the config");
    }
  } else {
    params = init_params(config, config.seed);
  }
  AdamState adam = adam_init(params.values.size());
  const auto batch_gradient = options.exec == Exec::Parallel ? kernels::batch_gradient_omp
                                                             : kernels::batch_gradient_serial;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = options.start_epoch + 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = train_index;
    Rng rng(derive_seed(config.seed, 0xe90c0000ULL + static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.index(i + 1)]);

    const double lr = epoch_learning_rate(config, epoch);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::span<const std::size_t> slice(order.data() + b, std::min(batch, order.size() - b));
      const kernels::BatchGradient g = batch_gradient(config, params, examples, slice);
      if (!std::isfinite(g.loss_sum) || !g.grad.allFinite()) {
        fail(ErrorCode::NumericFailure, "non-finite loss or gradient in epoch " +
                                            std::to_string(epoch));
      }
      loss_sum += g.loss_sum;
      adam_step(params.values, g.grad, adam, lr, config.weight_decay);
    }

    std::vector<double> theta(val_index.size()), trans(val_index.size());
    const auto nv = static_cast<std::ptrdiff_t>(val_index.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < nv; ++k) {
      const Encoded& e = encoded[val_index[k]];
      const Vec7 out = forward(config, params, e.example.input);
      RigidTransform pred;
      if (out.tail<4>().norm() > 1e-8) {
        pred = uncenter_transform(decode_output(config.loss_variant, out), e.source_centroid,
                                  e.target_centroid);
      } else {
        pred.t = out.head<3>();
      }
      theta[k] = rotation_error(e.gt.q, pred.q);
      trans[k] = translation_error(e.gt.t, pred.t);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = loss_sum / static_cast<double>(order.size());
    for (std::size_t k = 0; k < val_index.size(); ++k) {
      stats.val_mean_theta += theta[k];
      stats.val_mean_t += trans[k];
    }
    stats.val_mean_theta /= static_cast<double>(val_index.size());
    stats.val_mean_t /= static_cast<double>(val_index.size());
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.epochs.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
  }
  return result;
}

}  // namespace sparsereg
