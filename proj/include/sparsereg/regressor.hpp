#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/kernels.hpp"
#include "sparsereg/network.hpp"
#include "sparsereg/synth.hpp"

namespace sparsereg {

struct Regressor {
  RegressorConfig config;
  RegressorParams params;
};

/// Network input for a pair. Both clouds are shifted to their own 3D
/// centroid before rasterization, so the network sees shape and orientation
/// only and predicts the transform between the centered clouds.
struct EncodedPair {
  Eigen::MatrixXd input;
  Vec3 source_centroid = Vec3::Zero();
  Vec3 target_centroid = Vec3::Zero();
};

EncodedPair encode_pair(const PointCloud& source, const PointCloud& target,
                        const RegressorConfig& config, Exec exec = Exec::Serial);

/// Transform between the centered clouds: t_c = R c_s + t - c_t.
RigidTransform center_transform(const RigidTransform& transform, const Vec3& source_centroid,
                                const Vec3& target_centroid);
/// Inverse of center_transform: t = t_c + c_t - R c_s.
RigidTransform uncenter_transform(const RigidTransform& centered, const Vec3& source_centroid,
                                  const Vec3& target_centroid);

/// Rigid transform decoded from a raw network output under the variant.
RigidTransform decode_output(LossVariant variant, const Vec7& output);

/// Source -> target transform predicted from one rasterized pair.
RigidTransform predict(const Regressor& model, const PointCloud& source, const PointCloud& target);

struct TwiceResult {
  RigidTransform first;
  RigidTransform second;
  RigidTransform combined;  // second after first
};

/// Predicts T1, re-rasterizes T1(source) against the target, predicts T2 and
/// returns T2 * T1.
TwiceResult register_twice(const Regressor& model, const PointCloud& source,
                           const PointCloud& target);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;       // training loss averaged over examples
  double val_mean_theta = 0.0;  // degrees
  double val_mean_t = 0.0;      // mm
  double seconds = 0.0;         // wall time, not part of the CSV
};

struct TrainReport {
  LossVariant loss_variant = LossVariant::QuatL2;
  std::size_t train_examples = 0;  // pairs plus refinement examples
  std::size_t validation_pairs = 0;
  std::vector<std::string> validation_identities;
  std::vector<EpochStats> epochs;
};

/// CSV with one row per epoch: epoch, loss variant, mean loss, validation
/// mean theta_e and t_e. Wall time is left out so reruns are byte-identical.
void write_report_csv(const std::filesystem::path& path, const TrainReport& report);

struct TrainOptions {
  /// Continue from these parameters at start_epoch + 1.
  const RegressorParams* initial = nullptr;
  int start_epoch = 0;
  Exec exec = Exec::Parallel;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainResult {
  Regressor model;
  TrainReport report;
};

/// Splits pairs 90/10 by identity (seeded), trains with shuffled mini-batches
/// and Adam, and evaluates on the held-out identities after every epoch.
/// Throws EmptyDataset when either side of the split is empty.
TrainResult train(const RegressorConfig& config, const PairSet& data,
                  const TrainOptions& options = {});

/// Learning rate used in a 1-based epoch under the cosine schedule.
double epoch_learning_rate(const RegressorConfig& config, int epoch);

/// Held-out identities for a data set under the seeded 90/10 split.
std::vector<std::string> validation_identities(const PairSet& data, std::uint64_t seed);

}  // namespace sparsereg
