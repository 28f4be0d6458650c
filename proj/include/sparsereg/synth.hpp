#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparsereg/point_cloud.hpp"
#include "sparsereg/pose_math.hpp"
#include "sparsereg/rng.hpp"

namespace sparsereg {

struct Bump {
  double cx = 0.0, cy = 0.0;  // center, mm
  double sx = 1.0, sy = 1.0;  // Gaussian widths, mm
  double amp = 0.0;           // height, mm (negative for dents)
};

/// Face-like parametric surface: a half-ellipsoid dome over an elliptic x-y
/// support plus Gaussian bumps and dents, shifted so the surface mean sits
/// near z = 0. y points toward the forehead.
struct SyntheticIdentity {
  static constexpr int kMaxBumps = 10;

  std::uint64_t seed = 0;
  double half_width = 70.0;   // x semi-axis, mm
  double half_height = 90.0;  // y semi-axis, mm
  double depth = 70.0;        // dome height, mm
  double z_offset = -46.7;
  int bump_count = 0;
  std::array<Bump, kMaxBumps> bumps{};

  std::string label() const;
  /// Flat parameter vector of fixed length 5 + 5 * kMaxBumps.
  std::vector<double> params() const;

  bool in_support(double x, double y) const;
  double surface_z(double x, double y) const;

  struct Extent {
    Vec3 lo, hi;
  };
  /// Bounding box implied by the parameters alone.
  Extent nominal_extent() const;
};

SyntheticIdentity generate_identity(std::uint64_t seed);

/// n >= 10000 points uniform over the support with exact surface z.
PointCloud sample_dense(const SyntheticIdentity& identity, std::size_t n);

/// Closed intervals, degrees and millimeters.
struct PoseRanges {
  double roll_min = -45.0, roll_max = 45.0;
  double pitch_min = -20.0, pitch_max = 20.0;
  double yaw_min = -30.0, yaw_max = 30.0;
  double t_min = -8.0, t_max = 8.0;

  static PoseRanges zero();
};

struct NoiseConfig {
  double fraction = 0.1;
  double stddev = 2.0;  // variance 4 mm^2
};

EulerAngles draw_euler(Rng& rng, const PoseRanges& ranges);
RigidTransform draw_pose(Rng& rng, const PoseRanges& ranges);
/// Pose for the difficult regime: |roll| in [30, 45], |yaw| in [20, 30].
RigidTransform draw_difficult_pose(Rng& rng, const PoseRanges& ranges);

/// Returns the posed cloud and the exact transform applied to it.
std::pair<PointCloud, RigidTransform> perturb_pose(const PointCloud& cloud, Rng& rng,
                                                   const PoseRanges& ranges = {});

/// Perturbs z of exactly floor(fraction * n) points chosen without
/// replacement. `perturbed`, when given, receives their indices (sorted).
PointCloud add_noise(const PointCloud& cloud, Rng& rng, const NoiseConfig& noise = {},
                     std::vector<std::size_t>* perturbed = nullptr);

struct SparseSample {
  PointCloud cloud;
  std::vector<std::size_t> source_indices;
  double cell_size = 0.0;
  double min_x = 0.0, min_y = 0.0;
};

/// Grid sparse sampling in x-y: equal square cells anchored at the bounding
/// box corner, sized so the number of occupied cells is as large as possible
/// without exceeding `grids`; one uniformly random member per occupied cell.
SparseSample sparse_sample_detailed(const PointCloud& cloud, std::size_t grids, Rng& rng);
PointCloud sparse_sample(const PointCloud& cloud, std::size_t grids, Rng& rng);

struct SequenceConfig {
  std::size_t dense_points = 10000;
  std::size_t grids = 1000;
  PoseRanges ranges;
  NoiseConfig noise;
  bool noise_enabled = true;
};

inline constexpr int kSequenceLength = 6;

/// Six sparse frames of one identity. poses[k] maps the standard-pose scan
/// onto frame k; the reference frame's pose is the identity.
struct FrameSequence {
  std::array<PointCloud, kSequenceLength> frames;
  std::array<RigidTransform, kSequenceLength> poses;
  int reference_index = 0;
  std::string identity;

  /// Transform taking frame i onto frame j: poses[j] * poses[i]^-1.
  RigidTransform relative(int i, int j) const;
};

FrameSequence generate_sequence(const SyntheticIdentity& identity, Rng& rng,
                                const SequenceConfig& config = {});

enum class Regime { Standard, Difficult };

std::string to_string(Regime regime);
Regime parse_regime(const std::string& text);

struct RegistrationPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;  // maps source onto target
  RigidTransform source_pose;
  RigidTransform target_pose;
  std::string identity;
};

struct PairSet {
  std::vector<RegistrationPair> pairs;
  Regime regime = Regime::Standard;
};

struct PairSetConfig {
  SequenceConfig frame;
  std::size_t identity_pool = 50;
};

/// n pairs over a rotating pool of identities. Pair i draws from its own
/// generator seeded by (seed, i), so generation parallelizes without
/// changing the output.
PairSet generate_pair_set(std::size_t n, Regime regime, std::uint64_t seed,
                          const PairSetConfig& config = {});

/// Whether an endpoint pose satisfies the regime's Euler and translation ranges.
bool pose_in_regime(const RigidTransform& pose, Regime regime, const PoseRanges& ranges = {},
                    double tol_deg = 1e-6);

}  // namespace sparsereg
