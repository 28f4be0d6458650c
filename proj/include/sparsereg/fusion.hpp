#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sparsereg/coordinate_map.hpp"
#include "sparsereg/point_cloud.hpp"
#include "sparsereg/pose_math.hpp"
#include "sparsereg/rng.hpp"
#include "sparsereg/synth.hpp"

namespace sparsereg {

struct FusedCloud {
  PointCloud cloud;
  std::vector<int> source_frame;         // frame index per point
  std::vector<std::uint8_t> denoised;    // 1 where denoise replaced z
};

/// Transforms taking each non-reference frame onto the reference frame,
/// in ascending frame order.
std::vector<RigidTransform> ground_truth_transforms(const FrameSequence& seq);

/// Moves every non-reference frame into the reference frame with
/// transforms[k] (non-reference frames in ascending order) and concatenates
/// all six frames in frame order. Throws IndexMismatch unless there are
/// exactly kSequenceLength - 1 transforms.
FusedCloud fuse_sequence(const FrameSequence& seq, std::span<const RigidTransform> transforms);

struct DenoiseStats {
  std::size_t changed = 0;
  std::size_t isolated = 0;  // points with no neighbor in the radius
};

/// One pass over a snapshot of z: a point whose z differs from the mean z of
/// its planar neighbors within `radius` by more than `threshold` takes that
/// mean. Isolated points are left alone; x and y never change.
FusedCloud denoise(const FusedCloud& fused, double radius = 3.0, double threshold = 2.0,
                   Exec exec = Exec::Parallel, DenoiseStats* stats = nullptr);

/// Mean |z - surface(x, y)| over points inside the identity's support, for
/// clouds expressed in the standard pose.
double surface_residual(const PointCloud& cloud, const SyntheticIdentity& identity);

struct AugmentSpec {
  double roll_jitter = 10.0;  // degrees, symmetric
  double pitch_jitter = 10.0;
  double yaw_jitter = 10.0;
  int patch_count_min = 1;
  int patch_count_max = 6;
  int patch_size_min = 0;  // px
  int patch_size_max = 20;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument on unordered or negative ranges.
  void validate() const;
};

/// Rotation by Euler angles drawn within the jitter ranges, about the
/// cloud's centroid. Applied before rasterization.
PointCloud jitter_pose(const PointCloud& cloud, const AugmentSpec& spec, Rng& rng);

struct Patch {
  int row = 0;
  int col = 0;
  int side = 0;
};

struct AugmentedDepth {
  DepthMap map;
  std::vector<Patch> patches;
};

/// Blanks between patch_count_min and patch_count_max axis-aligned square
/// patches with side in [patch_size_min, patch_size_max] at uniform
/// positions (clipped to the map).
AugmentedDepth augment_depth(const DepthMap& map, const AugmentSpec& spec, Rng& rng);

}  // namespace sparsereg
