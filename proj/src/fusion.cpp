#include "sparsereg/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsereg/error.hpp"
#include "sparsereg/kernels.hpp"
#include "sparsereg/spatial_index.hpp"

namespace sparsereg {

std::vector<RigidTransform> ground_truth_transforms(const FrameSequence& seq) {
  std::vector<RigidTransform> out;
  for (int k = 0; k < kSequenceLength; ++k) {
    if (k != seq.reference_index) out.push_back(seq.relative(k, seq.reference_index));
  }
  return out;
}

FusedCloud fuse_sequence(const FrameSequence& seq, std::span<const RigidTransform> transforms) {
  if (transforms.size() != kSequenceLength - 1) {
    fail(ErrorCode::IndexMismatch, "fusion needs one transform per non-reference frame (" +
                                       std::to_string(kSequenceLength - 1) + "), got " +
                                       std::to_string(transforms.size()));
  }
  if (seq.reference_index < 0 || seq.reference_index >= kSequenceLength) {
    fail(ErrorCode::IndexMismatch, "reference index out of range");
  }
  std::array<PointCloud, kSequenceLength> aligned;
#pragma omp parallel for schedule(static)
  for (int k = 0; k < kSequenceLength; ++k) {
    if (k == seq.reference_index) {
      aligned[k] = seq.frames[k];
    } else {
      const int slot = k < seq.reference_index ? k : k - 1;
      aligned[k] = apply_transform(transforms[slot], seq.frames[k]);
    }
  }
  FusedCloud fused;
  fused.cloud.id = seq.identity;
  for (int k = 0; k < kSequenceLength; ++k) {
    fused.cloud.points.insert(fused.cloud.points.end(), aligned[k].points.begin(),
                              aligned[k].points.end());
    fused.source_frame.insert(fused.source_frame.end(), aligned[k].size(), k);
  }
  fused.denoised.assign(fused.cloud.size(), 0);
  return fused;
}

FusedCloud denoise(const FusedCloud& fused, double radius, double threshold, Exec exec,
                   DenoiseStats* stats) {
  if (fused.cloud.empty()) fail(ErrorCode::EmptyCloud, "cannot denoise an empty cloud");
  if (!(radius > 0.0) || !(threshold >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "denoise radius must be positive, threshold non-negative");
  }
  const std::span<const Vec3> points(fused.cloud.points);
  const GridIndex2D index(points, radius);
  const kernels::DenoiseDecisions d = exec == Exec::Parallel
                                          ? kernels::denoise_omp(points, index, radius, threshold)
                                          : kernels::denoise_serial(points, index, radius, threshold);
  FusedCloud out = fused;
  if (out.denoised.size() != out.cloud.size()) out.denoised.assign(out.cloud.size(), 0);
  DenoiseStats s;
  for (std::size_t i = 0; i < out.cloud.size(); ++i) {
    out.cloud.points[i].z() = d.z[i];
    if (d.changed[i]) {
      out.denoised[i] = 1;
      ++s.changed;
    }
    if (d.neighbor_count[i] == 0) ++s.isolated;
  }
  if (stats) *stats = s;
  return out;
}

double surface_residual(const PointCloud& cloud, const SyntheticIdentity& identity) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : cloud.points) {
    if (!identity.in_support(p.x(), p.y())) continue;
    sum += std::abs(p.z() - identity.surface_z(p.x(), p.y()));
    ++n;
  }
  if (n == 0) fail(ErrorCode::EmptyCloud, "no points inside the surface support");
  return sum / static_cast<double>(n);
}

void AugmentSpec::validate() const {
  if (roll_jitter < 0.0 || pitch_jitter < 0.0 || yaw_jitter < 0.0) {
    fail(ErrorCode::InvalidArgument, "jitter ranges must be non-negative");
  }
  if (patch_count_min < 1 || patch_count_max < patch_count_min) {
    fail(ErrorCode::InvalidArgument, "patch count range must satisfy 1 <= min <= max");
  }
  if (patch_size_min < 0 || patch_size_max < patch_size_min) {
    fail(ErrorCode::InvalidArgument, "patch size range must satisfy 0 <= min <= max");
  }
}

PointCloud jitter_pose(const PointCloud& cloud, const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  EulerAngles e;
  e.roll = rng.uniform(-spec.roll_jitter, spec.roll_jitter);
  e.pitch = rng.uniform(-spec.pitch_jitter, spec.pitch_jitter);
  e.yaw = rng.uniform(-spec.yaw_jitter, spec.yaw_jitter);
  RigidTransform r;
  r.q = euler_to_quat(e);
  const Vec3 c = centroid(cloud);
  r.t = c - rotate_point(r.q, c);
  return apply_transform(r, cloud);
}

AugmentedDepth augment_depth(const DepthMap& map, const AugmentSpec& spec, Rng& rng) {
  spec.validate();
  AugmentedDepth out;
  out.map = map;
  const int res = map.resolution;
  const auto draw_int = [&](int lo, int hi) {
    return lo + static_cast<int>(rng.index(static_cast<std::uint64_t>(hi - lo + 1)));
  };
  const int count = draw_int(spec.patch_count_min, spec.patch_count_max);
  for (int p = 0; p < count; ++p) {
    Patch patch;
    patch.side = draw_int(spec.patch_size_min, spec.patch_size_max);
    patch.row = draw_int(0, std::max(res - patch.side, 0));
    patch.col = draw_int(0, std::max(res - patch.side, 0));
    out.patches.push_back(patch);
    for (int r = patch.row; r < std::min(patch.row + patch.side, res); ++r) {
      for (int c = patch.col; c < std::min(patch.col + patch.side, res); ++c) {
        const std::size_t i = out.map.index(r, c);
        out.map.mask[i] = 0;
        out.map.depth[i] = 0.0;
      }
    }
  }
  return out;
}

}  // namespace sparsereg
