#include "sparsereg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "sparsereg/error.hpp"

namespace sparsereg {

namespace {

struct BumpTemplate {
  double cx_lo, cx_hi, cy_lo, cy_hi;
  double sx_lo, sx_hi, sy_lo, sy_hi;
  double amp_lo, amp_hi;
};

// Nose, eye sockets, brows, chin always present; mouth, cheeks, forehead
// optional. Mirrored features use the negated x range.
constexpr std::array<BumpTemplate, SyntheticIdentity::kMaxBumps> kTemplates{{
    {-3, 3, -10, 2, 14, 20, 28, 40, 45, 70},  // nose
    {-34, -28, 14, 22, 18, 26, 18, 26, -30, -17.5},  // left eye socket
    {28, 34, 14, 22, 18, 26, 18, 26, -30, -17.5},  // right eye socket
    {-34, -26, 30, 38, 24, 32, 10, 16, 7.5, 17.5},  // left brow
    {26, 34, 30, 38, 24, 32, 10, 16, 7.5, 17.5},  // right brow
    {-3, 3, -62, -52, 28, 40, 20, 28, 7.5, 20},  // chin
    {-2, 2, -38, -30, 28, 40, 8, 14, 5, 12.5},  // lips
    {-46, -38, -14, -4, 28, 40, 28, 40, 5, 15},  // left cheek
    {38, 46, -14, -4, 28, 40, 28, 40, 5, 15},  // right cheek
    {-5, 5, 50, 62, 40, 60, 20, 32, -10, 10},  // forehead
}};

constexpr int kMandatoryBumps = 6;

}  // namespace

std::string SyntheticIdentity::label() const {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "id_%016llx", static_cast<unsigned long long>(seed));
  return buf;
}

std::vector<double> SyntheticIdentity::params() const {
  std::vector<double> p{half_width, half_height, depth, z_offset, static_cast<double>(bump_count)};
  for (const auto& b : bumps) {
    p.insert(p.end(), {b.cx, b.cy, b.sx, b.sy, b.amp});
  }
  return p;
}

bool SyntheticIdentity::in_support(double x, double y) const {
  const double u = x / half_width, v = y / half_height;
  return u * u + v * v <= 1.0;
}

double SyntheticIdentity::surface_z(double x, double y) const {
  const double u = x / half_width, v = y / half_height;
  double z = z_offset + depth * std::sqrt(std::max(0.0, 1.0 - u * u - v * v));
  for (int i = 0; i < bump_count; ++i) {
    const Bump& b = bumps[i];
    const double dx = (x - b.cx) / b.sx, dy = (y - b.cy) / b.sy;
    z += b.amp * std::exp(-0.5 * (dx * dx + dy * dy));
  }
  return z;
}

SyntheticIdentity::Extent SyntheticIdentity::nominal_extent() const {
  double neg = 0.0, pos = 0.0;
  for (int i = 0; i < bump_count; ++i) {
    (bumps[i].amp < 0.0 ? neg : pos) += bumps[i].amp;
  }
  return {Vec3(-half_width, -half_height, z_offset + neg),
          Vec3(half_width, half_height, z_offset + depth + pos)};
}

SyntheticIdentity generate_identity(std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1de));
  SyntheticIdentity id;
  id.seed = seed;
  id.half_width = rng.uniform(66.0, 74.0);
  id.half_height = rng.uniform(86.0, 94.0);
  id.depth = rng.uniform(64.0, 76.0);
  // Mean dome height over the ellipse is 2/3 of the peak.
  id.z_offset = -2.0 * id.depth / 3.0;
  id.bump_count = kMandatoryBumps +
                  static_cast<int>(rng.index(SyntheticIdentity::kMaxBumps - kMandatoryBumps + 1));
  for (int i = 0; i < SyntheticIdentity::kMaxBumps; ++i) {
    const auto& t = kTemplates[i];
    Bump b;
    b.cx = rng.uniform(t.cx_lo, t.cx_hi);
    b.cy = rng.uniform(t.cy_lo, t.cy_hi);
    b.sx = rng.uniform(t.sx_lo, t.sx_hi);
    b.sy = rng.uniform(t.sy_lo, t.sy_hi);
    b.amp = rng.uniform(t.amp_lo, t.amp_hi);
    id.bumps[i] = i < id.bump_count ? b : Bump{};
  }
  return id;
}

PointCloud sample_dense(const SyntheticIdentity& identity, std::size_t n) {
  if (n < 10000) fail(ErrorCode::InvalidArgument, "dense sampling needs n >= 10000");
  Rng rng(derive_seed(identity.seed, 0xde05e));
  PointCloud cloud;
  cloud.id = identity.label();
  cloud.points.reserve(n);
  while (cloud.size() < n) {
    const double x = rng.uniform(-identity.half_width, identity.half_width);
    const double y = rng.uniform(-identity.half_height, identity.half_height);
    if (!identity.in_support(x, y)) continue;
    cloud.points.emplace_back(x, y, identity.surface_z(x, y));
  }
  return cloud;
}

PoseRanges PoseRanges::zero() {
  PoseRanges r;
  r.roll_min = r.roll_max = 0.0;
  r.pitch_min = r.pitch_max = 0.0;
  r.yaw_min = r.yaw_max = 0.0;
  r.t_min = r.t_max = 0.0;
  return r;
}

EulerAngles draw_euler(Rng& rng, const PoseRanges& ranges) {
  EulerAngles e;
  e.roll = rng.uniform(ranges.roll_min, ranges.roll_max);
  e.pitch = rng.uniform(ranges.pitch_min, ranges.pitch_max);
  e.yaw = rng.uniform(ranges.yaw_min, ranges.yaw_max);
  return e;
}

namespace {

Vec3 draw_translation(Rng& rng, const PoseRanges& ranges) {
  const double tx = rng.uniform(ranges.t_min, ranges.t_max);
  const double ty = rng.uniform(ranges.t_min, ranges.t_max);
  const double tz = rng.uniform(ranges.t_min, ranges.t_max);
  return {tx, ty, tz};
}

double signed_magnitude(Rng& rng, double lo, double hi) {
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  return sign * rng.uniform(lo, hi);
}

}  // namespace

RigidTransform draw_pose(Rng& rng, const PoseRanges& ranges) {
  RigidTransform pose;
  pose.q = euler_to_quat(draw_euler(rng, ranges));
  pose.t = draw_translation(rng, ranges);
  return pose;
}

RigidTransform draw_difficult_pose(Rng& rng, const PoseRanges& ranges) {
  EulerAngles e;
  e.roll = signed_magnitude(rng, 30.0, 45.0);
  e.pitch = rng.uniform(ranges.pitch_min, ranges.pitch_max);
  e.yaw = signed_magnitude(rng, 20.0, 30.0);
  RigidTransform pose;
  pose.q = euler_to_quat(e);
  pose.t = draw_translation(rng, ranges);
  return pose;
}

std::pair<PointCloud, RigidTransform> perturb_pose(const PointCloud& cloud, Rng& rng,
                                                   const PoseRanges& ranges) {
  const RigidTransform pose = draw_pose(rng, ranges);
  return {apply_transform(pose, cloud), pose};
}

PointCloud add_noise(const PointCloud& cloud, Rng& rng, const NoiseConfig& noise,
                     std::vector<std::size_t>* perturbed) {
  const std::size_t n = cloud.size();
  const auto count = static_cast<std::size_t>(std::floor(noise.fraction * static_cast<double>(n)));
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + rng.index(n - i)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());

  PointCloud out = cloud;
  for (const std::size_t i : order) out.points[i].z() += rng.normal(0.0, noise.stddev);
  if (perturbed) *perturbed = std::move(order);
  return out;
}

namespace {

struct CellGrid {
  double size;
  long long nx, ny;
};

CellGrid make_grid(double size, double width, double height) {
  return {size, static_cast<long long>(std::floor(width / size)) + 1,
          static_cast<long long>(std::floor(height / size)) + 1};
}

std::size_t cell_of(const Vec3& p, double min_x, double min_y, const CellGrid& g) {
  const auto cx = std::min(static_cast<long long>(std::floor((p.x() - min_x) / g.size)), g.nx - 1);
  const auto cy = std::min(static_cast<long long>(std::floor((p.y() - min_y) / g.size)), g.ny - 1);
  return static_cast<std::size_t>(cy * g.nx + cx);
}

std::size_t occupied_cells(const PointCloud& cloud, double min_x, double min_y,
                           const CellGrid& g, std::vector<std::uint32_t>& stamp,
                           std::uint32_t epoch) {
  const auto cells = static_cast<std::size_t>(g.nx * g.ny);
  if (stamp.size() < cells) stamp.resize(cells, 0);
  std::size_t count = 0;
  for (const auto& p : cloud.points) {
    const std::size_t c = cell_of(p, min_x, min_y, g);
    if (stamp[c] != epoch) {
      stamp[c] = epoch;
      ++count;
    }
  }
  return count;
}

}  // namespace

SparseSample sparse_sample_detailed(const PointCloud& cloud, std::size_t grids, Rng& rng) {
  if (cloud.empty()) fail(ErrorCode::EmptyCloud, "sparse sampling of empty cloud");
  if (grids == 0) fail(ErrorCode::InvalidArgument, "grids must be positive");

  double min_x = cloud.points[0].x(), max_x = min_x;
  double min_y = cloud.points[0].y(), max_y = min_y;
  for (const auto& p : cloud.points) {
    min_x = std::min(min_x, p.x());
    max_x = std::max(max_x, p.x());
    min_y = std::min(min_y, p.y());
    max_y = std::max(max_y, p.y());
  }
  const double width = max_x - min_x, height = max_y - min_y;
  const double extent = std::max({width, height, 1e-6});

  // Bisection on the cell size for the largest occupied count <= grids.
  // The count is not strictly monotone in the size, so every feasible probe
  // is a candidate.
  std::vector<std::uint32_t> stamp;
  std::uint32_t epoch = 0;
  const double base = std::sqrt(std::max(width * height, extent * 1e-6) / static_cast<double>(grids));
  double lo = std::max(base * 0.25, extent * 1e-6);
  double hi = std::max(extent * 1.0001, base * 4.0);
  double best_size = hi;
  std::size_t best_count = 0;
  const auto probe = [&](double size) {
    const CellGrid g = make_grid(size, width, height);
    const std::size_t count = occupied_cells(cloud, min_x, min_y, g, stamp, ++epoch);
    if (count <= grids && count > best_count) {
      best_count = count;
      best_size = size;
    }
    return count;
  };
  probe(hi);
  if (probe(lo) <= grids) {
    hi = lo;
  }
  for (int it = 0; it < 40 && best_count != grids && hi - lo > 1e-9 * extent; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid) <= grids) {
      hi = mid;
    } else {
      lo = mid;
    }
  }

  const CellGrid g = make_grid(best_size, width, height);
  const auto cells = static_cast<std::size_t>(g.nx * g.ny);
  std::vector<std::uint32_t> start(cells + 1, 0);
  std::vector<std::size_t> cell(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    cell[i] = cell_of(cloud.points[i], min_x, min_y, g);
    ++start[cell[i] + 1];
  }
  for (std::size_t c = 0; c < cells; ++c) start[c + 1] += start[c];
  std::vector<std::uint32_t> fill(start.begin(), start.end() - 1);
  std::vector<std::uint32_t> members(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    members[fill[cell[i]]++] = static_cast<std::uint32_t>(i);
  }

  SparseSample out;
  out.cell_size = best_size;
  out.min_x = min_x;
  out.min_y = min_y;
  out.cloud.id = cloud.id;
  out.cloud.frame_index = cloud.frame_index;
  for (std::size_t c = 0; c < cells; ++c) {
    const std::uint32_t n = start[c + 1] - start[c];
    if (n == 0) continue;
    const std::uint32_t pick = members[start[c] + rng.index(n)];
    out.cloud.points.push_back(cloud.points[pick]);
    out.source_indices.push_back(pick);
  }
  return out;
}

PointCloud sparse_sample(const PointCloud& cloud, std::size_t grids, Rng& rng) {
  return sparse_sample_detailed(cloud, grids, rng).cloud;
}

RigidTransform FrameSequence::relative(int i, int j) const {
  return compose(poses.at(j), poses.at(i).inverse());
}

namespace {

PointCloud make_frame(const PointCloud& dense, const RigidTransform& pose, Rng& rng,
                      const SequenceConfig& config) {
  PointCloud posed = apply_transform(pose, dense);
  if (config.noise_enabled) posed = add_noise(posed, rng, config.noise);
  return sparse_sample(posed, config.grids, rng);
}

}  // namespace

FrameSequence generate_sequence(const SyntheticIdentity& identity, Rng& rng,
                                const SequenceConfig& config) {
  const PointCloud dense = sample_dense(identity, config.dense_points);
  FrameSequence seq;
  seq.identity = identity.label();
  seq.reference_index = static_cast<int>(rng.index(kSequenceLength));
  for (int k = 0; k < kSequenceLength; ++k) {
    Rng frame_rng = rng.split();
    const RigidTransform pose =
        k == seq.reference_index ? RigidTransform::identity() : draw_pose(frame_rng, config.ranges);
    seq.poses[k] = pose;
    seq.frames[k] = make_frame(dense, pose, frame_rng, config);
    seq.frames[k].id = seq.identity;
    seq.frames[k].frame_index = k;
  }
  return seq;
}

std::string to_string(Regime regime) {
  return regime == Regime::Standard ? "standard" : "difficult";
}

Regime parse_regime(const std::string& text) {
  if (text == "standard") return Regime::Standard;
  if (text == "difficult") return Regime::Difficult;
  fail(ErrorCode::InvalidArgument, "unknown regime '" + text + "'");
}

PairSet generate_pair_set(std::size_t n, Regime regime, std::uint64_t seed,
                          const PairSetConfig& config) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "pair count must be positive");
  const std::size_t pool = std::max<std::size_t>(1, std::min(config.identity_pool, n));
  std::vector<SyntheticIdentity> identities(pool);
  std::vector<PointCloud> dense(pool);
  const auto pool_n = static_cast<std::ptrdiff_t>(pool);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t k = 0; k < pool_n; ++k) {
    identities[k] = generate_identity(derive_seed(seed ^ 0x5eedf00dULL, static_cast<std::uint64_t>(k)));
    dense[k] = sample_dense(identities[k], config.frame.dense_points);
  }

  PairSet set;
  set.regime = regime;
  set.pairs.resize(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const std::size_t k = static_cast<std::size_t>(i) % pool;
    RegistrationPair& pair = set.pairs[i];
    const auto draw = [&](Rng& r) {
      return regime == Regime::Standard ? draw_pose(r, config.frame.ranges)
                                        : draw_difficult_pose(r, config.frame.ranges);
    };
    pair.source_pose = draw(rng);
    pair.target_pose = draw(rng);
    pair.gt = compose(pair.target_pose, pair.source_pose.inverse());
    pair.identity = identities[k].label();
    Rng source_rng = rng.split();
    Rng target_rng = rng.split();
    pair.source = make_frame(dense[k], pair.source_pose, source_rng, config.frame);
    pair.target = make_frame(dense[k], pair.target_pose, target_rng, config.frame);
    pair.source.id = pair.identity;
    pair.target.id = pair.identity;
  }
  return set;
}

bool pose_in_regime(const RigidTransform& pose, Regime regime, const PoseRanges& ranges,
                    double tol_deg) {
  const EulerAngles e = quat_to_euler(pose.q);
  const auto within = [tol_deg](double v, double lo, double hi) {
    return v >= lo - tol_deg && v <= hi + tol_deg;
  };
  for (int k = 0; k < 3; ++k) {
    if (!within(pose.t[k], ranges.t_min, ranges.t_max)) return false;
  }
  if (!within(e.pitch, ranges.pitch_min, ranges.pitch_max)) return false;
  if (regime == Regime::Standard) {
    return within(e.roll, ranges.roll_min, ranges.roll_max) &&
           within(e.yaw, ranges.yaw_min, ranges.yaw_max);
  }
  return within(std::abs(e.roll), 30.0, 45.0) && within(std::abs(e.yaw), 20.0, 30.0);
}

}  // namespace sparsereg
