#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "sparsereg/synth.hpp"

using namespace sparsereg;

namespace {

bool same_points(const PointCloud& a, const PointCloud& b) { return a.points == b.points; }

// Area of the convex hull of the x-y projection (monotone chain).
double hull_area(const PointCloud& c) {
  std::vector<Eigen::Vector2d> p;
  for (const auto& v : c.points) p.emplace_back(v.x(), v.y());
  std::sort(p.begin(), p.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  const auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                        const Eigen::Vector2d& b) {
    return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
  };
  std::vector<Eigen::Vector2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < k; ++i) area += h[i].x() * h[i + 1].y() - h[i + 1].x() * h[i].y();
  return 0.5 * std::abs(area);
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("identities are seeded") {
    const SyntheticIdentity a = generate_identity(17), b = generate_identity(17);
    CHECK(a.params() == b.params());
    CHECK(a.params().size() == 5 + 5 * SyntheticIdentity::kMaxBumps);
    const SyntheticIdentity c = generate_identity(18);
    double max_diff = 0.0;
    for (double x = -60; x <= 60; x += 2) {
      for (double y = -80; y <= 80; y += 2) {
        if (a.in_support(x, y) && c.in_support(x, y)) {
          max_diff = std::max(max_diff, std::abs(a.surface_z(x, y) - c.surface_z(x, y)));
        }
      }
    }
    CHECK(max_diff > 2.0);
  }

  TEST_CASE("dense sampling lies on the surface inside the nominal extent") {
    const SyntheticIdentity id = generate_identity(19);
    const PointCloud dense = sample_dense(id, 10000);
    CHECK(dense.size() == 10000);
    const auto ext = id.nominal_extent();
    for (const auto& p : dense.points) {
      CHECK(std::abs(p.z() - id.surface_z(p.x(), p.y())) < 1e-9);
      CHECK((p.array() >= ext.lo.array() - 1.0).all());
      CHECK((p.array() <= ext.hi.array() + 1.0).all());
    }
    CHECK(same_points(dense, sample_dense(id, 10000)));
  }

  TEST_CASE("perturb_pose with zero ranges is the identity") {
    const PointCloud dense = sample_dense(generate_identity(20), 10000);
    Rng rng(1);
    const auto [moved, gt] = perturb_pose(dense, rng, PoseRanges::zero());
    CHECK(gt.q == UnitQuaternion::identity());
    CHECK(gt.t == Vec3::Zero());
    CHECK(same_points(moved, dense));
  }

  TEST_CASE("perturb_pose returns the transform it applied") {
    const PointCloud dense = sample_dense(generate_identity(21), 10000);
    Rng rng(2);
    const auto [moved, gt] = perturb_pose(dense, rng);
    const PointCloud again = apply_transform(gt, dense);
    for (std::size_t i = 0; i < dense.size(); ++i) {
      CHECK((again.points[i] - moved.points[i]).norm() < 1e-9);
    }
  }

  TEST_CASE("drawn angles fill the configured box") {
    const PoseRanges r;
    Rng rng(3);
    double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
    for (int i = 0; i < 10000; ++i) {
      const EulerAngles e = quat_to_euler(draw_pose(rng, r).q);
      const double v[3] = {e.roll, e.pitch, e.yaw};
      for (int k = 0; k < 3; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    }
    CHECK(std::abs(lo[0] - r.roll_min) < 1.0);
    CHECK(std::abs(hi[0] - r.roll_max) < 1.0);
    CHECK(std::abs(lo[1] - r.pitch_min) < 1.0);
    CHECK(std::abs(hi[1] - r.pitch_max) < 1.0);
    CHECK(std::abs(lo[2] - r.yaw_min) < 1.0);
    CHECK(std::abs(hi[2] - r.yaw_max) < 1.0);
  }

  TEST_CASE("noise touches exactly a tenth of the points") {
    const PointCloud dense = sample_dense(generate_identity(22), 10007);
    Rng rng(4);
    std::vector<std::size_t> idx;
    const PointCloud noisy = add_noise(dense, rng, {}, &idx);
    CHECK(idx.size() == 1000);
    const std::set<std::size_t> chosen(idx.begin(), idx.end());
    CHECK(chosen.size() == idx.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < dense.size(); ++i) {
      const bool moved = !(noisy.points[i] == dense.points[i]);
      changed += moved;
      if (!chosen.count(i)) CHECK(!moved);
      CHECK(noisy.points[i].x() == dense.points[i].x());
      CHECK(noisy.points[i].y() == dense.points[i].y());
    }
    CHECK(changed == idx.size());
  }

  TEST_CASE("noise standard deviation is 2 mm") {
    PointCloud flat;
    for (int i = 0; i < 100000; ++i) flat.points.emplace_back(i, 0, 0);
    Rng rng(5);
    const PointCloud noisy = add_noise(flat, rng, {1.0, 2.0});
    double s = 0.0, s2 = 0.0;
    for (const auto& p : noisy.points) {
      s += p.z();
      s2 += p.z() * p.z();
    }
    const double n = static_cast<double>(flat.size());
    const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
    CHECK(sd >= 1.8);
    CHECK(sd <= 2.2);
  }

  TEST_CASE("sparse sampling keeps members, one per cell, at most the budget") {
    const PointCloud dense = sample_dense(generate_identity(23), 10000);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed);
      const SparseSample s = sparse_sample_detailed(dense, 1000, rng);
      CHECK(s.cloud.size() <= 1000);
      CHECK(s.cloud.size() >= 900);
      std::set<std::pair<long, long>> cells;
      for (std::size_t i = 0; i < s.cloud.size(); ++i) {
        CHECK(s.cloud.points[i] == dense.points[s.source_indices[i]]);
        const auto& p = s.cloud.points[i];
        cells.insert({static_cast<long>(std::floor((p.x() - s.min_x) / s.cell_size)),
                      static_cast<long>(std::floor((p.y() - s.min_y) / s.cell_size))});
      }
      CHECK(cells.size() == s.cloud.size());
      CHECK(hull_area(s.cloud) >= 0.9 * hull_area(dense));
    }
  }

  TEST_CASE("sequences") {
    const SyntheticIdentity id = generate_identity(24);
    Rng rng(6);
    SequenceConfig cfg;
    cfg.noise_enabled = false;
    const FrameSequence seq = generate_sequence(id, rng, cfg);
    int identities = 0;
    for (int k = 0; k < kSequenceLength; ++k) {
      identities += seq.poses[k].q == UnitQuaternion::identity();
      CHECK(seq.frames[k].size() <= 1000);
      CHECK(seq.frames[k].frame_index == k);
    }
    CHECK(identities == 1);
    CHECK(seq.poses[seq.reference_index].q == UnitQuaternion::identity());
    CHECK(!same_points(seq.frames[0], seq.frames[1]));

    // Noiseless frames are members of the posed dense scan, so the relative
    // transform maps frame i exactly onto frame j's posed surface.
    const PointCloud dense = sample_dense(id, cfg.dense_points);
    for (int i = 0; i < kSequenceLength; ++i) {
      const RigidTransform to_std = seq.poses[i].inverse();
      for (const auto& p : seq.frames[i].points) {
        const Vec3 s = to_std.apply(p);
        CHECK(std::abs(s.z() - id.surface_z(s.x(), s.y())) < 1e-9);
      }
      const RigidTransform rel = seq.relative(i, (i + 1) % kSequenceLength);
      const RigidTransform expect =
          compose(seq.poses[(i + 1) % kSequenceLength], seq.poses[i].inverse());
      CHECK(rotation_error(rel.q, expect.q) < 1e-9);
    }
  }

  TEST_CASE("pair sets respect their regime") {
    const PairSet standard = generate_pair_set(60, Regime::Standard, 7);
    CHECK(standard.pairs.size() == 60);
    for (const auto& p : standard.pairs) {
      CHECK(pose_in_regime(p.source_pose, Regime::Standard));
      CHECK(pose_in_regime(p.target_pose, Regime::Standard));
      const RigidTransform gt = compose(p.target_pose, p.source_pose.inverse());
      CHECK(rotation_error(gt.q, p.gt.q) < 1e-9);
    }
    const PairSet difficult = generate_pair_set(60, Regime::Difficult, 7);
    for (const auto& p : difficult.pairs) {
      for (const auto& pose : {p.source_pose, p.target_pose}) {
        CHECK(pose_in_regime(pose, Regime::Difficult));
        const EulerAngles e = quat_to_euler(pose.q);
        CHECK(std::abs(e.roll) >= 30.0 - 1e-6);
        CHECK(std::abs(e.yaw) >= 20.0 - 1e-6);
      }
    }
  }

  TEST_CASE("pair sets are deterministic") {
    const PairSet a = generate_pair_set(8, Regime::Standard, 9);
    const PairSet b = generate_pair_set(8, Regime::Standard, 9);
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      CHECK(same_points(a.pairs[i].source, b.pairs[i].source));
      CHECK(same_points(a.pairs[i].target, b.pairs[i].target));
      CHECK(a.pairs[i].gt.q == b.pairs[i].gt.q);
    }
  }
}
