#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sparsereg/error.hpp"
#include "sparsereg/fusion.hpp"
#include "sparsereg/spatial_index.hpp"

using namespace sparsereg;

namespace {

FrameSequence noiseless_sequence(std::uint64_t seed, SyntheticIdentity* identity = nullptr) {
  const SyntheticIdentity id = generate_identity(seed);
  if (identity) *identity = id;
  Rng rng(seed + 100);
  SequenceConfig cfg;
  cfg.noise_enabled = false;
  return generate_sequence(id, rng, cfg);
}

// Jittered plane z = 0.01 x with a handful of points lifted by 10 mm.
FusedCloud plane_with_outliers(std::uint64_t seed, std::vector<std::size_t>* outliers) {
  Rng rng(seed);
  FusedCloud f;
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      const double x = i * 1.5 + rng.uniform(-0.4, 0.4);
      const double y = j * 1.5 + rng.uniform(-0.4, 0.4);
      f.cloud.points.emplace_back(x, y, 0.01 * x);
    }
  }
  std::vector<std::size_t> order(f.cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t k = 0; k < 50; ++k) {
    std::swap(order[k], order[k + rng.index(order.size() - k)]);
    f.cloud.points[order[k]].z() += rng.uniform() < 0.5 ? 10.0 : -10.0;
  }
  if (outliers) outliers->assign(order.begin(), order.begin() + 50);
  f.source_frame.assign(f.cloud.size(), 0);
  f.denoised.assign(f.cloud.size(), 0);
  return f;
}

// Brute-force neighbor decision for point i.
std::pair<bool, double> oracle(const PointCloud& c, std::size_t i, double radius, double threshold) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == i) continue;
    const double dx = c.points[j].x() - c.points[i].x(), dy = c.points[j].y() - c.points[i].y();
    if (dx * dx + dy * dy <= radius * radius) {
      sum += c.points[j].z();
      ++count;
    }
  }
  if (count == 0) return {false, c.points[i].z()};
  const double zm = sum / count;
  if (std::abs(c.points[i].z() - zm) > threshold) return {true, zm};
  return {false, c.points[i].z()};
}

}  // namespace

TEST_SUITE("fusion") {
  TEST_CASE("ground-truth fusion lands on the surface") {
    SyntheticIdentity id;
    const FrameSequence seq = noiseless_sequence(1, &id);
    const FusedCloud fused = fuse_sequence(seq, ground_truth_transforms(seq));
    CHECK(surface_residual(fused.cloud, id) < 1e-6);
    std::size_t total = 0;
    for (const auto& f : seq.frames) total += f.size();
    CHECK(fused.cloud.size() == total);
    CHECK(fused.source_frame.size() == total);
    CHECK(std::is_sorted(fused.source_frame.begin(), fused.source_frame.end()));
  }

  TEST_CASE("identity transforms concatenate the frames") {
    const FrameSequence seq = noiseless_sequence(2);
    const std::vector<RigidTransform> ident(5);
    const FusedCloud fused = fuse_sequence(seq, ident);
    std::size_t at = 0;
    for (const auto& f : seq.frames) {
      for (const auto& p : f.points) CHECK(fused.cloud.points[at++] == p);
    }
  }

  TEST_CASE("transform count must be five") {
    const FrameSequence seq = noiseless_sequence(3);
    const std::vector<RigidTransform> four(4);
    try {
      fuse_sequence(seq, four);
      FAIL("expected IndexMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::IndexMismatch);
    }
  }

  TEST_CASE("denoise worked examples") {
    FusedCloud f;
    f.cloud.points = {{0, 0, 10}, {1, 0, 5}, {0, 1, 5}, {10, 10, 6}, {11, 10, 5}, {10, 11, 5}};
    f.source_frame.assign(6, 0);
    f.denoised.assign(6, 0);
    const FusedCloud out = denoise(f);
    CHECK(out.cloud.points[0].z() == 5.0);
    CHECK(out.denoised[0] == 1);
    CHECK(out.cloud.points[3].z() == 6.0);  // |6 - 5| <= 2
    CHECK(out.denoised[3] == 0);
  }

  TEST_CASE("isolated points are untouched") {
    FusedCloud f;
    f.cloud.points = {{0, 0, 10}, {100, 0, -40}};
    f.source_frame.assign(2, 0);
    f.denoised.assign(2, 0);
    DenoiseStats stats;
    const FusedCloud out = denoise(f, 3.0, 2.0, Exec::Serial, &stats);
    CHECK(out.cloud.points == f.cloud.points);
    CHECK(stats.isolated == 2);
    CHECK(stats.changed == 0);
  }

  TEST_CASE("decisions match the brute-force oracle and outliers are fixed") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<std::size_t> outliers;
      const FusedCloud f = plane_with_outliers(seed, &outliers);
      DenoiseStats stats;
      const FusedCloud out = denoise(f, 3.0, 2.0, Exec::Parallel, &stats);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < f.cloud.size(); ++i) {
        const auto [expect_change, expect_z] = oracle(f.cloud, i, 3.0, 2.0);
        CHECK(static_cast<bool>(out.denoised[i]) == expect_change);
        CHECK(out.cloud.points[i].z() == doctest::Approx(expect_z).epsilon(1e-12));
        CHECK(out.cloud.points[i].x() == f.cloud.points[i].x());
        CHECK(out.cloud.points[i].y() == f.cloud.points[i].y());
        changed += expect_change;
      }
      CHECK(stats.changed == changed);
      for (std::size_t i : outliers) CHECK(out.denoised[i] == 1);
    }
  }

  TEST_CASE("denoise commutes with permutation") {
    const FusedCloud f = plane_with_outliers(7, nullptr);
    FusedCloud g = f;
    std::vector<std::size_t> perm(f.cloud.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 17, perm.end());
    for (std::size_t k = 0; k < perm.size(); ++k) g.cloud.points[k] = f.cloud.points[perm[k]];
    const FusedCloud a = denoise(f), b = denoise(g);
    for (std::size_t k = 0; k < perm.size(); ++k) {
      CHECK(b.cloud.points[k].z() == doctest::Approx(a.cloud.points[perm[k]].z()).epsilon(1e-12));
      CHECK(b.denoised[k] == a.denoised[perm[k]]);
    }
  }

  TEST_CASE("augment_depth stays in its ranges") {
    DepthMap map;
    map.resolution = 64;
    map.depth.assign(64 * 64, 1.0);
    map.mask.assign(64 * 64, 1);
    AugmentSpec spec;
    Rng rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const AugmentedDepth a = augment_depth(map, spec, rng);
      CHECK(a.patches.size() >= 1);
      CHECK(a.patches.size() <= 6);
      std::size_t blank = 0, covered_bound = 0;
      for (const Patch& p : a.patches) {
        CHECK(p.side >= 0);
        CHECK(p.side <= 20);
        covered_bound += static_cast<std::size_t>(p.side * p.side);
      }
      for (std::size_t k = 0; k < a.map.mask.size(); ++k) {
        if (!a.map.mask[k]) {
          ++blank;
          CHECK(a.map.depth[k] == 0.0);
        }
      }
      CHECK(blank <= covered_bound);
      CHECK(blank <= 2400);
    }
    spec.patch_size_max = 0;
    const AugmentedDepth none = augment_depth(map, spec, rng);
    CHECK(none.map.valid_count() == map.valid_count());
    spec.patch_count_min = 7;
    CHECK_THROWS_AS(spec.validate(), Error);
  }

  TEST_CASE("jitter keeps the centroid and distances") {
    const FrameSequence seq = noiseless_sequence(9);
    const PointCloud& c = seq.frames[0];
    AugmentSpec spec;
    Rng rng(10);
    const PointCloud j = jitter_pose(c, spec, rng);
    CHECK((centroid(j) - centroid(c)).norm() < 1e-9);
    CHECK(std::abs((j.points[0] - j.points[5]).norm() - (c.points[0] - c.points[5]).norm()) < 1e-9);
  }
}
