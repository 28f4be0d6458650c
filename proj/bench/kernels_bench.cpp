// Serial reference kernels against their OpenMP versions. The OpenMP
// benchmarks take the team size as their argument.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "sparsereg/fusion.hpp"
#include "sparsereg/kernels.hpp"
#include "sparsereg/regressor.hpp"
#include "sparsereg/spatial_index.hpp"

using namespace sparsereg;

namespace {

const PointCloud& face_frame() {
  static const PointCloud frame = [] {
    Rng rng(1);
    return sparse_sample(sample_dense(generate_identity(1), 10000), 1000, rng);
  }();
  return frame;
}

const PointCloud& fused_face() {
  static const PointCloud cloud = [] {
    Rng rng(2);
    const FrameSequence seq = generate_sequence(generate_identity(2), rng);
    return fuse_sequence(seq, ground_truth_transforms(seq)).cloud;
  }();
  return cloud;
}

struct GradientFixture {
  RegressorConfig config;
  RegressorParams params;
  std::vector<kernels::TrainingExample> examples;
  std::vector<std::size_t> batch;
};

const GradientFixture& gradient_fixture() {
  static const GradientFixture f = [] {
    GradientFixture g;
    g.params = init_params(g.config, 3);
    const PairSet set = generate_pair_set(32, Regime::Standard, 4);
    for (const auto& p : set.pairs) {
      const EncodedPair e = encode_pair(p.source, p.target, g.config);
      g.examples.push_back(
          {e.input, center_transform(p.gt, e.source_centroid, e.target_centroid)});
      g.batch.push_back(g.batch.size());
    }
    return g;
  }();
  return f;
}

void BM_FillIdwSerial(benchmark::State& state) {
  const RasterConfig cfg;
  const Occupancy occ = project_occupancy(face_frame(), cfg);
  for (auto _ : state) {
    CoordinateMap out = occ.map;
    kernels::fill_idw_serial(occ, cfg, out);
    benchmark::DoNotOptimize(out.z.data());
  }
}

void BM_FillIdwOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const RasterConfig cfg;
  const Occupancy occ = project_occupancy(face_frame(), cfg);
  for (auto _ : state) {
    CoordinateMap out = occ.map;
    kernels::fill_idw_omp(occ, cfg, out);
    benchmark::DoNotOptimize(out.z.data());
  }
}

void BM_DenoiseSerial(benchmark::State& state) {
  const PointCloud& c = fused_face();
  const GridIndex2D index(c.points, 3.0);
  for (auto _ : state) {
    auto d = kernels::denoise_serial(c.points, index, 3.0, 2.0);
    benchmark::DoNotOptimize(d.z.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

void BM_DenoiseOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const PointCloud& c = fused_face();
  const GridIndex2D index(c.points, 3.0);
  for (auto _ : state) {
    auto d = kernels::denoise_omp(c.points, index, 3.0, 2.0);
    benchmark::DoNotOptimize(d.z.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(c.size()));
}

void BM_BatchGradientSerial(benchmark::State& state) {
  const GradientFixture& f = gradient_fixture();
  for (auto _ : state) {
    auto g = kernels::batch_gradient_serial(f.config, f.params, f.examples, f.batch);
    benchmark::DoNotOptimize(g.grad.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

void BM_BatchGradientOmp(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const GradientFixture& f = gradient_fixture();
  for (auto _ : state) {
    auto g = kernels::batch_gradient_omp(f.config, f.params, f.examples, f.batch);
    benchmark::DoNotOptimize(g.grad.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.batch.size()));
}

}  // namespace

BENCHMARK(BM_FillIdwSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FillIdwOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DenoiseSerial)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_DenoiseOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BatchGradientSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchGradientOmp)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
