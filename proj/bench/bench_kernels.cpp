// Serial reference kernels against their OpenMP counterparts. The range argument of the
// OpenMP variants is the thread count.
#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "reference.hpp"

#include "pseudobox/eval.hpp"
#include "pseudobox/graph.hpp"
#include "pseudobox/synth.hpp"

using namespace pbox;

namespace {

const synth::SyntheticScene& bench_scene() {
  static const auto scene = synth::generate_scene(1, 8, 7.0, 8);
  return scene;
}

std::vector<AxisAlignedBox3D> random_boxes(size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(0, 10), s(0.1, 2);
  std::vector<AxisAlignedBox3D> out(n);
  for (auto& b : out) {
    b.center = Point3(c(rng), c(rng), c(rng));
    b.size = Eigen::Vector3d(s(rng), s(rng), s(rng));
  }
  return out;
}

void threads_from(benchmark::State& state) { omp_set_num_threads(static_cast<int>(state.range(0))); }

void BM_render_serial(benchmark::State& state) {
  const auto& scene = bench_scene();
  for (auto _ : state) {
    for (size_t c = 0; c < scene.cameras.size(); ++c)
      benchmark::DoNotOptimize(reference::render_serial(scene, c, {}));
  }
}
BENCHMARK(BM_render_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_render_omp(benchmark::State& state) {
  threads_from(state);
  const auto& scene = bench_scene();
  for (auto _ : state) benchmark::DoNotOptimize(synth::render_depth_and_masks(scene, {}));
}
BENCHMARK(BM_render_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_edges_exhaustive(benchmark::State& state) {
  const auto s = reference::random_node_scene(3, 400);
  const VoxelGridSpec grid(0.2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::exhaustive_edges(s.nodes, s.canon, grid, 0.3));
}
BENCHMARK(BM_edges_exhaustive)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_edges_omp(benchmark::State& state) {
  threads_from(state);
  const auto s = reference::random_node_scene(3, 400);
  const VoxelGridSpec grid(0.2);
  for (auto _ : state) benchmark::DoNotOptimize(build_edges(s.nodes, s.canon, grid, 0.3));
}
BENCHMARK(BM_edges_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_iou_serial(benchmark::State& state) {
  const auto p = random_boxes(1000, 1), g = random_boxes(1000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(reference::iou_matrix_serial(p, g));
}
BENCHMARK(BM_iou_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_iou_omp(benchmark::State& state) {
  threads_from(state);
  const auto p = random_boxes(1000, 1), g = random_boxes(1000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(iou_matrix(p, g));
}
BENCHMARK(BM_iou_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
