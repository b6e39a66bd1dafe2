// OpenMP kernels against their serial references: the per-pixel tracer and
// the regressor's batch gradient.

#include <random>

#include <benchmark/benchmark.h>

#include "tfold/config.hpp"
#include "tfold/regressor.hpp"
#include "tfold/scene.hpp"

using namespace tfold;

namespace {

const SensorScene& reference_scene() {
  static const SensorScene scene =
      load_scene_config(std::string(TFOLD_SOURCE_DIR) + "/configs/reference_scene.json").to_scene();
  return scene;
}

void BM_TraceAll(benchmark::State& state) {
  const SensorScene& s = reference_scene();
  for (auto _ : state) benchmark::DoNotOptimize(trace_all(s));
  state.SetItemsProcessed(state.iterations() * s.camera.pixel_count);
}

void BM_TraceAllSerial(benchmark::State& state) {
  const SensorScene& s = reference_scene();
  for (auto _ : state) benchmark::DoNotOptimize(trace_all_serial(s));
  state.SetItemsProcessed(state.iterations() * s.camera.pixel_count);
}

struct Batch {
  TorqueRegressor model{RegressorShape{}, 1};
  std::vector<PlanarImage> inputs;
  std::vector<std::array<double, 2>> targets;
  std::vector<double> gradient;

  Batch() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.3);
    const RegressorShape& s = model.shape();
    for (int i = 0; i < 32; ++i) {
      PlanarImage img(s.channels, s.height, s.width);
      for (double& v : img.data) v = g(rng);
      inputs.push_back(std::move(img));
      targets.push_back({g(rng), g(rng)});
    }
    gradient.resize(model.parameters().size());
  }
};

void BM_Gradient(benchmark::State& state) {
  Batch b;
  for (auto _ : state) benchmark::DoNotOptimize(b.model.loss_and_gradient(b.inputs, b.targets, b.gradient));
  state.SetItemsProcessed(state.iterations() * 32);
}

void BM_GradientSerial(benchmark::State& state) {
  Batch b;
  for (auto _ : state) benchmark::DoNotOptimize(b.model.loss_and_gradient_serial(b.inputs, b.targets, b.gradient));
  state.SetItemsProcessed(state.iterations() * 32);
}

}  // namespace

BENCHMARK(BM_TraceAll)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TraceAllSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Gradient)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GradientSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
