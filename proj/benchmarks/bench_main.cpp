#include <benchmark/benchmark.h>

#include <trackcull/trackcull.hpp>

namespace {

using namespace trackcull;

SimConfig bench_config(double noise_mean) {
  SimConfig config;
  config.noise_mean = noise_mean;
  config.wire_noise_sigma = 0.1;
  config.seed = 11;
  return config;
}

Dataset toy_training_set(std::int64_t events) {
  SimConfig config = bench_config(0.5);
  config.n_events = events;
  const auto generated = generate_events(config, 1);
  return extract_dataset(generated, NegativeStrategy::ClosestNeighbor, ExtractionMode::Training, 3, 1).dataset;
}

void BM_GenerateCandidates(benchmark::State& state) {
  const Event event = generate_event(bench_config(static_cast<double>(state.range(0))), 5);
  for (auto _ : state) benchmark::DoNotOptimize(generate_candidates(event));
  state.counters["candidates"] = static_cast<double>(event.candidate_count());
}
BENCHMARK(BM_GenerateCandidates)->Arg(0)->Arg(1)->Arg(2);

void BM_QuadraticSeed(benchmark::State& state) {
  const std::array<double, kSuperlayers> wires{10.1, 14.2, 25.9, 46.0, 74.1, 109.8};
  for (auto _ : state) benchmark::DoNotOptimize(quadratic_seed(wires));
}
BENCHMARK(BM_QuadraticSeed);

void BM_SurrogateFit(benchmark::State& state) {
  const std::array<double, kSuperlayers> wires{10.1, 14.2, 25.9, 46.0, 74.1, 109.8};
  FitConfig config;
  config.propagation_steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(surrogate_fit(wires, config));
}
BENCHMARK(BM_SurrogateFit)->Arg(1)->Arg(64)->Arg(256);

void BM_MlpForward(benchmark::State& state) {
  const MlpModel model = MlpModel::initialized({64, 64, 64}, 7);
  const Features x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(x));
}
BENCHMARK(BM_MlpForward);

void BM_ErtPredict(benchmark::State& state) {
  static const ErtModel model = [] {
    ErtHyperparams hp;
    hp.n_estimators = 300;
    return ert_train(toy_training_set(2000), hp, 1);
  }();
  const Features x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  for (auto _ : state) benchmark::DoNotOptimize(ert_predict(model, x));
}
BENCHMARK(BM_ErtPredict);

}  // namespace
BENCHMARK_MAIN();
