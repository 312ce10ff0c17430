// Serial vs OpenMP timings for the hot kernels. The second benchmark argument
// selects the mode: 0 = Exec::Serial, 1 = Exec::Parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "gcd/clustering.hpp"
#include "gcd/datagen.hpp"
#include "gcd/encoder.hpp"
#include "gcd/objective.hpp"

using namespace gcd;

namespace {

Exec mode(const benchmark::State& st) { return st.range(1) == 0 ? Exec::Serial : Exec::Parallel; }

EmbeddingMatrix features(std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g(0.0, 1.0);
  EmbeddingMatrix m(n, dim);
  for (double& v : m.values()) v = g(rng);
  return m;
}

Dataset synth(std::size_t clips) {
  SynthConfig cfg;
  cfg.clips_per_source = clips;
  cfg.seed = 3;
  return generate(cfg);
}

void BM_SimilarityMatrix(benchmark::State& st) {
  const auto z = features(static_cast<std::size_t>(st.range(0)), 64);
  for (auto _ : st) benchmark::DoNotOptimize(similarity_matrix(z, mode(st)));
}

void BM_EncoderForward(benchmark::State& st) {
  const auto h = features(static_cast<std::size_t>(st.range(0)), 64);
  const auto p = encoder_init(64, 256, 2, 1);
  for (auto _ : st) benchmark::DoNotOptimize(encoder_forward(p, h, mode(st)));
}

void BM_EncoderBackward(benchmark::State& st) {
  const auto h = features(static_cast<std::size_t>(st.range(0)), 64);
  const auto g = features(static_cast<std::size_t>(st.range(0)), 64);
  const auto p = encoder_init(64, 256, 2, 1);
  for (auto _ : st) benchmark::DoNotOptimize(encoder_backward(p, h, g, mode(st)));
}

void BM_CombinedLoss(benchmark::State& st) {
  const auto d = synth(static_cast<std::size_t>(st.range(0)));
  const auto view = mask_truth(d);
  const auto sims = similarity_matrix(view.features);
  const auto sup = build_supervised_pairs(view, sims, 50);
  std::mt19937_64 rng(1);
  const auto uns = build_unsupervised_pairs(view, sims, 5, 50, rng);
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        combined_loss(view.features, sup, uns, 0.1, 0.5, LossReduction::Mean, mode(st)));
  }
}

void BM_PairBuilding(benchmark::State& st) {
  const auto d = synth(static_cast<std::size_t>(st.range(0)));
  const auto view = mask_truth(d);
  const auto sims = similarity_matrix(view.features);
  for (auto _ : st) {
    std::mt19937_64 rng(1);
    benchmark::DoNotOptimize(build_supervised_pairs(view, sims, 50, mode(st)));
    benchmark::DoNotOptimize(build_unsupervised_pairs(view, sims, 5, 50, rng, mode(st)));
  }
}

void BM_KMeans(benchmark::State& st) {
  const auto d = synth(static_cast<std::size_t>(st.range(0)));
  KMeansOptions opt;
  opt.k = 12;
  opt.n_restarts = 3;
  for (auto _ : st) benchmark::DoNotOptimize(kmeans(d.features, opt, mode(st)));
}

}  // namespace

BENCHMARK(BM_SimilarityMatrix)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncoderForward)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncoderBackward)->ArgsProduct({{256, 1024}, {0, 1}})->Unit(benchmark::kMillisecond);
// Argument 0 is clips per source: 10 -> 720 samples, 20 -> 1440.
BENCHMARK(BM_CombinedLoss)->ArgsProduct({{10, 20}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairBuilding)->ArgsProduct({{10, 20}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->ArgsProduct({{10, 20}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
