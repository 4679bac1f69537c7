#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "stutterkit/evaluator.hpp"
#include "stutterkit/featurizer.hpp"
#include "stutterkit/model.hpp"
#include "stutterkit/random.hpp"
#include "stutterkit/registry.hpp"

using namespace stutterkit;

namespace {

AudioClip chirp(double seconds) {
  AudioClip clip;
  const auto n = static_cast<std::size_t>(seconds * kSampleRate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    clip.samples[i] = static_cast<float>(0.3 * std::sin(2.0 * std::numbers::pi * (200.0 + 600.0 * t) * t));
  }
  return clip;
}

ModelConfig narrow_model(int d_model) {
  ModelConfig cfg;
  cfg.d_model = d_model;
  cfg.n_heads = 4;
  cfg.d_ffn = 4 * d_model;
  cfg.d_proj = d_model / 2;
  return cfg;
}

}  // namespace

static void bm_featurize_6s(benchmark::State& state) {
  const Featurizer fz;
  const AudioClip clip = chirp(6.0);
  for (auto _ : state) benchmark::DoNotOptimize(fz(clip));
}
BENCHMARK(bm_featurize_6s)->Unit(benchmark::kMillisecond);

static void bm_forward(benchmark::State& state) {
  const ModelConfig cfg = narrow_model(static_cast<int>(state.range(0)));
  const ParameterRegistry reg = init_registry(cfg, 1);
  const Matrix features = Featurizer()(chirp(6.0)).values;
  for (auto _ : state) benchmark::DoNotOptimize(forward(features, reg, cfg));
}
BENCHMARK(bm_forward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

static void bm_forward_backward(benchmark::State& state) {
  const ModelConfig cfg = narrow_model(64);
  const ParameterRegistry reg = init_registry(cfg, 1);
  const Matrix features = Featurizer()(chirp(6.0)).values;
  const LabelVector target = LabelVector::single(Label::block);
  for (auto _ : state) {
    Gradients g(reg);
    benchmark::DoNotOptimize(forward_backward(features, target, reg, cfg, g, 1.0));
  }
}
BENCHMARK(bm_forward_backward)->Unit(benchmark::kMillisecond);

static void bm_f1_report(benchmark::State& state) {
  Rng rng(3);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<LabelVector> preds(n), targets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      preds[i].set(c, rng.uniform() < 0.3);
      targets[i].set(c, rng.uniform() < 0.3);
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(f1_report(preds, targets));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(bm_f1_report)->Arg(1000)->Arg(100000);
BENCHMARK_MAIN();
