#include <benchmark/benchmark.h>

#include "anchorflow/edit.hpp"
#include "anchorflow/metrics.hpp"
#include "anchorflow/mlp.hpp"

namespace {

using namespace af;

const EditTask& task() {
  static const EditTask t = paired_two_mode();
  return t;
}

void BM_DeriveNoise(benchmark::State& state) {
  const auto d = static_cast<int>(state.range(0));
  std::uint64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(rng::derive_noise(1, 2, ++step, 0, d));
}
BENCHMARK(BM_DeriveNoise)->Arg(2)->Arg(16);

void BM_MarginalVelocity(benchmark::State& state) {
  const Vec x = (Vec(2) << -1.2, 0.4).finished();
  double t = 0.0;
  for (auto _ : state) {
    t = t < 0.99 ? t + 0.01 : 0.01;
    benchmark::DoNotOptimize(marginal_velocity(task().uncond, x, t));
  }
}
BENCHMARK(BM_MarginalVelocity);

void BM_CfgVelocity(benchmark::State& state) {
  const Vec x = (Vec(2) << -1.2, 0.4).finished();
  for (auto _ : state) benchmark::DoNotOptimize(cfg_velocity(task(), x, 0.5, Cond::Tar, 7.5));
}
BENCHMARK(BM_CfgVelocity);

void BM_AnchorFlowSample(benchmark::State& state) {
  const GmmOracleField field(task());
  EditConfig cfg;
  cfg.method = Method::AnchorFlow;
  const Vec x_src = (Vec(2) << -2.5, 0.9).finished();
  for (auto _ : state) benchmark::DoNotOptimize(anchorflow_sample(field, task(), cfg, x_src, 0));
}
BENCHMARK(BM_AnchorFlowSample);

void BM_FlowEditSample(benchmark::State& state) {
  const GmmOracleField field(task());
  EditConfig cfg;
  cfg.method = Method::FlowEdit;
  const Vec x_src = (Vec(2) << -2.5, 0.9).finished();
  for (auto _ : state) benchmark::DoNotOptimize(flowedit_sample(field, task(), cfg, x_src, 0));
}
BENCHMARK(BM_FlowEditSample);

void BM_MlpEval(benchmark::State& state) {
  const MlpField f = MlpField::init(2, 1);
  const Vec x = (Vec(2) << 0.3, -0.2).finished();
  for (auto _ : state) benchmark::DoNotOptimize(eval_mlp(f, x, 0.5, Cond::Tar));
}
BENCHMARK(BM_MlpEval);

void BM_CfmLossGrad(benchmark::State& state) {
  const MlpField f = MlpField::init(2, 1);
  rng::CounterStream stream(3, 0, 0, 0);
  const Batch batch = sample_batch(task(), 256, stream);
  Gradients g = Gradients::zeros_like(f);
  for (auto _ : state) benchmark::DoNotOptimize(cfm_loss_grad(f, batch, g));
}
BENCHMARK(BM_CfmLossGrad);

void BM_EnergyDistance(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  rng::CounterStream stream(4, 0, 0, 0);
  std::vector<Vec> a, b;
  for (int i = 0; i < n; ++i) {
    a.push_back(stream.normal_vec(2));
    b.push_back(stream.normal_vec(2));
  }
  for (auto _ : state) benchmark::DoNotOptimize(energy_distance(a, b));
}
BENCHMARK(BM_EnergyDistance)->Arg(200)->Arg(2000);

}  // namespace

BENCHMARK_MAIN();
