#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "ialpha/backtest.hpp"
#include "ialpha/objectives.hpp"
#include "ialpha/trainer.hpp"
#include "scenarios.hpp"

namespace {

using namespace ialpha;

ModelConfig StudyConfig() {
  ModelConfig c;
  c.lookback = 20;
  c.num_features = 12;
  c.hidden = 64;
  c.latent = 8;
  c.head_hidden = 64;
  c.mask_hidden = 32;
  c.recon_hidden = 64;
  c.env_dim = 4;
  return c;
}

void BM_PairwiseHinge(benchmark::State& state) {
  const auto n = state.range(0);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd a = fixture::NormalMatrix(rng, n, 1), b = fixture::NormalMatrix(rng, n, 1);
  const Eigen::VectorXd w = SampleWeights(Eigen::VectorXd(b));
  const ag::HingeOptions options{state.range(1), 0};
  for (auto _ : state) {
    const ag::Var pa = ag::Var::Leaf(a, true);
    const ag::Var loss = ag::PairwiseHinge(pa, ag::Var::Constant(b), w, options);
    ag::Backward(loss);
    benchmark::DoNotOptimize(pa.grad().data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_PairwiseHinge)->Args({200, 512})->Args({2000, 512})->Args({2000, 128});

void BM_GaussianKld(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto mp = fixture::Normals(rng, k), mq = fixture::Normals(rng, k);
  std::vector<double> sp(k, 0.7), sq(k, 1.3);
  for (auto _ : state) benchmark::DoNotOptimize(GaussianKld(mp, sp, mq, sq));
}
BENCHMARK(BM_GaussianKld)->Arg(8)->Arg(64);

void BM_InferenceForward(benchmark::State& state) {
  ModelConfig c = StudyConfig();
  const InvariantModel model(c, 3);
  const InferenceModel inference(c, true, model.InferenceTensors());
  std::mt19937_64 rng(3);
  const WindowBatch batch = fixture::RandomBatch(rng, c, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(inference.Infer(batch).prediction.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_InferenceForward)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_PhaseObjectiveWithGradient(benchmark::State& state) {
  const ModelConfig c = StudyConfig();
  const InvariantModel model(c, 4);
  std::mt19937_64 rng(4);
  const WindowBatch batch = fixture::RandomBatch(rng, c, 200);
  const Eigen::RowVectorXd eps_z = fixture::NormalMatrix(rng, 1, static_cast<Eigen::Index>(c.latent));
  const Eigen::VectorXd eps_alpha = fixture::NormalMatrix(rng, 200, 1);
  const ag::Var features = ag::Var::Constant(batch.x);
  const LossCoefficients coefficients;
  const ag::HingeOptions hinge;
  const bool selection = state.range(0) == 0;
  (selection ? model.SelectionParameters() : model.InvariantParameters()).SetTrainable(true);
  for (auto _ : state) {
    if (selection) {
      const ag::Var masked = model.mask().Forward(features).features;
      ag::Backward(SelectionObjective(model, batch, masked, coefficients, hinge).total);
      model.SelectionParameters().ZeroGrad();
    } else {
      ag::Backward(PredictionObjective(model.invariant(), batch, features, eps_z, eps_alpha, coefficients, hinge).total);
      model.InvariantParameters().ZeroGrad();
    }
  }
}
BENCHMARK(BM_PhaseObjectiveWithGradient)->Arg(0)->Arg(1)->ArgNames({"phi"})->Unit(benchmark::kMillisecond);

void BM_BacktestDay(benchmark::State& state) {
  const auto stocks = static_cast<std::size_t>(state.range(0));
  const scenario::RandomMarket market = scenario::MakeMarket(5, stocks, 60);
  BacktestConfig c;
  c.k = 50;
  c.market = Market::kUS;
  for (auto _ : state) benchmark::DoNotOptimize(RunBacktest(market.days, market.terminal, c).report.final_equity);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(market.days.size()));
}
BENCHMARK(BM_BacktestDay)->Arg(300)->Arg(3000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
