#include <random>

#include <benchmark/benchmark.h>

#include "mssg/functionals.hpp"
#include "mssg/mc_oracle.hpp"
#include "mssg/solver.hpp"

using namespace mssg;

namespace {

MixtureModel coupled() {
  InteractionTerm quad{2, {{{0, 0}, 1.5}, {{1, 1}, 1.0}, {{0, 1}, 0.6}, {{1, 0}, 0.6}}};
  InteractionTerm quart{4, {{{0, 0, 0, 0}, 2.0}, {{1, 1, 1, 1}, 1.0}}};
  return MixtureModel({{"s", 0.4, 0.3}, {"t", 0.6, 0.0}}, {quad, quart});
}

DiscretePair spread_pair(int k) {
  Eigen::VectorXd m(k);
  Eigen::MatrixXd pts(2, k);
  for (int j = 0; j < k; ++j) {
    m[j] = (j + 1.0) / k;
    pts(0, j) = 0.8 * j / k;
    pts(1, j) = 0.7 * j / k;
  }
  return DiscretePair(m, pts);
}

void BM_EvalB(benchmark::State& state) {
  const auto model = coupled();
  const auto pair = spread_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(eval_B(pair, model));
}
BENCHMARK(BM_EvalB)->Arg(1)->Arg(8)->Arg(64);

void BM_GradB(benchmark::State& state) {
  const auto model = coupled();
  const auto pair = spread_pair(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(grad_B_points(pair, model));
}
BENCHMARK(BM_GradB)->Arg(1)->Arg(8)->Arg(64);

void BM_Solve(benchmark::State& state) {
  const auto model = coupled();
  SolveConfig config;
  config.k_max = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(minimize_B(model, config).value);
}
BENCHMARK(BM_Solve)->Arg(2)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  InteractionTerm quad{2, {{{0, 0}, 0.125}}};
  const MixtureModel model({{"s", 1.0, 0.0}}, {quad});
  McConfig config;
  config.N = 64;
  config.samples = state.range(0);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_F(model, config).F);
}
BENCHMARK(BM_MonteCarlo)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
