#include "condconf/conformal.hpp"
#include "condconf/qr_solver.hpp"
#include "condconf/rng.hpp"

#include <benchmark/benchmark.h>

using namespace condconf;

namespace {

struct Problem {
  Matrix x;
  Vector s;
};

Problem make_problem(Index n, Index d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  Problem p{Matrix(n, d), Vector(n)};
  for (Index i = 0; i < n; ++i) {
    p.x(i, 0) = 1;
    for (Index j = 1; j < d; ++j) p.x(i, j) = standard_normal(rng);
    p.s[i] = p.x.row(i).sum() + standard_normal(rng);
  }
  return p;
}

void BM_PinballSolve(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), 1);
  const auto levels = LevelVector::constant(p.x.rows(), 0.1);
  const FeatureMatrix f(p.x, 0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_pinball_qr(f, p.s, levels));
}
BENCHMARK(BM_PinballSolve)->Args({200, 2})->Args({1000, 2})->Args({1000, 10})->Args({4000, 5})->Unit(benchmark::kMillisecond);

void BM_CutoffNonrandomized(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), 2);
  ConditionalCalibrator cal(FeatureMatrix(p.x, 0), p.s, LevelVector::constant(p.x.rows(), 0.1));
  const Vector test = p.x.row(0).transpose();
  for (auto _ : state) benchmark::DoNotOptimize(cal.nonrandomized(test, 0.1));
}
BENCHMARK(BM_CutoffNonrandomized)->Args({200, 2})->Args({1000, 5})->Unit(benchmark::kMillisecond);

void BM_CutoffRandomized(benchmark::State& state) {
  const auto p = make_problem(state.range(0), state.range(1), 3);
  ConditionalCalibrator cal(FeatureMatrix(p.x, 0), p.s, LevelVector::constant(p.x.rows(), 0.1));
  const Vector test = p.x.row(0).transpose();
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(cal.randomized(test, 0.1, draw_randomization(0.1, seed++)));
}
BENCHMARK(BM_CutoffRandomized)->Args({200, 2})->Args({1000, 5})->Unit(benchmark::kMillisecond);

void BM_ScoreFromLoss(benchmark::State& state) {
  Rng rng = make_rng(4);
  ScoredClaimSet c;
  for (int j = 0; j < state.range(0); ++j) {
    c.claim_scores.push_back(uniform01(rng));
    c.annotations.push_back(uniform01(rng) < 0.7);
  }
  const auto loss = MonotoneLoss::count_false(1);
  for (auto _ : state) benchmark::DoNotOptimize(score_from_loss(c, loss));
}
BENCHMARK(BM_ScoreFromLoss)->Arg(12)->Arg(200);

}  // namespace
BENCHMARK_MAIN();
