#include <benchmark/benchmark.h>

#include "bipmatch/assign.hpp"
#include "bipmatch/gauss_fit.hpp"
#include "bipmatch/ising_fit.hpp"
#include "bipmatch/matcher.hpp"
#include "bipmatch/models.hpp"
#include "bipmatch/rng.hpp"

using namespace bipmatch;

namespace {

Eigen::MatrixXd random_cost(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd c(n, n);
  for (int i = 0; i < n * n; ++i) c(i / n, i % n) = rng.normal();
  return c;
}

void BM_LapSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Eigen::MatrixXd cost = random_cost(n, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lap_solve(cost, LapSense::kMin));
  }
}
BENCHMARK(BM_LapSolve)->Arg(50)->Arg(100)->Arg(200);

void BM_WeightedGlasso(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n * n; ++i) g(i / n, i % n) = rng.normal();
  const CovarianceEstimate cov{
      Eigen::MatrixXd(g * g.transpose() / n + 0.5 * Eigen::MatrixXd::Identity(n, n)),
      Eigen::VectorXd::Zero(n), 100};
  const PenaltyWeights w = PenaltyWeights::uniform(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(weighted_graphical_lasso(cov, w, 0.1));
  }
}
BENCHMARK(BM_WeightedGlasso)->Arg(10)->Arg(30)->Arg(60);

void BM_FaqStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const UnipartiteGraph a = er_graph(n, 0.1, 3);
  Eigen::MatrixXd m = random_cost(n, 4).cwiseAbs();
  m = ((m + m.transpose()) / 2.0).eval();
  const DoublyStochastic d0 = barycenter(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(faq_step(a, m, d0));
  }
}
BENCHMARK(BM_FaqStep)->Arg(50)->Arg(100);

void BM_GibbsSample(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const UnipartiteGraph a = chain_graph(n);
  Eigen::MatrixXd theta = 0.4 * a.adj();
  const MrfParams params(ModelFamily::kIsing, theta,
                         Eigen::VectorXd(-0.5 * theta.rowwise().sum()));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ising_gibbs_sample(params, 50, 500, 5, 9));
  }
}
BENCHMARK(BM_GibbsSample)->Arg(20)->Arg(50);

void BM_NodewiseLogistic(benchmark::State& state) {
  const int n = 20;
  const int m = static_cast<int>(state.range(0));
  const UnipartiteGraph a = chain_graph(n);
  Eigen::MatrixXd theta = 0.4 * a.adj();
  const MrfParams params(ModelFamily::kIsing, theta,
                         Eigen::VectorXd(-0.5 * theta.rowwise().sum()));
  const BipartiteData b = ising_gibbs_sample(params, m, 100, 1, 11);
  const PenaltyWeights w = PenaltyWeights::uniform(n);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lasso_logistic_node(b, 3, w, 0.05));
  }
}
BENCHMARK(BM_NodewiseLogistic)->Arg(500)->Arg(2000);

void BM_MatchInvcov(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const UnipartiteGraph a = chain_graph(n);
  Eigen::MatrixXd theta = 0.4 * a.adj();
  theta.diagonal().array() = 1.0;
  const MrfParams params(ModelFamily::kGaussian, theta, Eigen::VectorXd::Zero(n));
  const BipartiteData b = gaussian_sample(params, 500, 13);
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_invcov(a, b, MatchConfig{}));
  }
}
BENCHMARK(BM_MatchInvcov)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
