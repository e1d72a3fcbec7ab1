#include <benchmark/benchmark.h>

#include <random>

#include "ckn/calibration.hpp"
#include "ckn/scenarios.hpp"

namespace {

ckn::GeneratedTrial make_trial(ckn::Index m, ckn::Index n) {
  ckn::Scenario sc;
  sc.design = ckn::DesignKind::IidNormal;
  sc.m = m;
  sc.n = n;
  sc.m1 = m / 10;
  sc.beta_star = 3.5;
  sc.alpha = 0.1;
  sc.seed = 99;
  return ckn::generate(sc, 0);
}

void BM_LassoFitGram(benchmark::State& state) {
  auto g = make_trial(state.range(0), 3 * state.range(0));
  ckn::Mat gram = g.inst.X.transpose() * g.inst.X;
  ckn::Vec xty = g.inst.X.transpose() * g.inst.y;
  double lambda = 0.3 * xty.cwiseAbs().maxCoeff();
  for (auto _ : state) {
    auto fit = ckn::lasso_fit_gram(gram, xty, lambda);
    benchmark::DoNotOptimize(fit.beta);
  }
}
BENCHMARK(BM_LassoFitGram)->Arg(50)->Arg(100);

void BM_KnockoffPipeline(benchmark::State& state) {
  auto g = make_trial(state.range(0), 3 * state.range(0));
  ckn::CknConfig cfg;
  for (auto _ : state) {
    auto rep = ckn::knockoff_only_report(g.inst, cfg);
    benchmark::DoNotOptimize(rep.rejected);
  }
}
BENCHMARK(BM_KnockoffPipeline)->Arg(50)->Arg(100);

void BM_CknockoffReject(benchmark::State& state) {
  auto g = make_trial(state.range(0), 3 * state.range(0));
  ckn::CknConfig cfg;
  for (auto _ : state) {
    auto rep = ckn::cknockoff_reject(g.inst, cfg);
    benchmark::DoNotOptimize(rep.rejected);
  }
}
BENCHMARK(BM_CknockoffReject)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
