#include <benchmark/benchmark.h>

#include "seqkernel/counterfactual.hpp"
#include "seqkernel/dr_inference.hpp"
#include "seqkernel/kernels.hpp"
#include "seqkernel/mediation.hpp"
#include "seqkernel/ridge.hpp"
#include "seqkernel/simulation.hpp"
#include "seqkernel/timevarying.hpp"

using namespace seqkernel;

namespace {

MediationData h1(Eigen::Index n) { return simulate(DgpTag::H1, n, 1, 1).mediation(); }
TimeVaryingData h3(Eigen::Index n) { return simulate(DgpTag::H3, n, 1, 1).time_varying(); }

void BM_Gram(benchmark::State& state) {
  const MediationData data = h1(state.range(0));
  const KernelSpec spec = block_kernel(data.x);
  for (auto _ : state) benchmark::DoNotOptimize(gram(spec, data.x).entries.data());
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Gram)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_TuneLambda(benchmark::State& state) {
  const MediationData data = h1(state.range(0));
  const Eigen::MatrixXd K = gram(block_kernel(data.x), data.x).entries;
  for (auto _ : state) benchmark::DoNotOptimize(tune_lambda(K, data.y, default_lambda_grid(), Criterion::Loocv));
}
BENCHMARK(BM_TuneLambda)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond);

void BM_FitMediation(benchmark::State& state) {
  const MediationData data = h1(state.range(0));
  const MediationKernels kernels = resolve_kernels(data);
  for (auto _ : state) benchmark::DoNotOptimize(fit_mediation(data, kernels).lambda);
}
BENCHMARK(BM_FitMediation)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond);

void BM_MediationSurface(benchmark::State& state) {
  const MediationData data = h1(state.range(0));
  const MediationModel model = fit_mediation(data, resolve_kernels(data));
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(-1.0 + 2.0 * k / 19.0);
  for (auto _ : state) benchmark::DoNotOptimize(theta_me_surface(model, grid, grid).data());
}
BENCHMARK(BM_MediationSurface)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond);

void BM_FitTimeVarying(benchmark::State& state) {
  const TimeVaryingData data = h3(state.range(0));
  const TimeVaryingKernels kernels = resolve_kernels(data);
  for (auto _ : state) benchmark::DoNotOptimize(fit_gf(data, kernels).lambda);
}
BENCHMARK(BM_FitTimeVarying)->RangeMultiplier(2)->Range(250, 2000)->Unit(benchmark::kMillisecond);

void BM_CrossFitMediation(benchmark::State& state) {
  const MediationData data = simulate(DgpTag::H2, state.range(0), 1, 1).mediation();
  const DmlOptions options{5, 0.95, 1, {}, 1};
  for (auto _ : state) benchmark::DoNotOptimize(dml_mediation(data, coverage_cells(), options).size());
}
BENCHMARK(BM_CrossFitMediation)->Arg(500)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Herd(benchmark::State& state) {
  const MediationData data = h1(500);
  const MediationModel model = fit_mediation(data, resolve_kernels(data));
  const DistEmbedding e = dist_embedding_me(model, fit_outcome_embedding(model, outcome_kernel(model.Y)), 0.0, 1.0);
  const std::vector<double> grid = default_herding_grid(e.y_train);
  for (auto _ : state) benchmark::DoNotOptimize(herd(e, grid, static_cast<int>(state.range(0))).samples.data());
}
BENCHMARK(BM_Herd)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
