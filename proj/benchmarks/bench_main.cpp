#include <benchmark/benchmark.h>

#include "schedlab/calculus.hpp"
#include "schedlab/models.hpp"
#include "schedlab/sampler.hpp"
#include "schedlab/schedule.hpp"

namespace {

using namespace schedlab;

AnalyticModel mixture(double w_plus, std::size_t dim) {
  Vec plus(dim, 0.0), minus(dim, 0.0);
  plus[0] = 2.0;
  minus[0] = -2.0;
  return AnalyticModel::mixture({{w_plus, plus, 0.5}, {1.0 - w_plus, minus, 0.5}});
}

void BM_EvalAlphaBar(benchmark::State& state) {
  const Schedule schedule(ScheduleSpec::defaults(static_cast<Family>(state.range(0)), 1000));
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(schedule.alpha_bar(t));
    t = t >= 999.0 ? 0.0 : t + 0.37;
  }
  state.SetLabel(std::string(to_string(schedule.spec().family)));
}
BENCHMARK(BM_EvalAlphaBar)->DenseRange(0, 3);

void BM_BuildTable(benchmark::State& state) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::ScaledLinear, static_cast<int>(state.range(0)));
  const auto grid = integer_grid(spec.T);
  for (auto _ : state) benchmark::DoNotOptimize(build_table(spec, grid));
}
BENCHMARK(BM_BuildTable)->Arg(100)->Arg(1000);

void BM_DxDtCoefficients(benchmark::State& state) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Logistic, 1000);
  double t = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(dx_dt_coefficients(spec, t));
    t = t >= 999.0 ? 0.0 : t + 0.37;
  }
}
BENCHMARK(BM_DxDtCoefficients);

void BM_ExactEps(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  const AnalyticModel model = mixture(0.95, dim);
  const Vec x(dim, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(exact_eps(model, x, 0.4));
}
BENCHMARK(BM_ExactEps)->Arg(8)->Arg(64)->Arg(512);

void BM_RoundTrip(benchmark::State& state) {
  SamplerConfig cfg;
  cfg.n_steps = static_cast<int>(state.range(0));
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Logistic, 1000);
  const ScheduleTable table = build_table(spec, timestep_grid(spec.T, cfg));
  const ModelPair pair{mixture(0.5, 8), mixture(0.95, 8)};
  const Vec x0 = sample_x0(pair.cond, 1, 1).front();
  for (auto _ : state) {
    const Trajectory inv = run_inversion(pair, x0, table, cfg, 1);
    benchmark::DoNotOptimize(run_reverse(pair, inv.final_state(), table, cfg, 1));
  }
}
BENCHMARK(BM_RoundTrip)->Arg(50)->Arg(400);

void BM_OdeReference(benchmark::State& state) {
  const ScheduleSpec spec = ScheduleSpec::defaults(Family::Logistic, 1000);
  const ScheduleTable table = build_table(spec, integer_grid(1000));
  const ModelPair pair{mixture(0.5, 8), mixture(0.95, 8)};
  const Vec x0 = sample_x0(pair.cond, 1, 1).front();
  OdeOptions options;
  options.n_fine = static_cast<int>(state.range(0));
  options.allow_singular_start = true;
  for (auto _ : state) benchmark::DoNotOptimize(ode_reference_solve(pair, 3.5, x0, table, 0.0, 1000.0, options));
}
BENCHMARK(BM_OdeReference)->Arg(1000)->Arg(2000);

}  // namespace
BENCHMARK_MAIN();
