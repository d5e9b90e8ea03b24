#include <numbers>

#include <benchmark/benchmark.h>

#include <qsync/classical_sl.hpp>
#include <qsync/dynamics.hpp>
#include <qsync/metrics.hpp>

using namespace qsync;

namespace {

SystemSpec dimer(double tail) {
  SystemSpec s;
  s.freqs = {2.0 * std::numbers::pi, 3.0 * std::numbers::pi};
  s.k = 1.0;
  s.temperature = 20.0;
  s.gamma_plus = {1e-3, 1e-3};
  s.dims = auto_dims(s.freqs, s.temperature, tail);
  return s;
}

double tail_for(std::int64_t arg) { return arg == 0 ? 1e-6 : 1e-9; }

void BM_GeneratorApply(benchmark::State& state) {
  const SystemSpec spec = dimer(tail_for(state.range(0)));
  const auto ops = SystemOperators::build(spec);
  const BlockMatrix rho = initial_product_state(spec);
  const Liouvillian gen(ops, Liouvillian::invariant_partition(ops, *rho.partition()));
  BlockMatrix out = rho;
  for (auto _ : state) {
    gen.apply(rho, out);
    benchmark::DoNotOptimize(out);
  }
  state.SetLabel(std::to_string(spec.dims.dims[0]) + "x" + std::to_string(spec.dims.dims[1]));
}
BENCHMARK(BM_GeneratorApply)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Rk4Step(benchmark::State& state) {
  const SystemSpec spec = dimer(tail_for(state.range(0)));
  const BlockMatrix rho0 = initial_product_state(spec);
  IntegratorConfig cfg;
  cfg.dt = 1e-3;
  Propagator prop(std::make_shared<const Liouvillian>(SystemOperators::build(spec),
                                                      Liouvillian::invariant_partition(SystemOperators::build(spec),
                                                                                       *rho0.partition())),
                  rho0, cfg);
  for (auto _ : state) prop.advance();
}
BENCHMARK(BM_Rk4Step)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BlockEigen(benchmark::State& state) {
  const SystemSpec spec = dimer(tail_for(state.range(0)));
  const BlockMatrix rho = initial_product_state(spec);
  for (auto _ : state) benchmark::DoNotOptimize(rho.eigen(true));
}
BENCHMARK(BM_BlockEigen)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleMetrics(benchmark::State& state) {
  const SystemSpec spec = dimer(1e-6);
  const auto ops = SystemOperators::build(spec);
  const BlockMatrix rho0 = initial_product_state(spec);
  auto gen = std::make_shared<const Liouvillian>(ops, Liouvillian::invariant_partition(ops, *rho0.partition()));
  const MetricsContext ctx(spec, ops, gen, rho0);
  const BlockMatrix rho = step(rho0, 1e-2, spec);
  for (auto _ : state) benchmark::DoNotOptimize(ctx.evaluate(0.01, rho));
}
BENCHMARK(BM_SampleMetrics)->Unit(benchmark::kMillisecond);

void BM_EulerMaruyamaStep(benchmark::State& state) {
  SLConfig cfg = SLConfig::from_quantum(dimer(1e-6));
  cfg.members = static_cast<std::size_t>(state.range(0));
  SLEnsemble ens = initial_ensemble(cfg);
  for (auto _ : state) em_step(ens, cfg);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EulerMaruyamaStep)->Arg(1000)->Arg(10000);

void BM_ClassicalMetrics(benchmark::State& state) {
  SLConfig cfg = SLConfig::from_quantum(dimer(1e-6));
  cfg.members = 10000;
  const SLEnsemble ens = initial_ensemble(cfg);
  for (auto _ : state) benchmark::DoNotOptimize(classical_metrics(ens, cfg.freqs, 1.0 / cfg.temperature));
}
BENCHMARK(BM_ClassicalMetrics);

}  // namespace
BENCHMARK_MAIN();
