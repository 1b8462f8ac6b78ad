// OpenMP kernels against their serial references.
#include <benchmark/benchmark.h>

#include <cmath>

#include "cqpolar/channel_io.hpp"
#include "cqpolar/code.hpp"
#include "cqpolar/decoder.hpp"
#include "cqpolar/inequalities.hpp"
#include "cqpolar/polarize.hpp"

using namespace cqpolar;

namespace {

CqChannel pure_pair(double overlap) {
  PresetParams p;
  p.angles = {0.0, std::acos(overlap)};
  return make_preset("pure-states", p);
}

CqChannel random_z3() {
  PresetParams p;
  p.q = 3;
  p.k = 2;
  p.seed = 4;
  return make_preset("random", p);
}

void BM_ScanTree(benchmark::State& st) {
  const auto w = random_z3();
  for (auto _ : st) benchmark::DoNotOptimize(polarization_scan(w, static_cast<int>(st.range(0))));
}

void BM_ScanSerial(benchmark::State& st) {
  const auto w = random_z3();
  for (auto _ : st) benchmark::DoNotOptimize(polarization_scan_serial(w, static_cast<int>(st.range(0))));
}

CodePlan bench_plan(const CqChannel& w) {
  CodeParams p;
  p.n = 3;
  p.tau = 0.25;
  p.delta = 0.69;
  return build_plan(w, p);
}

void BM_DecodeParallel(benchmark::State& st) {
  const auto w = pure_pair(0.5);
  const auto plan = bench_plan(w);
  ExperimentOptions o;
  o.trials = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(error_experiment(w, plan, o));
}

void BM_DecodeSerial(benchmark::State& st) {
  const auto w = pure_pair(0.5);
  const auto plan = bench_plan(w);
  ExperimentOptions o;
  o.trials = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(error_experiment_serial(w, plan, o));
}

void BM_FuzzParallel(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_all(1, static_cast<int>(st.range(0))));
}

void BM_FuzzSerial(benchmark::State& st) {
  for (auto _ : st) benchmark::DoNotOptimize(run_all_serial(1, static_cast<int>(st.range(0))));
}

}  // namespace

BENCHMARK(BM_ScanTree)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanSerial)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeParallel)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DecodeSerial)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzParallel)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzSerial)->Arg(10)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
