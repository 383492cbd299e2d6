#include "nonmono/analysis.hpp"
#include "nonmono/problems.hpp"
#include "nonmono/solver.hpp"

#include <benchmark/benchmark.h>

using namespace nonmono;

namespace {

std::vector<StepsizePlan> saddle_plans(const Instance& inst, int count) {
  std::vector<StepsizePlan> plans;
  for (int i = 0; i < count; ++i) {
    PlanRequest r;
    r.gamma = 0.05 + 0.9 * i / count;
    r.tau_max = true;
    plans.push_back(plan_for(inst, r));
  }
  return plans;
}

std::vector<std::pair<double, double>> saddle_steps(int count) {
  std::vector<std::pair<double, double>> steps;
  for (int i = 0; i < count; ++i) {
    const double g = 0.02 + 0.96 * i / count;
    steps.emplace_back(g, 1.0 / (4.0 * g));
  }
  return steps;
}

void BM_Sweep(benchmark::State& state) {
  const Instance inst = builtin("saddle");
  const auto plans = saddle_plans(inst, static_cast<int>(state.range(0)));
  const VectorXd x0 = VectorXd::Constant(2, 0.5), y0 = VectorXd::Constant(3, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(sweep(inst.problem, plans, x0, y0));
}

void BM_SweepSerial(benchmark::State& state) {
  const Instance inst = builtin("saddle");
  const auto plans = saddle_plans(inst, static_cast<int>(state.range(0)));
  const VectorXd x0 = VectorXd::Constant(2, 0.5), y0 = VectorXd::Constant(3, -0.2);
  for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(inst.problem, plans, x0, y0));
}

void BM_Scan(benchmark::State& state) {
  const Instance inst = builtin("saddle");
  const auto steps = saddle_steps(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_tight_lambda(inst.problem, steps, true));
}

void BM_ScanSerial(benchmark::State& state) {
  const Instance inst = builtin("saddle");
  const auto steps = saddle_steps(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(scan_tight_lambda_serial(inst.problem, steps, true));
}

void BM_QpIndefRun(benchmark::State& state) {
  const Instance inst = builtin("qp-indef");
  const StepsizePlan plan = plan_for(inst);
  for (auto _ : state) benchmark::DoNotOptimize(run(inst.problem, plan, VectorXd::Zero(3), VectorXd::Zero(2)));
}

}  // namespace

BENCHMARK(BM_Sweep)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Scan)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanSerial)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QpIndefRun)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
