// Copyright 2026 The WADC Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "wadc/analysis.hpp"
#include "wadc/sgdmax.hpp"

using namespace wadc;

namespace {

struct Setup {
  DiscreteSystem sys;
  CostWeights w;
  ScenarioTemplate tmpl;
  NoiseMoments mom;
  SparsityMask mask;
  MatrixXd k;

  Setup() {
    const BuiltinSystem bs = builtin_system("two-area");
    sys = discretize(build_continuous(bs.net, bs.op), 0.01);
    w = CostWeights::identity(16, 6);
    tmpl.horizon = 2000;
    tmpl.impulse_scale = 0.1;
    tmpl.max_delay_s = 0.1;
    tmpl.noise = NoiseModel::diagonal(16, {1, 5, 9, 13}, 0.18);
    mom = compute_moments(tmpl.noise, w.q);
    mask = mask_from_graph(CommGraph::complete(4, 2));
    k = initial_gain(sys, w, mask);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

Parallelism mode(const benchmark::State& st) { return st.range(0) ? Parallelism::OpenMP : Parallelism::Serial; }

void BM_MonteCarloEvaluate(benchmark::State& st) {
  const Setup& s = setup();
  const MonteCarloEvaluator ev(s.sys, s.w, s.mom, s.tmpl, 16, mode(st));
  std::uint64_t seed = 0;
  for (auto _ : st) benchmark::DoNotOptimize(ev.evaluate(s.k, seed++));
}

void BM_AverageGradient(benchmark::State& st) {
  const Setup& s = setup();
  const MonteCarloEvaluator ev(s.sys, s.w, s.mom, s.tmpl, 1);
  const Objective obj = make_objective(ev, RiskConfig{});
  ZopgConfig cfg;
  cfg.samples = 16;
  cfg.radius = 0.05;
  int iter = 0;
  for (auto _ : st) benchmark::DoNotOptimize(average_gradient(s.k, s.mask, cfg, obj, 1, iter++, mode(st)));
}

void BM_ScenarioSweep(benchmark::State& st) {
  const Setup& s = setup();
  SweepSetup ss;
  ss.sys = &s.sys;
  ss.weights = s.w;
  ss.moments = s.mom;
  ss.scenarios = s.tmpl;
  ss.parallel = mode(st);
  for (auto _ : st)
    benchmark::DoNotOptimize(scenario_sweep(ss, {s.k}, SweepAxis::Loss, {0.0, 0.05}, 8, 1));
}

}  // namespace

// Argument 0: serial reference, 1: OpenMP.
BENCHMARK(BM_MonteCarloEvaluate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AverageGradient)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScenarioSweep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
