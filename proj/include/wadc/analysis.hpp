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

#pragma once

#include <complex>
#include <cstdint>
#include <iosfwd>
#include <json.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wadc/risklqr.hpp"

namespace wadc {

struct ModeReport {
  std::complex<double> discrete;    // eigenvalue of A - BK (0 when built from a continuous value)
  std::complex<double> continuous;  // sigma + j omega
  double freq_hz = 0.0;
  double damping = 0.0;
  bool branch_warning = false;  // discrete eigenvalue on the negative real axis
};

ModeReport mode_from_continuous(std::complex<double> lc);
ModeReport mode_from_discrete(std::complex<double> ld, double dt);

/// Eigenmodes of A - BK in [lo_hz, hi_hz], one per conjugate pair, sorted
/// by frequency.
std::vector<ModeReport> closed_loop_modes(const DiscreteSystem& sys, const MatrixXd& k, double lo_hz,
                                          double hi_hz);

struct Summary {
  double median = 0.0, q1 = 0.0, q3 = 0.0;
  double min = 0.0, max = 0.0;
  double mean = 0.0, variance = 0.0;
  std::size_t count = 0;
};

/// Quartiles by linear interpolation between order statistics; unbiased
/// variance (zero for a single value).
Summary summarize(std::span<const double> values);

nlohmann::json summary_to_json(const Summary& s);

enum class SweepAxis { Delay, Loss, RiskC, OpPerturb };

SweepAxis parse_axis(const std::string& name);
std::string axis_name(SweepAxis axis);

/// Optional network data for rebuilding the model at perturbed injections.
struct NetworkContext {
  NetworkDescription net;
  OperatingPoint op;
};

struct SweepSetup {
  const DiscreteSystem* sys = nullptr;
  CostWeights weights;
  NoiseMoments moments;
  ScenarioTemplate scenarios;
  std::optional<NetworkContext> network;  // required by the op-perturb axis
  int msfd_unit = -1;
  Parallelism parallel = Parallelism::OpenMP;
};

struct SweepRecord {
  double level = 0.0;
  int design = 0;
  int scenario = 0;
  ScenarioResult result;
};

struct SweepStats {
  double level = 0.0;
  int design = 0;
  Summary objective, state_cost, risk_sample, msfd;
  int excluded = 0;  // scenarios dropped at this level (rebuild failure)
  int diverged = 0;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Delay;
  std::vector<SweepRecord> records;  // sorted by (level, design, scenario)
  std::vector<SweepStats> stats;     // one per (level, design)
};

/// Runs `n_scenarios` seeded rollouts for every (level, design). Scenario
/// seeds depend only on (root, scenario), so all levels and designs share
/// impulses, noise and the uniform variates behind delays and losses. On
/// the risk-c axis level i is evaluated for design i only.
SweepResult scenario_sweep(const SweepSetup& setup, const std::vector<MatrixXd>& designs, SweepAxis axis,
                           const std::vector<double>& levels, int n_scenarios, std::uint64_t root);

/// CSV columns: level, design, scenario, objective, state_cost, risk_sample, msfd.
void write_sweep_csv(std::ostream& os, const SweepResult& r);
nlohmann::json sweep_summary_json(const SweepResult& r);

}  // namespace wadc
