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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wadc/risklqr.hpp"

namespace wadc {

struct ZopgConfig {
  double radius = 0.1;
  int samples = 100;
  /// Subtract Phi(K) from every sample. Keeps the estimator's mean and
  /// lowers its variance; off by default.
  bool baseline = false;
  double grad_clip = 1e6;  // Frobenius-norm cap on the averaged estimate
  void validate() const;
};

/// Uniform draw from the unit Frobenius sphere restricted to the mask.
MatrixXd sample_sphere(const SparsityMask& mask, std::uint64_t seed);

/// One-point estimate (n_K / r) * phi_perturbed * U, where phi_perturbed is
/// Phi(K + rU) (minus the baseline, when one is used).
MatrixXd zopg_estimate(const MatrixXd& u, double phi_perturbed, double radius, int n_free);

struct GradientResult {
  MatrixXd g;
  double mean_phi = 0.0;     // mean Phi over the perturbed gains
  double lambda_frac = 0.0;  // share of samples with lambda' at its upper bound
  double mean_rc = 0.0;      // mean risk figure over stable samples
  int n_unstable = 0;
  double raw_norm = 0.0;     // norm before clipping
};

/// Average of `samples` estimates at iteration `iter`. Sample s perturbs
/// along U drawn from seed (root, iter, s); all samples of one iteration
/// are evaluated on the scenario seed (root, iter).
GradientResult average_gradient(const MatrixXd& k, const SparsityMask& mask, const ZopgConfig& cfg,
                                const Objective& objective, std::uint64_t root, int iter,
                                Parallelism par = Parallelism::OpenMP);

inline GradientResult average_gradient_serial(const MatrixXd& k, const SparsityMask& mask,
                                              const ZopgConfig& cfg, const Objective& objective,
                                              std::uint64_t root, int iter) {
  return average_gradient(k, mask, cfg, objective, root, iter, Parallelism::Serial);
}

enum class MomentSource { Nominal, Effective };

struct TrainConfig {
  double eta = 1e-4;
  int iters = 15000;
  std::uint64_t seed = 1;
  std::optional<MatrixXd> k0;
  int moment_refresh = 1000;  // iterations between effective-moment updates
  MomentSource moments = MomentSource::Nominal;
  int moment_rollouts = 20;
  int log_every = 1;
  void validate() const;
};

struct TrainLogEntry {
  int iter = 0;
  double phi = 0.0;
  double lambda_frac = 0.0;
  double grad_norm = 0.0;
  double rc_est = 0.0;
  double wall_s = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  MatrixXd k_final;
  MatrixXd k_initial;
  NoiseMoments moments;  // moments in force at the end
};

/// trainlog CSV: iter, phi, lambda_frac, grad_norm, rc_est.
void write_trainlog_csv(std::ostream& os, const TrainLog& log);

enum class EvalBackend { Analytic, MonteCarlo };

/// Everything `train` evaluates against.
struct TrainProblem {
  const DiscreteSystem* sys = nullptr;
  CostWeights weights;
  NoiseMoments moments;
  SparsityMask mask;
  ScenarioTemplate scenarios;
  EvalBackend backend = EvalBackend::MonteCarlo;
  int rollouts = 1;  // per Phi evaluation, Monte-Carlo backend
  Parallelism parallel = Parallelism::OpenMP;
};

/// Zero gain when the open loop is stable; otherwise the dense LQR gain
/// projected onto the mask and scaled by the first of 1, 0.5, 0.25 that
/// stabilizes the undelayed loop. Throws InfeasibleStart otherwise.
MatrixXd initial_gain(const DiscreteSystem& sys, const CostWeights& w, const SparsityMask& mask);

/// Checks mask conformity and undelayed stability of a starting gain.
void check_feasible_start(const DiscreteSystem& sys, const MatrixXd& k, const SparsityMask& mask);

/// Gradient source for the descent loop: (K, iteration) -> estimate.
using GradientOracle = std::function<GradientResult(const MatrixXd& k, int iter)>;
using IterateHook = std::function<void(int iter, const MatrixXd& k)>;

/// K <- K - eta G(K) for cfg.iters iterations starting at k0.
TrainLog descend(const MatrixXd& k0, const SparsityMask& mask, const TrainConfig& cfg,
                 const GradientOracle& oracle, const IterateHook& hook = {});

/// SGDmax with ZOPG on `problem`.
TrainLog train(const TrainProblem& problem, const TrainConfig& cfg, const ZopgConfig& zopg,
               const RiskConfig& risk, const IterateHook& hook = {});

}  // namespace wadc
