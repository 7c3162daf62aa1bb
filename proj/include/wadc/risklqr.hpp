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
#include <json.hpp>
#include <memory>
#include <string>

#include "wadc/problem.hpp"
#include "wadc/sim.hpp"

namespace wadc {

/// Value reported for unstable or diverged evaluations.
inline constexpr double kDivergencePenalty = 1e9;

struct RiskConfig {
  double c = 0.5;             // risk tolerance
  double lambda_max = 100.0;  // multiplier bound; 0 gives the risk-neutral problem
  void validate() const;
};

enum class Parallelism { Serial, OpenMP };

/// Closed-form moments of a Gaussian model, or sample moments of an
/// empirical one (with standard errors).
NoiseMoments compute_moments(const NoiseModel& noise, const MatrixXd& q);

/// Sample moments of the columns of `samples` under weight `q`.
NoiseMoments moments_from_samples(const MatrixXd& samples, const MatrixXd& q);

/// Gaussian moments estimated from `n_samples` seeded draws; the test
/// oracle for the closed form.
NoiseMoments sample_gaussian_moments(const NoiseModel& noise, const MatrixXd& q, long n_samples,
                                     std::uint64_t seed);

/// Stationary covariance and mean of x+ = (A - BK) x + xi.
struct SteadyState {
  bool stable = false;
  double spectral_radius = 0.0;
  MatrixXd sigma;
  VectorXd mean;
  double residual = 0.0;  // relative Lyapunov residual
};

SteadyState steady_state(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments);

/// tr((Q + K'RK)(Sigma + xbar xbar')); +inf when A - BK is unstable.
double eval_R0_analytic(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments,
                        const CostWeights& w);

/// 4 tr(QWQ (Sigma + xbar xbar')) + 4 xbar' Q M3; +inf when unstable.
double eval_Rc_analytic(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments,
                        const MatrixXd& q);

/// Lagrangian through the weighted matrix Q + 4 lambda QWQ.
double eval_lagrangian(const DiscreteSystem& sys, const MatrixXd& k, double lambda,
                       const NoiseMoments& moments, const CostWeights& w, double c_bar);

struct CostEstimate {
  double r0 = 0.0;
  double rc = 0.0;  // quadratic risk form, comparable with c_bar
  bool stable = true;
};

struct OracleResult {
  double lambda = 0.0;
  double phi = 0.0;
  double r0 = 0.0;
  double rc = 0.0;
  bool stable = true;
};

/// Inner maximization over [0, lambda_max]: lambda' = 0 when rc <= c_bar,
/// lambda_max otherwise.
OracleResult max_oracle(const CostEstimate& est, double c_bar, double lambda_max);

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual CostEstimate evaluate(const MatrixXd& k, std::uint64_t seed) const = 0;
  virtual const CostWeights& weights() const = 0;
  virtual const NoiseMoments& moments() const = 0;
  double c_bar(double c) const { return moments().c_bar(c, weights().q); }
};

/// Lyapunov-based costs of the undelayed closed loop.
class AnalyticEvaluator final : public Evaluator {
 public:
  AnalyticEvaluator(const DiscreteSystem& sys, CostWeights w, NoiseMoments moments);
  CostEstimate evaluate(const MatrixXd& k, std::uint64_t seed) const override;
  const CostWeights& weights() const override { return w_; }
  const NoiseMoments& moments() const override { return moments_; }

 private:
  const DiscreteSystem& sys_;
  CostWeights w_;
  NoiseMoments moments_;
};

/// Rollout averages over `rollouts` scenarios of `tmpl` rooted at the seed
/// passed to evaluate(). The risk figure converts the sampled conditional
/// variance to the quadratic form by adding 4 tr((WQ)^2) - m4.
class MonteCarloEvaluator final : public Evaluator {
 public:
  MonteCarloEvaluator(const DiscreteSystem& sys, CostWeights w, NoiseMoments moments,
                      ScenarioTemplate tmpl, int rollouts, Parallelism par = Parallelism::Serial);
  CostEstimate evaluate(const MatrixXd& k, std::uint64_t seed) const override;
  const CostWeights& weights() const override { return w_; }
  const NoiseMoments& moments() const override { return moments_; }

 private:
  const DiscreteSystem& sys_;
  CostWeights w_;
  NoiseMoments moments_;
  ScenarioTemplate tmpl_;
  int rollouts_;
  Parallelism par_;
};

/// Phi(K) together with the maximizing multiplier.
using Objective = std::function<OracleResult(const MatrixXd& k, std::uint64_t seed)>;

/// Objective backed by `eval` (which must outlive the result).
Objective make_objective(const Evaluator& eval, const RiskConfig& risk);

double eval_phi(const Evaluator& eval, const MatrixXd& k, const RiskConfig& risk, std::uint64_t seed);

/// Moments of xi' = x_{t+1} - (A - BK) x_t along delayed, lossy rollouts,
/// which folds the delay-induced input error into the perturbation.
NoiseMoments estimate_effective_moments(const DiscreteSystem& sys, const MatrixXd& k,
                                        const ScenarioTemplate& tmpl, const MatrixXd& q,
                                        int rollouts, std::uint64_t seed);

nlohmann::json moments_to_json(const NoiseMoments& m, double c, const MatrixXd& q,
                               const std::string& policy);
NoiseMoments moments_from_json(const nlohmann::json& j);

}  // namespace wadc
