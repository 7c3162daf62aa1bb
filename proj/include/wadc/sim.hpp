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

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wadc/comms.hpp"
#include "wadc/error.hpp"
#include "wadc/netmodel.hpp"
#include "wadc/problem.hpp"
#include "wadc/seed.hpp"

namespace wadc {

enum class NoiseKind { Gaussian, Empirical };

/// Additive process perturbation xi_t. The empirical kind resamples columns
/// of `samples` uniformly with replacement.
struct NoiseModel {
  NoiseKind kind = NoiseKind::Gaussian;
  VectorXd mean;
  MatrixXd cov;
  MatrixXd samples;  // one draw per column

  static NoiseModel none(int n);
  static NoiseModel gaussian(VectorXd mean, MatrixXd cov);
  /// Zero-mean Gaussian with variance sigma^2 on the listed states.
  static NoiseModel diagonal(int n, const std::vector<int>& indices, double sigma);
  static NoiseModel empirical(MatrixXd samples);

  int dim() const;
  bool is_zero() const;
  void validate() const;
};

class NoiseSampler {
 public:
  NoiseSampler(const NoiseModel& model, std::uint64_t seed);
  /// Writes the next draw into `out` (resized on first use).
  void draw(VectorXd& out);

 private:
  const NoiseModel& model_;
  Rng rng_;
  MatrixXd factor_;  // factor * factor' = cov
  VectorXd z_;
  bool zero_;
};

/// Everything needed to reproduce one closed-loop run.
struct ScenarioConfig {
  int horizon = 2000;
  VectorXd x0;
  DelayProfile delays;
  PacketLossModel loss;
  std::uint64_t loss_seed = 0;
  NoiseModel noise;
  std::uint64_t noise_seed = 0;
};

/// Recipe for a family of scenarios; instances differ only in their seeds.
struct ScenarioTemplate {
  int horizon = 2000;
  double impulse_scale = 0.0;
  std::vector<int> impulse_indices;  // empty: speed states of every unit
  double max_delay_s = 0.0;
  bool per_link_delay = false;
  PacketLossModel loss;
  NoiseModel noise;
};

/// Speed-deviation indices (1, 5, 9, ...) for power-system models, every
/// state otherwise.
std::vector<int> default_impulse_indices(const DiscreteSystem& sys);

/// x0 with the listed components i.i.d. uniform in [-scale, scale].
VectorXd impulse_init(int n, const std::vector<int>& indices, double scale, std::uint64_t seed);

/// Scenario `index` of the family rooted at `root`. Seeds depend only on
/// (root, index) so that every level of a sweep and every design sees the
/// same impulses, noise and uniform variates.
ScenarioConfig make_scenario(const ScenarioTemplate& tmpl, const DiscreteSystem& sys,
                             std::uint64_t root, std::uint64_t index);

inline constexpr double kDivergenceBound = 1e6;

struct RolloutStatus {
  bool diverged = false;
  int diverged_at = -1;  // first step whose successor state left the bound
};

/// Core loop: x_{t+1} = A x_t + B u_t + xi_t with u_t from the delayed,
/// lossy feedback channel. `visit(t, x_t, u_t, x_{t+1}, xi_t)` runs for
/// every completed step. Stops early when the state leaves the divergence bound.
template <class Visitor>
RolloutStatus rollout_visit(const DiscreteSystem& sys, const MatrixXd& k, const ScenarioConfig& cfg,
                            Visitor&& visit);

struct Trajectory {
  std::vector<VectorXd> x;  // x_0 .. x_T (shorter when diverged)
  std::vector<VectorXd> u;  // u_0 .. u_{T-1}
  std::vector<double> state_cost;  // x_t' Q x_t, filled by annotate_costs
  std::vector<double> input_cost;  // u_t' R u_t
  bool diverged = false;
  int diverged_at = -1;

  int steps() const { return static_cast<int>(u.size()); }
};

Trajectory rollout(const DiscreteSystem& sys, const MatrixXd& k, const ScenarioConfig& cfg);

/// Fills the per-step cost columns for t = 0 .. T-1.
void annotate_costs(Trajectory& traj, const CostWeights& w);

/// (1/T) sum_{t<T} (x_t' Q x_t + u_t' R u_t).
double lqr_cost(const Trajectory& traj, const CostWeights& w);

/// (1/T) sum_{t=1..T} (x_t' Q x_t - m' Q m - tr(Q W))^2 with the one-step
/// predictor m = A x_{t-1} + B u_{t-1} + xi_bar.
double risk_sample(const Trajectory& traj, const DiscreteSystem& sys, const MatrixXd& q,
                   const NoiseMoments& moments);

/// Mean squared frequency deviation (Hz^2) of one unit's speed state, or
/// the average over all units when `unit` < 0.
double msfd(const Trajectory& traj, int unit);

/// Per-rollout figures gathered in a single pass without storing states.
struct ScenarioResult {
  double objective = 0.0;    // lqr_cost
  double state_cost = 0.0;   // (1/T) sum x' Q x
  double risk_sample = 0.0;
  double msfd = 0.0;
  bool diverged = false;
};

ScenarioResult evaluate_scenario(const DiscreteSystem& sys, const MatrixXd& k,
                                 const ScenarioConfig& cfg, const CostWeights& w,
                                 const NoiseMoments& moments, int msfd_unit = -1);

/// CSV with columns t, x0.., u0.., state_cost, input_cost.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

// ---------------------------------------------------------------------------

template <class Visitor>
RolloutStatus rollout_visit(const DiscreteSystem& sys, const MatrixXd& k, const ScenarioConfig& cfg,
                            Visitor&& visit) {
  const int n = sys.state_dim();
  const int m = sys.input_dim();
  if (k.rows() != m || k.cols() != n) throw ValidationError("gain shape does not match the system");
  if (cfg.x0.size() != n) throw ValidationError("initial state has the wrong dimension");
  if (cfg.horizon < 1) throw ValidationError("horizon must be at least one step");

  FeedbackChannel channel(k, sys.n_blocks, sys.block_size, cfg.delays, cfg.loss, cfg.loss_seed, cfg.x0);
  NoiseSampler noise(cfg.noise, cfg.noise_seed);
  VectorXd x = cfg.x0;
  VectorXd next(n), u(m), xi(n);
  RolloutStatus status;
  for (int t = 0; t < cfg.horizon; ++t) {
    channel.control(x, u);
    noise.draw(xi);
    next.noalias() = sys.a * x;
    next.noalias() += sys.b * u;
    next += xi;
    visit(t, static_cast<const VectorXd&>(x), static_cast<const VectorXd&>(u),
          static_cast<const VectorXd&>(next), static_cast<const VectorXd&>(xi));
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceBound) {
      status.diverged = true;
      status.diverged_at = t;
      return status;
    }
    x.swap(next);
  }
  return status;
}

}  // namespace wadc
