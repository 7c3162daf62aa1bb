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

#include "wadc/sim.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <Eigen/Eigenvalues>
#include <numbers>
#include <ostream>

#include "wadc/error.hpp"

namespace wadc {

NoiseModel NoiseModel::none(int n) { return gaussian(VectorXd::Zero(n), MatrixXd::Zero(n, n)); }

NoiseModel NoiseModel::gaussian(VectorXd mean, MatrixXd cov) {
  NoiseModel m;
  m.kind = NoiseKind::Gaussian;
  m.mean = std::move(mean);
  m.cov = std::move(cov);
  m.validate();
  return m;
}

NoiseModel NoiseModel::diagonal(int n, const std::vector<int>& indices, double sigma) {
  MatrixXd cov = MatrixXd::Zero(n, n);
  for (int i : indices) {
    if (i < 0 || i >= n) throw ValidationError("noise index out of range");
    cov(i, i) = sigma * sigma;
  }
  return gaussian(VectorXd::Zero(n), std::move(cov));
}

NoiseModel NoiseModel::empirical(MatrixXd samples) {
  if (samples.cols() < 1) throw ValidationError("empirical noise needs at least one sample");
  NoiseModel m;
  m.kind = NoiseKind::Empirical;
  m.mean = samples.rowwise().mean();
  const MatrixXd centered = samples.colwise() - m.mean;
  m.cov = centered * centered.transpose() / static_cast<double>(samples.cols());
  m.samples = std::move(samples);
  return m;
}

int NoiseModel::dim() const { return static_cast<int>(mean.size()); }

bool NoiseModel::is_zero() const {
  if (kind == NoiseKind::Empirical) return samples.size() == 0 || samples.isZero(0.0);
  return mean.isZero(0.0) && cov.isZero(0.0);
}

void NoiseModel::validate() const {
  const int n = dim();
  if (cov.rows() != n || cov.cols() != n) throw ValidationError("noise covariance has the wrong shape");
  if (!cov.allFinite() || !mean.allFinite()) throw ValidationError("noise model must be finite");
  if (kind == NoiseKind::Gaussian && (!is_symmetric(cov) || !is_psd(cov)))
    throw ValidationError("noise covariance must be symmetric positive semidefinite");
  if (kind == NoiseKind::Empirical && samples.rows() != n)
    throw ValidationError("empirical noise samples have the wrong dimension");
}

NoiseSampler::NoiseSampler(const NoiseModel& model, std::uint64_t seed)
    : model_(model), rng_(seed), zero_(model.is_zero()) {
  if (zero_ || model.kind != NoiseKind::Gaussian) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(model.cov);
  const VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  factor_ = es.eigenvectors() * ev.asDiagonal();
  z_.resize(model.dim());
}

void NoiseSampler::draw(VectorXd& out) {
  const int n = model_.dim();
  if (zero_) {
    out.setZero(n);
    return;
  }
  if (model_.kind == NoiseKind::Empirical) {
    std::uniform_int_distribution<Eigen::Index> pick(0, model_.samples.cols() - 1);
    out = model_.samples.col(pick(rng_));
    return;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < n; ++i) z_(i) = normal(rng_);
  out = model_.mean;
  out.noalias() += factor_ * z_;
}

std::vector<int> default_impulse_indices(const DiscreteSystem& sys) {
  std::vector<int> idx;
  if (sys.block_size == 4 && sys.n_blocks * 4 == sys.state_dim()) {
    for (int i = 0; i < sys.n_blocks; ++i) idx.push_back(4 * i + 1);
  } else {
    for (int i = 0; i < sys.state_dim(); ++i) idx.push_back(i);
  }
  return idx;
}

VectorXd impulse_init(int n, const std::vector<int>& indices, double scale, std::uint64_t seed) {
  if (!(scale >= 0.0)) throw ValidationError("impulse scale must be nonnegative");
  VectorXd x0 = VectorXd::Zero(n);
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int i : indices) {
    if (i < 0 || i >= n) throw ValidationError("impulse index out of range");
    x0(i) = scale * unit(rng);
  }
  return x0;
}

ScenarioConfig make_scenario(const ScenarioTemplate& tmpl, const DiscreteSystem& sys,
                             std::uint64_t root, std::uint64_t index) {
  const int n = sys.state_dim();
  ScenarioConfig cfg;
  cfg.horizon = tmpl.horizon;
  const auto indices = tmpl.impulse_indices.empty() ? default_impulse_indices(sys) : tmpl.impulse_indices;
  cfg.x0 = impulse_init(n, indices, tmpl.impulse_scale, derive_seed(root, {index, stream::kImpulse}));
  const std::uint64_t delay_seed = derive_seed(root, {index, stream::kDelay});
  if (tmpl.per_link_delay)
    cfg.delays = sample_link_delays(tmpl.max_delay_s, sys.dt, sys.input_dim(), sys.n_blocks, delay_seed);
  else
    cfg.delays = sample_delays(tmpl.max_delay_s, sys.dt, sys.n_blocks, delay_seed);
  cfg.loss = tmpl.loss;
  cfg.loss_seed = derive_seed(root, {index, stream::kLoss});
  cfg.noise = tmpl.noise.dim() == 0 ? NoiseModel::none(n) : tmpl.noise;
  if (cfg.noise.dim() != n) throw ValidationError("noise model dimension does not match the system");
  cfg.noise_seed = derive_seed(root, {index, stream::kNoise});
  return cfg;
}

Trajectory rollout(const DiscreteSystem& sys, const MatrixXd& k, const ScenarioConfig& cfg) {
  Trajectory traj;
  traj.x.reserve(cfg.horizon + 1);
  traj.u.reserve(cfg.horizon);
  traj.x.push_back(cfg.x0);
  const RolloutStatus st = rollout_visit(
      sys, k, cfg, [&](int, const VectorXd&, const VectorXd& u, const VectorXd& next, const VectorXd&) {
        traj.u.push_back(u);
        traj.x.push_back(next);
      });
  traj.diverged = st.diverged;
  traj.diverged_at = st.diverged_at;
  return traj;
}

void annotate_costs(Trajectory& traj, const CostWeights& w) {
  const int t_len = traj.steps();
  traj.state_cost.resize(t_len);
  traj.input_cost.resize(t_len);
  for (int t = 0; t < t_len; ++t) {
    traj.state_cost[t] = traj.x[t].dot(w.q * traj.x[t]);
    traj.input_cost[t] = traj.u[t].dot(w.r * traj.u[t]);
  }
}

double lqr_cost(const Trajectory& traj, const CostWeights& w) {
  const int t_len = traj.steps();
  if (t_len == 0) return 0.0;
  CompensatedSum s;
  for (int t = 0; t < t_len; ++t) {
    s.add(traj.x[t].dot(w.q * traj.x[t]));
    s.add(traj.u[t].dot(w.r * traj.u[t]));
  }
  return s.value() / t_len;
}

double risk_sample(const Trajectory& traj, const DiscreteSystem& sys, const MatrixXd& q,
                   const NoiseMoments& moments) {
  const int t_len = traj.steps();
  if (t_len == 0) return 0.0;
  const double trqw = (q * moments.w).trace();
  CompensatedSum s;
  VectorXd m(sys.state_dim());
  for (int t = 1; t <= t_len; ++t) {
    m.noalias() = sys.a * traj.x[t - 1];
    m.noalias() += sys.b * traj.u[t - 1];
    m += moments.mean;
    const double d = traj.x[t].dot(q * traj.x[t]) - m.dot(q * m) - trqw;
    s.add(d * d);
  }
  return s.value() / t_len;
}

namespace {

double speed_sq_hz(const VectorXd& x, int unit, int n_units) {
  constexpr double inv2pi = 0.5 / std::numbers::pi;
  if (unit >= 0) {
    const double f = x(4 * unit + 1) * inv2pi;
    return f * f;
  }
  double s = 0.0;
  for (int i = 0; i < n_units; ++i) {
    const double f = x(4 * i + 1) * inv2pi;
    s += f * f;
  }
  return s / n_units;
}

int units_of(const VectorXd& x, int unit) {
  const int n_units = static_cast<int>(x.size()) / 4;
  if (x.size() % 4 != 0 || n_units == 0) throw ValidationError("frequency deviation needs generator states");
  if (unit >= n_units) throw ValidationError("frequency unit index out of range");
  return n_units;
}

}  // namespace

double msfd(const Trajectory& traj, int unit) {
  const int t_len = traj.steps();
  if (t_len == 0) throw ValidationError("trajectory is empty");
  const int n_units = units_of(traj.x[0], unit);
  CompensatedSum s;
  for (int t = 0; t < t_len; ++t) s.add(speed_sq_hz(traj.x[t], unit, n_units));
  return s.value() / t_len;
}

ScenarioResult evaluate_scenario(const DiscreteSystem& sys, const MatrixXd& k,
                                 const ScenarioConfig& cfg, const CostWeights& w,
                                 const NoiseMoments& moments, int msfd_unit) {
  const bool power = sys.block_size == 4 && sys.state_dim() == 4 * sys.n_blocks;
  const int n_units = power ? units_of(cfg.x0, msfd_unit) : 0;
  const double trqw = (w.q * moments.w).trace();
  CompensatedSum state, input, risk, freq;
  VectorXd qx(sys.state_dim()), m(sys.state_dim());
  const RolloutStatus st = rollout_visit(
      sys, k, cfg,
      [&](int, const VectorXd& x, const VectorXd& u, const VectorXd& next, const VectorXd& xi) {
        qx.noalias() = w.q * x;
        state.add(x.dot(qx));
        input.add(u.dot(w.r * u));
        if (power) freq.add(speed_sq_hz(x, msfd_unit, n_units));
        m = next - xi + moments.mean;
        const double d = next.dot(w.q * next) - m.dot(w.q * m) - trqw;
        risk.add(d * d);
      });
  ScenarioResult r;
  const double t_len = cfg.horizon;
  r.state_cost = state.value() / t_len;
  r.objective = (state.value() + input.value()) / t_len;
  r.risk_sample = risk.value() / t_len;
  r.msfd = freq.value() / t_len;
  r.diverged = st.diverged;
  return r;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int n = traj.x.empty() ? 0 : static_cast<int>(traj.x[0].size());
  const int m = traj.u.empty() ? 0 : static_cast<int>(traj.u[0].size());
  const bool costs = static_cast<int>(traj.state_cost.size()) == traj.steps();
  os << "t";
  for (int i = 0; i < n; ++i) os << ",x" << i;
  for (int i = 0; i < m; ++i) os << ",u" << i;
  os << ",state_cost,input_cost\n";
  for (int t = 0; t < traj.steps(); ++t) {
    os << t;
    for (int i = 0; i < n; ++i) fmt::print(os, ",{:.17g}", traj.x[t](i));
    for (int i = 0; i < m; ++i) fmt::print(os, ",{:.17g}", traj.u[t](i));
    if (costs)
      fmt::print(os, ",{:.17g},{:.17g}\n", traj.state_cost[t], traj.input_cost[t]);
    else
      os << ",,\n";
  }
}

}  // namespace wadc
