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

#include "wadc/sgdmax.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <chrono>
#include <memory>
#include <ostream>

#include "wadc/error.hpp"

namespace wadc {

void ZopgConfig::validate() const {
  if (!(radius > 0.0)) throw ValidationError("smoothing radius must be positive");
  if (samples < 1) throw ValidationError("at least one ZOPG sample is required");
  if (!(grad_clip > 0.0)) throw ValidationError("gradient clip must be positive");
}

void TrainConfig::validate() const {
  if (!(eta > 0.0)) throw ValidationError("step size must be positive");
  if (iters < 0) throw ValidationError("iteration count must be nonnegative");
  if (moment_refresh < 0) throw ValidationError("moment refresh period must be nonnegative");
  if (log_every < 1) throw ValidationError("log cadence must be at least 1");
}

MatrixXd sample_sphere(const SparsityMask& mask, std::uint64_t seed) {
  if (mask.count() == 0) throw ValidationError("sparsity mask admits no entries");
  MatrixXd u = MatrixXd::Zero(mask.rows(), mask.cols());
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int r = 0; r < mask.rows(); ++r)
    for (int c = 0; c < mask.cols(); ++c)
      if (mask(r, c)) u(r, c) = normal(rng);
  const double nrm = u.norm();
  if (nrm == 0.0) return sample_sphere(mask, splitmix64(seed));
  return u / nrm;
}

MatrixXd zopg_estimate(const MatrixXd& u, double phi_perturbed, double radius, int n_free) {
  return (static_cast<double>(n_free) / radius * phi_perturbed) * u;
}

GradientResult average_gradient(const MatrixXd& k, const SparsityMask& mask, const ZopgConfig& cfg,
                                const Objective& objective, std::uint64_t root, int iter,
                                Parallelism par) {
  cfg.validate();
  const int m = cfg.samples;
  const auto j = static_cast<std::uint64_t>(iter);
  const std::uint64_t eval_seed = derive_seed(root, {stream::kEval, j});
  std::vector<MatrixXd> us(m);
  std::vector<OracleResult> res(m);
  auto one = [&](int s) {
    us[s] = sample_sphere(mask, derive_seed(root, {stream::kSphere, j, static_cast<std::uint64_t>(s)}));
    res[s] = objective(k + cfg.radius * us[s], eval_seed);
  };
  if (par == Parallelism::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < m; ++s) one(s);
  } else {
    for (int s = 0; s < m; ++s) one(s);
  }
  const double base = cfg.baseline ? objective(k, eval_seed).phi : 0.0;

  GradientResult out;
  const int n_free = mask.count();
  const Eigen::Index size = k.size();
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(size));
  CompensatedSum phi_acc, rc_acc;
  int n_stable = 0, n_upper = 0;
  for (int s = 0; s < m; ++s) {
    const double coef = static_cast<double>(n_free) / cfg.radius * (res[s].phi - base);
    const double* up = us[s].data();
    for (Eigen::Index e = 0; e < size; ++e)
      if (up[e] != 0.0) acc[e].add(coef * up[e]);
    phi_acc.add(res[s].phi);
    if (res[s].lambda > 0.0) ++n_upper;
    if (res[s].stable) {
      ++n_stable;
      rc_acc.add(res[s].rc);
    }
  }
  out.g = MatrixXd::Zero(k.rows(), k.cols());
  for (Eigen::Index e = 0; e < size; ++e) out.g.data()[e] = acc[e].value() / m;
  out.mean_phi = phi_acc.value() / m;
  out.lambda_frac = static_cast<double>(n_upper) / m;
  out.mean_rc = n_stable > 0 ? rc_acc.value() / n_stable : kDivergencePenalty;
  out.n_unstable = m - n_stable;
  out.raw_norm = out.g.norm();
  if (out.raw_norm > cfg.grad_clip) out.g *= cfg.grad_clip / out.raw_norm;
  return out;
}

void check_feasible_start(const DiscreteSystem& sys, const MatrixXd& k, const SparsityMask& mask) {
  if (k.rows() != sys.input_dim() || k.cols() != sys.state_dim())
    throw ValidationError("initial gain shape does not match the system");
  if (!mask.admits(k)) throw ValidationError("initial gain violates the sparsity mask");
  const double rho = spectral_radius(sys.a - sys.b * k);
  if (!(rho < 1.0))
    throw InfeasibleStart(fmt::format("initial gain does not stabilize the undelayed loop "
                                      "(spectral radius {:.6f})", rho),
                          rho);
}

MatrixXd initial_gain(const DiscreteSystem& sys, const CostWeights& w, const SparsityMask& mask) {
  const MatrixXd zero = MatrixXd::Zero(sys.input_dim(), sys.state_dim());
  const double rho0 = spectral_radius(sys.a);
  if (rho0 < 1.0 - 1e-9) return zero;
  MatrixXd dense = solve_dare(sys.a, sys.b, w.q, w.r).gain;
  mask.project(dense);
  double best = rho0;
  for (double alpha : {1.0, 0.5, 0.25}) {
    const MatrixXd k = alpha * dense;
    const double rho = spectral_radius(sys.a - sys.b * k);
    if (rho < 1.0) return k;
    best = std::min(best, rho);
  }
  throw InfeasibleStart(fmt::format("no stabilizing starting gain found on the sparsity pattern "
                                    "(best spectral radius {:.6f})", best),
                        best);
}

TrainLog descend(const MatrixXd& k0, const SparsityMask& mask, const TrainConfig& cfg,
                 const GradientOracle& oracle, const IterateHook& hook) {
  cfg.validate();
  GainMatrix k(k0, mask);
  TrainLog log;
  log.k_initial = k0;
  const auto start = std::chrono::steady_clock::now();
  if (hook) hook(0, k.k());
  for (int j = 0; j < cfg.iters; ++j) {
    const GradientResult g = oracle(k.k(), j);
    k.step(g.g, cfg.eta);
    if (hook) hook(j + 1, k.k());
    if (j % cfg.log_every == 0 || j + 1 == cfg.iters) {
      TrainLogEntry e;
      e.iter = j;
      e.phi = g.mean_phi;
      e.lambda_frac = g.lambda_frac;
      e.grad_norm = g.raw_norm;
      e.rc_est = g.mean_rc;
      e.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      log.entries.push_back(e);
    }
  }
  log.k_final = k.k();
  return log;
}

namespace {

std::unique_ptr<Evaluator> make_evaluator(const TrainProblem& p, const NoiseMoments& moments) {
  if (p.backend == EvalBackend::Analytic)
    return std::make_unique<AnalyticEvaluator>(*p.sys, p.weights, moments);
  return std::make_unique<MonteCarloEvaluator>(*p.sys, p.weights, moments, p.scenarios, p.rollouts,
                                               Parallelism::Serial);
}

}  // namespace

TrainLog train(const TrainProblem& problem, const TrainConfig& cfg, const ZopgConfig& zopg,
               const RiskConfig& risk, const IterateHook& hook) {
  if (problem.sys == nullptr) throw ValidationError("training problem has no system");
  const DiscreteSystem& sys = *problem.sys;
  cfg.validate();
  zopg.validate();
  risk.validate();
  const MatrixXd k0 = cfg.k0 ? *cfg.k0 : initial_gain(sys, problem.weights, problem.mask);
  check_feasible_start(sys, k0, problem.mask);

  NoiseMoments moments = problem.moments;
  std::unique_ptr<Evaluator> eval = make_evaluator(problem, moments);
  Objective objective = make_objective(*eval, risk);
  const bool refresh = cfg.moments == MomentSource::Effective && cfg.moment_refresh > 0;

  GradientOracle oracle = [&](const MatrixXd& k, int iter) {
    if (refresh && iter % cfg.moment_refresh == 0) {
      moments = estimate_effective_moments(sys, k, problem.scenarios, problem.weights.q,
                                           cfg.moment_rollouts,
                                           derive_seed(cfg.seed, {stream::kMoments, static_cast<std::uint64_t>(iter)}));
      eval = make_evaluator(problem, moments);
      objective = make_objective(*eval, risk);
    }
    return average_gradient(k, problem.mask, zopg, objective, cfg.seed, iter, problem.parallel);
  };
  TrainLog log = descend(k0, problem.mask, cfg, oracle, hook);
  log.moments = moments;
  return log;
}

void write_trainlog_csv(std::ostream& os, const TrainLog& log) {
  os << "iter,phi,lambda_frac,grad_norm,rc_est\n";
  for (const TrainLogEntry& e : log.entries)
    fmt::print(os, "{},{:.17g},{:.17g},{:.17g},{:.17g}\n", e.iter, e.phi, e.lambda_frac, e.grad_norm,
               e.rc_est);
}

}  // namespace wadc
