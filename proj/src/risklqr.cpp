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

#include "wadc/risklqr.hpp"

#include <cmath>
#include <limits>

#include "wadc/error.hpp"
#include "wadc/network_io.hpp"

namespace wadc {

void RiskConfig::validate() const {
  if (!(c > 0.0) || !std::isfinite(c)) throw ValidationError("risk tolerance c must be positive");
  if (!(lambda_max >= 0.0) || !std::isfinite(lambda_max))
    throw ValidationError("multiplier bound must be finite and nonnegative");
}

namespace {

// Streaming sample moments. `fill(i, e)` writes sample i; it is called in
// index order once per pass.
template <class Fill>
NoiseMoments streaming_moments(int n, long count, const MatrixXd& q, Fill&& fill) {
  if (count < 1) throw ValidationError("moment estimation needs at least one sample");
  if (q.rows() != n || q.cols() != n) throw ValidationError("state weight does not match the noise dimension");
  VectorXd e(n);
  std::vector<CompensatedSum> mean_acc(n);
  for (long i = 0; i < count; ++i) {
    fill(i, e);
    for (int r = 0; r < n; ++r) mean_acc[r].add(e(r));
  }
  NoiseMoments m;
  m.mean.resize(n);
  for (int r = 0; r < n; ++r) m.mean(r) = mean_acc[r].value() / count;

  MatrixXd cov = MatrixXd::Zero(n, n);
  for (long i = 0; i < count; ++i) {
    fill(i, e);
    e -= m.mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(e);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  m.w = cov / static_cast<double>(count);
  const double trwq = (m.w * q).trace();

  VectorXd m3 = VectorXd::Zero(n), m3_sq = VectorXd::Zero(n);
  CompensatedSum m4_acc, m4_sq;
  for (long i = 0; i < count; ++i) {
    fill(i, e);
    e -= m.mean;
    const double s = e.dot(q * e);
    m3 += s * e;
    m3_sq += (s * e).cwiseAbs2();
    const double d = (s - trwq) * (s - trwq);
    m4_acc.add(d);
    m4_sq.add(d * d);
  }
  const double nd = static_cast<double>(count);
  m.m3 = m3 / nd;
  m.m4 = m4_acc.value() / nd;
  if (count > 1) {
    const VectorXd var3 = (m3_sq / nd - m.m3.cwiseAbs2()).cwiseMax(0.0) * (nd / (nd - 1));
    m.m3_stderr = std::sqrt(var3.maxCoeff() / nd);
    const double var4 = std::max(0.0, m4_sq.value() / nd - m.m4 * m.m4) * (nd / (nd - 1));
    m.m4_stderr = std::sqrt(var4 / nd);
  }
  m.samples = count;
  m.source = "empirical";
  return m;
}

double trace_product(const MatrixXd& a, const MatrixXd& b) { return a.cwiseProduct(b.transpose()).sum(); }

}  // namespace

NoiseMoments compute_moments(const NoiseModel& noise, const MatrixXd& q) {
  noise.validate();
  if (noise.kind == NoiseKind::Empirical) return moments_from_samples(noise.samples, q);
  const int n = noise.dim();
  if (q.rows() != n || q.cols() != n) throw ValidationError("state weight does not match the noise dimension");
  NoiseMoments m;
  m.mean = noise.mean;
  m.w = noise.cov;
  m.m3 = VectorXd::Zero(n);
  const MatrixXd wq = m.w * q;
  m.m4 = 2.0 * (wq * wq).trace();
  m.source = "nominal";
  return m;
}

NoiseMoments moments_from_samples(const MatrixXd& samples, const MatrixXd& q) {
  return streaming_moments(static_cast<int>(samples.rows()), samples.cols(), q,
                           [&](long i, VectorXd& e) { e = samples.col(i); });
}

NoiseMoments sample_gaussian_moments(const NoiseModel& noise, const MatrixXd& q, long n_samples,
                                     std::uint64_t seed) {
  std::unique_ptr<NoiseSampler> sampler;
  return streaming_moments(noise.dim(), n_samples, q, [&](long i, VectorXd& e) {
    if (i == 0) sampler = std::make_unique<NoiseSampler>(noise, seed);
    sampler->draw(e);
  });
}

SteadyState steady_state(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments) {
  const int n = sys.state_dim();
  if (k.rows() != sys.input_dim() || k.cols() != n) throw ValidationError("gain shape does not match the system");
  if (moments.dim() != n) throw ValidationError("noise moments do not match the system");
  SteadyState ss;
  const MatrixXd ak = sys.a - sys.b * k;
  ss.spectral_radius = spectral_radius(ak);
  ss.stable = ss.spectral_radius < 1.0;
  if (!ss.stable) return ss;
  ss.sigma = solve_discrete_lyapunov(ak, moments.w);
  ss.residual = lyapunov_residual(ak, ss.sigma, moments.w);
  if (moments.mean.isZero(0.0))
    ss.mean = VectorXd::Zero(n);
  else
    ss.mean = (MatrixXd::Identity(n, n) - ak).partialPivLu().solve(moments.mean);
  return ss;
}

double eval_R0_analytic(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments,
                        const CostWeights& w) {
  const SteadyState ss = steady_state(sys, k, moments);
  if (!ss.stable) return std::numeric_limits<double>::infinity();
  const MatrixXd second = ss.sigma + ss.mean * ss.mean.transpose();
  return trace_product(w.q + k.transpose() * w.r * k, second);
}

double eval_Rc_analytic(const DiscreteSystem& sys, const MatrixXd& k, const NoiseMoments& moments,
                        const MatrixXd& q) {
  const SteadyState ss = steady_state(sys, k, moments);
  if (!ss.stable) return std::numeric_limits<double>::infinity();
  const MatrixXd second = ss.sigma + ss.mean * ss.mean.transpose();
  return 4.0 * trace_product(q * moments.w * q, second) + 4.0 * ss.mean.dot(q * moments.m3);
}

double eval_lagrangian(const DiscreteSystem& sys, const MatrixXd& k, double lambda,
                       const NoiseMoments& moments, const CostWeights& w, double c_bar) {
  const SteadyState ss = steady_state(sys, k, moments);
  if (!ss.stable) return std::numeric_limits<double>::infinity();
  const MatrixXd q_lambda = w.q + 4.0 * lambda * w.q * moments.w * w.q;
  const MatrixXd second = ss.sigma + ss.mean * ss.mean.transpose();
  return trace_product(q_lambda + k.transpose() * w.r * k, second) +
         4.0 * lambda * ss.mean.dot(w.q * moments.m3) - lambda * c_bar;
}

OracleResult max_oracle(const CostEstimate& est, double c_bar, double lambda_max) {
  OracleResult out;
  out.r0 = est.r0;
  out.rc = est.rc;
  out.stable = est.stable && std::isfinite(est.r0) && std::isfinite(est.rc);
  if (!out.stable) {
    out.lambda = lambda_max;
    out.phi = kDivergencePenalty;
    return out;
  }
  out.lambda = est.rc <= c_bar ? 0.0 : lambda_max;
  out.phi = est.r0 + out.lambda * (est.rc - c_bar);
  if (!(out.phi < kDivergencePenalty)) out.phi = kDivergencePenalty;
  return out;
}

AnalyticEvaluator::AnalyticEvaluator(const DiscreteSystem& sys, CostWeights w, NoiseMoments moments)
    : sys_(sys), w_(std::move(w)), moments_(std::move(moments)) {
  moments_.validate();
}

CostEstimate AnalyticEvaluator::evaluate(const MatrixXd& k, std::uint64_t) const {
  const SteadyState ss = steady_state(sys_, k, moments_);
  CostEstimate est;
  est.stable = ss.stable;
  if (!ss.stable) {
    est.r0 = est.rc = std::numeric_limits<double>::infinity();
    return est;
  }
  const MatrixXd second = ss.sigma + ss.mean * ss.mean.transpose();
  est.r0 = trace_product(w_.q + k.transpose() * w_.r * k, second);
  est.rc = 4.0 * trace_product(w_.q * moments_.w * w_.q, second) + 4.0 * ss.mean.dot(w_.q * moments_.m3);
  return est;
}

MonteCarloEvaluator::MonteCarloEvaluator(const DiscreteSystem& sys, CostWeights w, NoiseMoments moments,
                                         ScenarioTemplate tmpl, int rollouts, Parallelism par)
    : sys_(sys), w_(std::move(w)), moments_(std::move(moments)), tmpl_(std::move(tmpl)),
      rollouts_(rollouts), par_(par) {
  if (rollouts_ < 1) throw ValidationError("Monte-Carlo evaluation needs at least one rollout");
  moments_.validate();
}

CostEstimate MonteCarloEvaluator::evaluate(const MatrixXd& k, std::uint64_t seed) const {
  std::vector<ScenarioResult> res(rollouts_);
  auto one = [&](int i) {
    const ScenarioConfig cfg = make_scenario(tmpl_, sys_, seed, static_cast<std::uint64_t>(i));
    res[i] = evaluate_scenario(sys_, k, cfg, w_, moments_);
  };
  if (par_ == Parallelism::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < rollouts_; ++i) one(i);
  } else {
    for (int i = 0; i < rollouts_; ++i) one(i);
  }
  CompensatedSum r0, risk;
  CostEstimate est;
  for (const ScenarioResult& r : res) {
    if (r.diverged) est.stable = false;
    r0.add(r.objective);
    risk.add(r.risk_sample);
  }
  if (!est.stable) {
    est.r0 = est.rc = std::numeric_limits<double>::infinity();
    return est;
  }
  const MatrixXd wq = moments_.w * w_.q;
  est.r0 = r0.value() / rollouts_;
  est.rc = risk.value() / rollouts_ + 4.0 * (wq * wq).trace() - moments_.m4;
  return est;
}

Objective make_objective(const Evaluator& eval, const RiskConfig& risk) {
  risk.validate();
  const double c_bar = eval.c_bar(risk.c);
  const double lambda_max = risk.lambda_max;
  return [&eval, c_bar, lambda_max](const MatrixXd& k, std::uint64_t seed) {
    return max_oracle(eval.evaluate(k, seed), c_bar, lambda_max);
  };
}

double eval_phi(const Evaluator& eval, const MatrixXd& k, const RiskConfig& risk, std::uint64_t seed) {
  return make_objective(eval, risk)(k, seed).phi;
}

NoiseMoments estimate_effective_moments(const DiscreteSystem& sys, const MatrixXd& k,
                                        const ScenarioTemplate& tmpl, const MatrixXd& q,
                                        int rollouts, std::uint64_t seed) {
  if (rollouts < 1) throw ValidationError("moment estimation needs at least one rollout");
  const int n = sys.state_dim();
  const MatrixXd ak = sys.a - sys.b * k;
  std::vector<VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(rollouts) * tmpl.horizon);
  for (int i = 0; i < rollouts; ++i) {
    const ScenarioConfig cfg = make_scenario(tmpl, sys, derive_seed(seed, {stream::kMoments}),
                                             static_cast<std::uint64_t>(i));
    const RolloutStatus st = rollout_visit(
        sys, k, cfg, [&](int, const VectorXd& x, const VectorXd&, const VectorXd& next, const VectorXd&) {
          draws.push_back(next - ak * x);
        });
    if (st.diverged) throw DivergenceError("moment estimation rollout diverged");
  }
  NoiseMoments m = streaming_moments(n, static_cast<long>(draws.size()), q,
                                     [&](long i, VectorXd& e) { e = draws[i]; });
  m.source = "effective";
  return m;
}

nlohmann::json moments_to_json(const NoiseMoments& m, double c, const MatrixXd& q,
                               const std::string& policy) {
  nlohmann::json j;
  j["mean"] = vector_to_json(m.mean);
  j["W"] = matrix_to_json(m.w);
  j["M3"] = vector_to_json(m.m3);
  j["m4"] = m.m4;
  j["c"] = c;
  j["c_bar"] = m.c_bar(c, q);
  j["provenance"] = {{"source", m.source}, {"policy", policy}, {"samples", m.samples},
                     {"m4_stderr", m.m4_stderr}, {"m3_stderr", m.m3_stderr}};
  return j;
}

NoiseMoments moments_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("moments file must be a JSON object");
  NoiseMoments m;
  m.mean = vector_from_json(j.at("mean"), "mean");
  m.w = matrix_from_json(j.at("W"), "W");
  m.m3 = vector_from_json(j.at("M3"), "M3");
  m.m4 = j.at("m4").get<double>();
  if (j.contains("provenance")) {
    const auto& p = j["provenance"];
    m.source = p.value("source", std::string("nominal"));
    m.samples = p.value("samples", 0L);
    m.m4_stderr = p.value("m4_stderr", 0.0);
    m.m3_stderr = p.value("m3_stderr", 0.0);
  }
  m.validate();
  return m;
}

}  // namespace wadc
